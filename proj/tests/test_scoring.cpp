// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "vrl/scoring/scoring.hpp"
#include "scoring_oracle.hpp"

using namespace vrl;
using sim::BlockLocation;
using sim::Orientation;
using testing::add_place_event;
using testing::delivered;
using testing::oracle_score;
using testing::random_final;

TEST_CASE("four correct blocks in one placement, at finish, 60 s") {
    auto w = delivered("00000000", {"F", "F", "F", "F"});
    add_place_event(w, {"b1", "b2", "b3", "b4"});
    w.clock = 60.0;
    auto s = scoring::score_episode(w);
    CHECK(s.total == 10);
    CHECK(s.correct_boxes == 40);
    CHECK(s.batch_bonuses == 10);
    CHECK(s.final_position_bonus == 20);
    CHECK(s.time_penalty == -60);
    CHECK(s.total == oracle_score(w));
}

TEST_CASE("two correct, one misoriented, one outside, 80 s, away from finish") {
    auto w = delivered("00100000", {"F", "P", "F", "O"});
    add_place_event(w, {"b1", "b2", "b3", "b4"});
    w.clock = 80.0;
    w.robot_zone = "U1";
    auto s = scoring::score_episode(w);
    CHECK(s.total == -75);
    CHECK(s.incorrect_boxes == -5);
    CHECK(s.outside_boxes == -10);
    CHECK(s.batch_bonuses == 0);
    CHECK(s.total == oracle_score(w));
}

TEST_CASE("no actions at the finish zone scores only the final position") {
    auto w = sim::init_world(testing::small_field("10101010"), 1);
    auto s = scoring::score_episode(w);
    CHECK(s.total == 20);
    CHECK(s == scoring::ScoreBreakdown{0, 0, 0, 0, 0, 0, 20, 0, 20});
}

TEST_CASE("overtime applies both the per-second and the flat penalty") {
    auto w = sim::init_world(testing::small_field(), 1);
    w.clock = 200.0;
    auto s = scoring::score_episode(w);
    CHECK(s.time_penalty == -200);
    CHECK(s.overtime_penalty == -20);
    CHECK(s.total == -200);
    w.clock = 180.0;
    CHECK(scoring::score_episode(w).overtime_penalty == 0);
    w.clock = 59.99;
    CHECK(scoring::score_episode(w).time_penalty == -59);
}

TEST_CASE("shelf bonus is off by default and configurable") {
    auto w = sim::init_world(testing::small_field(), 1);
    w.shelf_zone = "SH1";
    CHECK(scoring::score_episode(w).shelf_bonus == 0);
    scoring::ScoreRules rules;
    rules.shelf_bonus = 15;
    CHECK(scoring::score_episode(w, rules).total == 35);
}

TEST_CASE("property: score equals the rule-by-rule oracle on 10000 random final states") {
    Rng rng(2024, 11);
    for (int i = 0; i < 10000; ++i) {
        auto w = random_final(rng);
        auto s = scoring::score_episode(w);
        REQUIRE(s.total == oracle_score(w));
        REQUIRE(s.total == s.component_sum());
    }
}

TEST_CASE("property: monotonicity in correct and outside blocks") {
    Rng rng(77, 11);
    for (int i = 0; i < 2000; ++i) {
        auto w = random_final(rng);
        const auto base = scoring::score_episode(w).total;
        // move one block that is not yet correct into U2, BlueUp
        for (auto& b : w.blocks) {
            const bool is_correct = b.location.kind == BlockLocation::Kind::InZone && b.location.zone.rfind("U", 0) == 0 &&
                                    b.location.placement != sim::Placement::Adjacent &&
                                    b.orientation == Orientation::BlueUp;
            if (is_correct) continue;
            auto better = w;
            for (auto& bb : better.blocks) {
                if (bb.block_id == b.block_id) {
                    bb.location = BlockLocation::in_zone("U2");
                    bb.orientation = Orientation::BlueUp;
                }
            }
            CHECK(scoring::score_episode(better).total >= base);
            auto worse = w;
            for (auto& bb : worse.blocks) {
                if (bb.block_id == b.block_id && bb.location.kind != BlockLocation::Kind::OutsideAllZones) {
                    bb.location = BlockLocation::outside();
                }
            }
            CHECK(scoring::score_episode(worse).total <= base);
            break;
        }
    }
}

TEST_CASE("idr examples and convention") {
    CHECK(scoring::idr(4, 4) == 1.0);
    CHECK(scoring::idr(3, 4) == doctest::Approx(0.75));
    CHECK(scoring::idr(0, 0) == 1.0);
}

TEST_CASE("issue matching is one-to-one and respects categories and nodes") {
    using sim::IssueCategory;
    std::vector<sim::GroundTruthIssue> real = {
        {"a", IssueCategory::MisorientedPlacement, bt::NodeId("place"), 1, "", "b1"},
        {"b", IssueCategory::MisorientedPlacement, bt::NodeId("place"), 1, "", "b2"},
        {"c", IssueCategory::ShelfNotRelocated, std::nullopt, 1, "", ""},
        {"d", IssueCategory::PickFailure, bt::NodeId("pick"), 1, "", ""},
    };
    std::vector<scoring::ReportedIssue> reports = {
        {IssueCategory::MisorientedPlacement, bt::NodeId("place"), "b2"},
        {IssueCategory::ShelfNotRelocated, bt::NodeId("anything"), ""},
        {IssueCategory::PickFailure, bt::NodeId("other"), ""},
    };
    auto m = scoring::match_issues(real, reports);
    CHECK(m.real == 4);
    CHECK(m.detected == 2);
    CHECK(m.matched == std::vector<bool>{false, true, true, false});

    reports.push_back({IssueCategory::MisorientedPlacement, bt::NodeId("place"), ""});
    CHECK(scoring::match_issues(real, reports).detected == 3);
}

TEST_CASE("property: idr stays in [0,1] and is 1 when every issue is reported") {
    Rng rng(5, 11);
    for (int i = 0; i < 2000; ++i) {
        std::vector<sim::GroundTruthIssue> real;
        std::vector<scoring::ReportedIssue> reports;
        const auto n = rng.below(6);
        for (std::size_t k = 0; k < n; ++k) {
            const auto cat = sim::all_issue_categories()[rng.below(4)];
            std::optional<bt::NodeId> node;
            if (rng.bernoulli(0.5)) node = "n" + std::to_string(rng.below(3));
            real.push_back({"i" + std::to_string(k), cat, node, 0, "", ""});
        }
        const auto m = rng.below(6);
        for (std::size_t k = 0; k < m; ++k) {
            std::optional<bt::NodeId> node;
            if (rng.bernoulli(0.5)) node = "n" + std::to_string(rng.below(3));
            reports.push_back({sim::all_issue_categories()[rng.below(4)], node, ""});
        }
        auto r = scoring::match_issues(real, reports);
        const double v = scoring::idr(r.detected, r.real);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        std::vector<scoring::ReportedIssue> perfect;
        for (const auto& g : real) perfect.push_back({g.category, g.node, g.block_id});
        CHECK(scoring::idr(scoring::match_issues(real, perfect).detected, real.size()) == 1.0);
    }
}

TEST_CASE("aggregate: means per episode index, NA skipped, ragged rejected") {
    auto rec = [](std::size_t i, int score, std::optional<double> idr) {
        scoring::MetricsRecord r;
        r.episode_index = i;
        r.score = score;
        r.idr = idr;
        return r;
    };
    std::vector<scoring::Series> one = {{"f1", 1, {rec(0, 10, 0.5), rec(1, 12, std::nullopt)}}};
    auto m1 = scoring::aggregate(one, scoring::metric("score"));
    CHECK(*m1[0] == 10.0);
    CHECK(*m1[1] == 12.0);

    std::vector<scoring::Series> two = {{"f1", 1, {rec(0, 10, 0.5)}}, {"f2", 1, {rec(0, 30, std::nullopt)}}};
    CHECK(*scoring::aggregate(two, scoring::metric("score"))[0] == 20.0);
    CHECK(*scoring::aggregate(two, scoring::metric("idr"))[0] == 0.5);
    CHECK_FALSE(scoring::aggregate(one, scoring::metric("idr"))[1].has_value());

    std::vector<scoring::Series> ragged = {{"f1", 1, {rec(0, 1, {}), rec(1, 1, {})}}, {"f2", 1, {rec(0, 1, {})}}};
    CHECK_THROWS_AS(scoring::aggregate(ragged, scoring::metric("score")), scoring::ScoringError);

    std::vector<scoring::Series> grid;
    for (int c = 1; c <= 5; ++c) {
        scoring::Series s{"field-" + std::to_string(c), 1, {}};
        for (std::size_t e = 0; e < 10; ++e) s.records.push_back(rec(e, c, 1.0));
        grid.push_back(s);
    }
    auto means = scoring::aggregate(grid, scoring::metric("score"));
    CHECK(means.size() == 10);
    CHECK(*means[3] == 3.0);
}

TEST_CASE("metric csv layout") {
    scoring::MetricsRecord a;
    a.score = 5;
    scoring::MetricsRecord b;
    b.score = 7;
    std::vector<scoring::Series> s = {{"f1", 3, {a, b}}, {"f2", 4, {b, b}}};
    std::ostringstream os;
    scoring::write_metric_csv(os, s, scoring::metric("score"));
    CHECK(os.str() == "config,seed,1,2\nf1,3,5,7\nf2,4,7,7\nmean,,6,7\n");
    std::ostringstream na;
    scoring::write_metric_csv(na, s, scoring::metric("idr"));
    CHECK(na.str() == "config,seed,1,2\nf1,3,,\nf2,4,,\nmean,,,\n");
}
