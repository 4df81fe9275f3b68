// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <stdlib.h>

#include "vrl/dsl/dsl.hpp"
#include "vrl/runtime/runtime.hpp"
#include "world_fixtures.hpp"

using namespace vrl;
using sim::IssueCategory;
namespace fs = std::filesystem;

namespace {

sim::FaultModel no_faults() {
    sim::FaultModel f;
    f.p_pick_fail = f.p_drop_in_transit = f.p_misrotate = f.p_place_offset = f.p_nav_stall = 0.0;
    return f;
}

struct Harness {
    std::unique_ptr<critic::Critic> critic;
    std::unique_ptr<actor::Actor> actor;
    runtime::Lineage lin;
    std::vector<runtime::Notification> sent;

    Harness(const std::string& critic_spec, const std::string& actor_spec, const sim::FieldConfig& field,
            const sim::FaultModel& faults, std::uint64_t seed = 1) {
        critic = critic::make_critic(critic_spec);
        actor = actor::make_actor(actor_spec);
        lin.run_id = "test";
        lin.config_label = "small";
        lin.run_seed = seed;
        lin.lineage_seed = runtime::lineage_seed(seed, 0);
        lin.field = field;
        lin.fault_model = faults;
        lin.critic = critic.get();
        lin.actor = actor.get();
        lin.notify = [this](const runtime::Notification& n) { sent.push_back(n); };
    }

    runtime::EpisodeResult episode(const std::string& source, std::size_t k = 1) {
        return runtime::run_episode(dsl::parse(source), lin, k);
    }
};

const char* kOptimal = R"((Sequence
  (Sequence (Action NavigateTo zone=L1) (Action PickBlocks count=4) (Action RotateBlocks mask=1010)
            (Action NavigateTo zone=U1) (Action PlaceBlocks))
  (Sequence (Action NavigateTo zone=L2) (Action PickBlocks count=4) (Action RotateBlocks mask=0001)
            (Action NavigateTo zone=U2) (Action PlaceBlocks))
  (Sequence (Action NavigateTo zone=SH0) (Action MoveShelf))
  (Action ReturnToStart)))";

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

runtime::RunConfig small_campaign(const std::string& critic, const std::string& actor) {
    runtime::RunConfig c;
    c.name = "unit";
    c.field_configs = {testing::data_path("fields/field-1.json"), testing::data_path("fields/field-3.json")};
    c.initial_bt = testing::data_path("bt/initial.bt");
    c.episodes_per_config = 4;
    c.seeds = {1, 2};
    c.critic = critic;
    c.actor = actor;
    return c;
}

}  // namespace

TEST_CASE("zero-fault optimal tree: no issues, no alarms, positive score") {
    Harness h("perfect", "rule", testing::small_field("10100001"), no_faults());
    const auto r = h.episode(kOptimal);
    const auto& rec = r.record;
    CHECK(rec.ground_truth_issues.empty());
    CHECK(rec.metrics.alarm_count == 0);
    CHECK(h.sent.empty());
    CHECK(rec.score.total > 0);
    CHECK(rec.score.total == 80 + 20 + 20 - static_cast<int>(rec.final_state.clock));
    CHECK(rec.metrics.idr == 1.0);
    CHECK(rec.refine_rule == "identity");
    CHECK(!rec.degraded);
}

TEST_CASE("a severe drop raises exactly one Intermediate alarm") {
    auto faults = no_faults();
    faults.p_drop_in_transit = 1.0;
    Harness h("perfect", "rule", testing::small_field(), faults);
    const auto r = h.episode(R"((Sequence
  (Sequence (Action NavigateTo zone=L1) (Action PickBlocks count=1) (Action NavigateTo zone=U1))
  (Action NavigateTo zone=L2)
  (Action ReturnToStart)))");
    int intermediate_alarms = 0;
    for (const auto& c : r.record.checkpoints) {
        if (c.mode == sim::Mode::Intermediate && c.alarm_fired) {
            ++intermediate_alarms;
            REQUIRE(c.feedback);
            CHECK(c.feedback->alarm_score > 0.7);
            CHECK(c.subtree == bt::NodeId("$.0"));
        }
    }
    CHECK(intermediate_alarms == 1);
    const auto drops = std::count_if(r.record.ground_truth_issues.begin(), r.record.ground_truth_issues.end(),
                                     [](const sim::GroundTruthIssue& g) {
                                         return g.category == IssueCategory::DropInTransit;
                                     });
    CHECK(drops == 1);
}

TEST_CASE("null critic: no feedback, no alarms, no IDR") {
    Harness h("none", "score-only", testing::small_field("11000000"), sim::FaultModel{});
    const auto r = h.episode(kOptimal);
    CHECK(h.sent.empty());
    CHECK(r.record.metrics.alarm_count == 0);
    CHECK(r.record.metrics.critic_calls == 0);
    CHECK(!r.record.metrics.idr);
    CHECK(!r.record.metrics.alarm_rate);
    for (const auto& c : r.record.checkpoints) CHECK(!c.feedback);
}

TEST_CASE("loop fidelity: Initial, one Intermediate per root child, Final") {
    Harness h("ft-3B-like", "rule", testing::small_field("01100110"), sim::FaultModel{}, 4);
    const auto r = h.episode(kOptimal);
    const auto& cps = r.record.checkpoints;
    REQUIRE(cps.size() >= 3);
    CHECK(cps.front().mode == sim::Mode::Initial);
    CHECK(!cps.front().subtree);
    CHECK(cps.back().mode == sim::Mode::Final);
    const auto tree = dsl::parse(kOptimal);
    const auto& roots = tree.at(tree.root).children;
    REQUIRE(cps.size() - 2 <= roots.size());
    for (std::size_t i = 1; i + 1 < cps.size(); ++i) {
        CHECK(cps[i].mode == sim::Mode::Intermediate);
        CHECK(cps[i].subtree == roots[i - 1]);
    }
    // Trace sequence numbers run unbroken across segments.
    for (std::size_t i = 0; i < r.record.full_trace.size(); ++i) CHECK(r.record.full_trace[i].sequence_no == i);
    CHECK(r.record.metrics.critic_calls == cps.size());
}

TEST_CASE("episode ends once the robot is back from a trip") {
    Harness h("none", "score-only", testing::small_field(), no_faults());
    const auto r = h.episode(R"((Sequence
  (Action NavigateTo zone=L1)
  (Action ReturnToStart)
  (Action NavigateTo zone=L2)))");
    CHECK(r.record.checkpoints.size() == 4);  // Initial, two segments, Final
    CHECK(r.record.final_state.robot_zone == "S");

    SUBCASE("a ReturnToStart before leaving does not end it") {
        const auto r2 = h.episode("(Sequence (Action ReturnToStart) (Action NavigateTo zone=L1))", 2);
        CHECK(r2.record.final_state.robot_zone == "L1");
    }
}

TEST_CASE("overtime skips the remaining root children") {
    auto field = testing::small_field();
    field.time_limit = 10;
    Harness h("none", "score-only", field, no_faults());
    const auto r = h.episode(R"((Sequence
  (Action NavigateTo zone=L1)
  (Action NavigateTo zone=U1)
  (Action NavigateTo zone=L2)))");
    CHECK(r.record.final_state.robot_zone == "U1");
    CHECK(r.record.score.overtime_penalty == -20);
}

TEST_CASE("alarms and notifications correspond one to one") {
    const auto result = runtime::run_campaign(small_campaign("7B-like", "rule"));
    std::size_t alarms = 0;
    for (const auto& rec : result.records) {
        std::size_t fired = 0;
        for (const auto& c : rec.checkpoints) fired += c.alarm_fired;
        CHECK(fired == rec.metrics.alarm_count);
        alarms += fired;
    }
    CHECK(alarms > 0);
    REQUIRE(result.notifications.size() == alarms);
    for (const auto& n : result.notifications) {
        const auto it = std::find_if(result.records.begin(), result.records.end(), [&](const auto& r) {
            return r.lineage_seed == n.lineage_seed && r.episode_index == n.episode_index;
        });
        REQUIRE(it != result.records.end());
        REQUIRE(n.checkpoint < it->checkpoints.size());
        const auto& cp = it->checkpoints[n.checkpoint];
        CHECK(cp.alarm_fired);
        CHECK(cp.mode == n.mode);
        CHECK(cp.feedback->alarm_score == n.alarm_score);
        CHECK(critic::alarm(n.alarm_score, n.confidence));
        CHECK(n.console_line().rfind("[ALARM] run=unit", 0) == 0);
    }
}

TEST_CASE("actor memory grows by one entry per episode") {
    Harness h("ft-3B-like", "rule", testing::small_field("10010110"), sim::FaultModel{}, 3);
    auto tree = dsl::parse(slurp(testing::data_path("bt/initial.bt")));
    for (std::size_t k = 1; k <= 5; ++k) {
        auto r = runtime::run_episode(tree, h.lin, k);
        REQUIRE(h.lin.memory.entries.size() == k);
        const auto& e = h.lin.memory.entries.back();
        CHECK(e.episode_index == k);
        CHECK(e.real_score == r.record.score.total);
        CHECK(e.bt_source == r.record.bt_before);
        CHECK(e.rule == r.record.refine_rule);
        CHECK(r.record.bt_after == dsl::serialize(r.refined));
        tree = r.refined;
    }
}

TEST_CASE("campaigns are deterministic and independent of the worker count") {
    auto config = small_campaign("ft-3B-like", "rule");
    const auto base = fs::temp_directory_path() / "vrl_runtime_test";
    fs::remove_all(base);
    config.jobs = 1;
    runtime::write_campaign(runtime::run_campaign(config), (base / "a").string());
    runtime::write_campaign(runtime::run_campaign(config), (base / "b").string());
    config.jobs = 4;
    runtime::write_campaign(runtime::run_campaign(config), (base / "c").string());
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(base / "a")) {
        const auto name = entry.path().filename();
        CHECK(slurp(entry.path()) == slurp(base / "b" / name));
        CHECK(slurp(entry.path()) == slurp(base / "c" / name));
        ++files;
    }
    CHECK(files >= 3);
    CHECK(!slurp(base / "a" / "records.jsonl").empty());
    fs::remove_all(base);
}

TEST_CASE("replay") {
    const auto result = runtime::run_campaign(small_campaign("gemini-like", "rule"));
    for (const auto& rec : result.records) CHECK_NOTHROW(runtime::replay(rec));

    SUBCASE("records survive the JSONL round trip and still replay") {
        const auto dir = fs::temp_directory_path() / "vrl_replay_test";
        runtime::write_campaign(result, dir.string());
        const auto back = runtime::read_records((dir / "records.jsonl").string());
        REQUIRE(back.size() == result.records.size());
        for (std::size_t i = 0; i < back.size(); ++i) {
            CHECK(nlohmann::json(back[i]) == nlohmann::json(result.records[i]));
            CHECK_NOTHROW(runtime::replay(back[i]));
        }
        fs::remove_all(dir);
    }
    SUBCASE("an edited score diverges") {
        auto rec = result.records.front();
        rec.score.total += 1;
        CHECK_THROWS_AS(runtime::replay(rec), runtime::ReplayDivergence);
    }
    SUBCASE("a different fault model diverges at a trace event") {
        auto rec = result.records.front();
        rec.fault_model.p_nav_stall = 1.0;
        try {
            runtime::replay(rec);
            FAIL("expected divergence");
        } catch (const runtime::ReplayDivergence& e) {
            CHECK(e.event().has_value());
        }
    }
}

TEST_CASE("one config, one episode: aggregates equal the episode") {
    auto config = small_campaign("perfect", "rule");
    config.field_configs.resize(1);
    config.seeds = {7};
    config.episodes_per_config = 1;
    const auto result = runtime::run_campaign(config);
    REQUIRE(result.records.size() == 1);
    REQUIRE(result.series.size() == 1);
    const auto means = scoring::aggregate(result.series, scoring::metric("score"));
    REQUIRE(means.size() == 1);
    CHECK(*means[0] == result.records[0].score.total);
}

TEST_CASE("an unreachable remote critic degrades the episode without stopping it") {
    critic::RemoteCritic remote({"http://127.0.0.1:1/critic", "", 1.0, 1, false});
    Harness h("none", "rule", testing::small_field(), no_faults());
    h.lin.critic = &remote;
    const auto r = h.episode(kOptimal);
    CHECK(r.record.degraded);
    CHECK(r.record.remote_failure);
    CHECK(!r.record.error_log.empty());
    CHECK(r.record.score.total == r.record.score.component_sum());
    CHECK(r.record.metrics.critic_calls == 0);
}

TEST_CASE("run configs: defaults, env overrides and validation") {
    const auto dir = fs::temp_directory_path() / "vrl_config_test";
    fs::create_directories(dir);
    std::ofstream(dir / "run.json") << R"({"name":"x","field_configs":[")" << testing::data_path("fields/field-2.json")
                                    << R"("],"initial_bt":")" << testing::data_path("bt/initial.bt")
                                    << R"(","critic":"ft-3B-like","actor":"rule","seeds":[3,4],
        "fault_model":{"p_pick_fail":0.2},"disabled_rules":["drop-rotation"],"output_dir":"out"})";
    const auto c = runtime::load_run_config((dir / "run.json").string());
    CHECK(c.seeds == std::vector<std::uint64_t>{3, 4});
    CHECK(c.fault_model.p_pick_fail == 0.2);
    CHECK(c.fault_model.p_misrotate == sim::FaultModel{}.p_misrotate);
    CHECK(c.output_dir == "out");
    CHECK(c.initial_bt == testing::data_path("bt/initial.bt"));
    CHECK(c.critic_remote.url.empty());
    ::setenv(runtime::kCriticUrlEnv, "http://127.0.0.1:9/critic", 1);
    CHECK(runtime::load_run_config((dir / "run.json").string()).critic_remote.url == "http://127.0.0.1:9/critic");
    ::unsetenv(runtime::kCriticUrlEnv);
    CHECK(c.disabled_rules == std::vector<std::string>{"drop-rotation"});
    std::ofstream(dir / "bad.json") << R"({"field_configs":[],"initial_bt":"x.bt"})";
    CHECK_THROWS(runtime::load_run_config((dir / "bad.json").string()));
    fs::remove_all(dir);
}
