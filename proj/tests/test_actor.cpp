// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "stub_server.hpp"
#include "support.hpp"
#include "vrl/actor/actor.hpp"
#include "vrl/dsl/dsl.hpp"
#include "vrl/scoring/scoring.hpp"
#include "vrl/sim/executor.hpp"
#include "world_fixtures.hpp"

using namespace vrl;
using sim::IssueCategory;

namespace {

sim::FaultModel no_faults() {
    sim::FaultModel f;
    f.p_pick_fail = f.p_drop_in_transit = f.p_misrotate = f.p_place_offset = f.p_nav_stall = 0.0;
    return f;
}

struct Run {
    bt::BehaviorTree tree;
    sim::WorldState world;
    bt::Trace trace;
    int score = 0;
};

Run run(const std::string& source, const std::string& orange, const sim::FaultModel& faults = no_faults(),
        std::uint64_t seed = 1) {
    Run r{dsl::parse(source), sim::init_world(testing::small_field(orange), seed), {}, 0};
    sim::WorldExecutor ex(r.world, faults);
    r.trace = bt::tick(r.tree, ex).trace;
    r.score = scoring::score_episode(r.world).total;
    return r;
}

actor::ActorContext context_of(const Run& r, const std::string& orange, bool block_info = false) {
    std::optional<std::vector<sim::BlockState>> info;
    if (block_info) info = sim::init_world(testing::small_field(orange), 1).blocks;
    return actor::make_context(testing::small_field(orange), r.tree, &r.trace, info);
}

critic::CriticFeedback feedback(std::vector<critic::IssueReport> issues, double confidence = 0.8) {
    critic::CriticFeedback fb;
    fb.mode = sim::Mode::Final;
    fb.alarm_score = issues.empty() ? 0.0 : 0.6;
    fb.issues = std::move(issues);
    fb.confidence = confidence;
    return fb;
}

critic::IssueReport report(IssueCategory c, std::optional<bt::NodeId> node, std::string block = {}) {
    return {c, std::move(node), critic::Severity::Actionable, "test", std::move(block)};
}

std::vector<bt::NodeId> rotations(const bt::BehaviorTree& t) {
    std::vector<bt::NodeId> out;
    for (const auto& id : t.preorder()) {
        if (t.at(id).kind == bt::NodeKind::Action && t.at(id).leaf_kind == "RotateBlocks") out.push_back(id);
    }
    return out;
}

actor::RefineResult rule_refine(const actor::ActorContext& ctx, const std::optional<critic::CriticFeedback>& fb,
                                int score, const actor::ActorMemory& memory = {}) {
    actor::RuleBasedActor a;
    Rng rng(1, static_cast<std::uint64_t>(Stream::Actor));
    return a.refine(ctx, fb, score, memory, rng);
}

const char* kSingleBatch = R"((Sequence
  (Action NavigateTo zone=L1)
  (pick: Action PickBlocks count=4)
  (rot: Action RotateBlocks mask=1111)
  (Action NavigateTo zone=U1)
  (place: Action PlaceBlocks)
  (Action ReturnToStart)))";

const char* kTwoBatches = R"((Sequence
  (Action NavigateTo zone=L1)
  (pick1: Action PickBlocks count=4)
  (Action NavigateTo zone=U1)
  (place1: Action PlaceBlocks)
  (Action NavigateTo zone=L2)
  (pick2: Action PickBlocks count=4)
  (Action NavigateTo zone=U2)
  (place2: Action PlaceBlocks)
  (Action ReturnToStart)))";

}  // namespace

TEST_CASE("rule actor: MisRotation from an unreliable critic deletes RotateBlocks") {
    const auto r = run(kSingleBatch, "10100000");
    const auto ctx = context_of(r, "10100000");
    // The critic calls a clean deposit misplaced, so it is not trusted.
    const auto fb = feedback({report(IssueCategory::MisRotation, bt::NodeId("rot")),
                              report(IssueCategory::BlockIncorrectlyPlaced, bt::NodeId("place"), "b1")});
    const auto out = rule_refine(ctx, fb, r.score);
    CHECK(out.rule == "drop-rotation");
    CHECK(out.diff.count(dsl::EditOp::DeleteNode) >= 1);
    CHECK(rotations(out.tree).empty());
    CHECK(dsl::validate(out.tree, ctx.node_library).ok());
}

TEST_CASE("rule actor: clean unload reported as empty with a positive score disables the blind rotation") {
    const auto r = run(kSingleBatch, "11110000");
    REQUIRE(r.score > 0);
    const auto ctx = context_of(r, "11110000");
    const auto fb = feedback({report(IssueCategory::BlockIncorrectlyPlaced, bt::NodeId("place"), "b1"),
                              report(IssueCategory::BlockIncorrectlyPlaced, bt::NodeId("place"), "b2")});
    const auto out = rule_refine(ctx, fb, r.score);
    CHECK(out.rule == "drop-rotation");
    CHECK(rotations(out.tree).empty());
}

TEST_CASE("rule actor: a targeted mask the score certifies survives a contradicting critic") {
    auto src = std::string(kSingleBatch);
    src.replace(src.find("mask=1111"), 9, "mask=1010");
    const auto r = run(src, "10100000");
    const auto ctx = context_of(r, "10100000");
    CHECK(actor::misoriented_from_score(ctx, r.score) == 0);
    const auto fb = feedback({report(IssueCategory::BlockIncorrectlyPlaced, bt::NodeId("place"), "b1")});
    const auto out = rule_refine(ctx, fb, r.score);
    CHECK(out.rule != "drop-rotation");
    CHECK(rotations(out.tree).size() == 1);
}

TEST_CASE("rule actor: vacuous success at a CursorSequence wraps it in a Sequence") {
    const char* src = R"((Sequence
  (RetryUntilSuccessful max_attempts=2
    (macro: CursorSequence
      (Action NavigateTo zone=L1)
      (Action PickBlocks count=4)
      (Action NavigateTo zone=U1)
      (Action PlaceBlocks)))
  (Action ReturnToStart)))";
    const auto r = run(src, "00000000");
    const auto ctx = context_of(r, "00000000");
    const auto fb = feedback({report(IssueCategory::VacuousSubtreeSuccess, bt::NodeId("macro"))});
    const auto once = rule_refine(ctx, fb, r.score);
    CHECK(once.rule == "cursor-wrap");
    const auto parent = once.tree.parent_of("macro");
    REQUIRE(parent);
    CHECK(once.tree.at(*parent).kind == bt::NodeKind::Sequence);
    const auto grand = once.tree.parent_of(*parent);
    REQUIRE(grand);
    CHECK(once.tree.at(*grand).kind == bt::NodeKind::RetryUntilSuccessful);
    CHECK(dsl::validate(once.tree, ctx.node_library).ok());

    SUBCASE("idempotent") {
        auto ctx2 = ctx;
        ctx2.current_bt = once.tree;
        const auto twice = rule_refine(ctx2, fb, r.score);
        CHECK(twice.rule != "cursor-wrap");
        CHECK(bt::shape_equal(twice.tree, once.tree));
        CHECK(dsl::serialize(twice.tree) == dsl::serialize(once.tree));
    }
}

TEST_CASE("rule actor: empty feedback and no trigger give the identity") {
    const auto r = run(kTwoBatches, "00000000");
    const auto ctx = context_of(r, "00000000");
    for (const auto& fb : {std::optional<critic::CriticFeedback>{}, std::optional(feedback({}))}) {
        const auto out = rule_refine(ctx, fb, r.score);
        CHECK(out.rule == "identity");
        CHECK(out.diff.empty());
        CHECK(!out.error);
        CHECK(dsl::serialize(out.tree) == dsl::serialize(r.tree));
    }
}

TEST_CASE("rule actor: block_info with blocks 1 and 3 OrangeUp inserts mask 1010") {
    const char* src = R"((Sequence
  (Action NavigateTo zone=L1)
  (pick: Action PickBlocks count=4)
  (Action NavigateTo zone=U1)
  (Action PlaceBlocks)
  (Action ReturnToStart)))";
    const auto r = run(src, "10100000");
    const auto ctx = context_of(r, "10100000", true);
    const auto fb = feedback({report(IssueCategory::MisorientedPlacement, bt::NodeId("$.3"), "b1")});
    const auto out = rule_refine(ctx, fb, r.score);
    CHECK(out.rule == "targeted-rotation");
    const auto rot = rotations(out.tree);
    REQUIRE(rot.size() == 1);
    CHECK(out.tree.at(rot[0]).params.at("mask") == "1010");
    const auto& kids = out.tree.at(out.tree.root).children;
    const auto pick_at = std::find(kids.begin(), kids.end(), "pick") - kids.begin();
    CHECK(kids[static_cast<std::size_t>(pick_at) + 1] == rot[0]);
    CHECK(out.diff.count(dsl::EditOp::InsertNode) == 1);
}

TEST_CASE("rule actor: transport failures in two consecutive episodes restructure per zone pair") {
    const auto faults = [] {
        auto f = no_faults();
        f.p_pick_fail = 1.0;
        return f;
    }();
    const auto r = run(kTwoBatches, "00000000", faults);
    const auto ctx = context_of(r, "00000000");
    actor::ActorMemory memory;
    actor::MemoryEntry prev;
    prev.episode_index = 1;
    prev.final_feedback = feedback({report(IssueCategory::PickFailure, bt::NodeId("pick1"))});
    prev.evidence.transport_failure = true;
    prev.bt_source = dsl::serialize(r.tree);
    memory.entries.push_back(prev);
    const auto fb = feedback({report(IssueCategory::PickFailure, bt::NodeId("pick2"))});
    const auto out = rule_refine(ctx, fb, r.score, memory);
    CHECK(out.rule == "transactional");
    const auto& root = out.tree.at(out.tree.root);
    REQUIRE(root.kind == bt::NodeKind::Sequence);
    REQUIRE(root.children.size() == 3);
    for (int i = 0; i < 2; ++i) {
        const auto& txn = out.tree.at(root.children[static_cast<std::size_t>(i)]);
        CHECK(txn.kind == bt::NodeKind::RetryUntilSuccessful);
        const auto& body = out.tree.at(txn.children.at(0));
        CHECK(body.kind == bt::NodeKind::Sequence);
        CHECK(out.tree.at(body.children.front()).params.at("zone") == (i == 0 ? "L1" : "L2"));
        CHECK(out.tree.at(body.children.back()).leaf_kind == "PlaceBlocks");
    }
    CHECK(out.tree.at(root.children.back()).leaf_kind == "ReturnToStart");

    SUBCASE("a single failing episode is not enough") {
        const auto once = rule_refine(ctx, fb, r.score);
        CHECK(once.rule != "transactional");
    }
}

TEST_CASE("rule actor: restructuring adds an unserved zone pair only when its mask is known and cheap") {
    actor::ActorMemory memory;
    actor::MemoryEntry prev;
    prev.evidence.transport_failure = true;
    memory.entries.push_back(prev);
    // b5..b8 still in L2 read as undelivered.
    const auto fb = feedback({report(IssueCategory::BlockIncorrectlyPlaced, std::nullopt, "b5")});

    const auto r = run(kSingleBatch, "00000100");
    const auto blind = rule_refine(context_of(r, "00000100"), fb, r.score, memory);
    REQUIRE(blind.rule == "transactional");
    CHECK(blind.tree.at(blind.tree.root).children.size() == 2);

    const auto informed = rule_refine(context_of(r, "00000100", true), fb, r.score, memory);
    REQUIRE(informed.rule == "transactional");
    CHECK(informed.tree.at(informed.tree.root).children.size() == 3);
    CHECK(informed.tree.at("rotate_L2").params.at("mask") == "0100");
    CHECK(!informed.tree.contains("rotate_L1"));

    SUBCASE("a batch needing two or more turns is not worth its time") {
        const auto costly = run(kSingleBatch, "00001100");
        const auto t = rule_refine(context_of(costly, "00001100", true), fb, costly.score, memory);
        REQUIRE(t.rule == "transactional");
        CHECK(t.tree.at(t.tree.root).children.size() == 2);
        CHECK(!t.tree.contains("txn_L2"));
    }
}

TEST_CASE("rule actor: trusted misorientation reports flip the reported slots") {
    const char* src = R"((Sequence
  (Action NavigateTo zone=L1)
  (pick: Action PickBlocks count=4)
  (Action NavigateTo zone=U1)
  (place: Action PlaceBlocks)
  (Action ReturnToStart)))";
    const auto r = run(src, "01010000");
    const auto ctx = context_of(r, "01010000");
    REQUIRE(actor::misoriented_from_score(ctx, r.score) == 2);
    const auto fb = feedback({report(IssueCategory::MisorientedPlacement, bt::NodeId("place"), "b2"),
                              report(IssueCategory::MisorientedPlacement, bt::NodeId("place"), "b4")});
    const auto out = rule_refine(ctx, fb, r.score);
    CHECK(out.rule == "targeted-rotation");
    REQUIRE(rotations(out.tree).size() == 1);
    CHECK(out.tree.at(rotations(out.tree)[0]).params.at("mask") == "0101");

    SUBCASE("more claims than the score allows are ignored") {
        auto noisy = fb;
        noisy.issues.push_back(report(IssueCategory::MisorientedPlacement, bt::NodeId("place"), "b1"));
        CHECK(rule_refine(ctx, noisy, r.score).rule == "identity");
    }
}

TEST_CASE("rule actor: a mask patch followed by more colour-down deliveries is reverted") {
    const auto before = run(kSingleBatch, "10000000");  // mask 1111 leaves b2..b4 colour-down
    auto patched_src = std::string(kSingleBatch);
    patched_src.replace(patched_src.find("mask=1111"), 9, "mask=0111");
    const auto after = run(patched_src, "10000000");
    const auto before_ctx = context_of(before, "10000000");
    const auto after_ctx = context_of(after, "10000000");
    const auto o_before = actor::misoriented_from_score(before_ctx, before.score);
    const auto o_after = actor::misoriented_from_score(after_ctx, after.score);
    REQUIRE(o_before == 3);
    REQUIRE(o_after == 4);

    actor::ActorMemory memory;
    actor::MemoryEntry prev;
    prev.evidence = actor::evidence_of(before_ctx, std::nullopt, before.score);
    prev.bt_source = dsl::serialize(before.tree);
    prev.rule = "targeted-rotation";
    memory.entries.push_back(prev);
    const auto out = rule_refine(after_ctx, feedback({}), after.score, memory);
    CHECK(out.rule == "targeted-rotation");
    CHECK(dsl::serialize(out.tree) == dsl::serialize(before.tree));
}

TEST_CASE("rule actor: TimeOverrun drops rotations before the shelf") {
    const char* src = R"((Sequence
  (Action NavigateTo zone=L1)
  (Action PickBlocks count=4)
  (Action RotateBlocks mask=1000)
  (Action NavigateTo zone=U1)
  (Action PlaceBlocks)
  (Action NavigateTo zone=SH0)
  (Action MoveShelf)
  (Action ReturnToStart)))";
    const auto r = run(src, "00000000");
    auto ctx = context_of(r, "00000000");
    const auto fb = feedback({report(IssueCategory::TimeOverrun, std::nullopt)});
    const auto first = rule_refine(ctx, fb, r.score);
    CHECK(first.rule == "time-budget");
    CHECK(rotations(first.tree).empty());
    ctx.current_bt = first.tree;
    const auto second = rule_refine(ctx, fb, r.score);
    CHECK(second.rule == "time-budget");
    CHECK(dsl::serialize(second.tree).find("MoveShelf") == std::string::npos);
    CHECK(dsl::serialize(second.tree).find("SH0") == std::string::npos);
}

TEST_CASE("rule actor: disabled rules are skipped") {
    const auto r = run(kSingleBatch, "10100000");
    const auto ctx = context_of(r, "10100000");
    const auto fb = feedback({report(IssueCategory::MisRotation, bt::NodeId("rot")),
                              report(IssueCategory::BlockIncorrectlyPlaced, bt::NodeId("place"), "b1")});
    actor::RuleOptions opts;
    opts.enabled[static_cast<std::size_t>(actor::Rule::DropRotation)] = false;
    actor::RuleBasedActor a(opts);
    Rng rng(1, 3);
    CHECK(a.refine(ctx, fb, r.score, {}, rng).rule != "drop-rotation");
}

TEST_CASE("mask correctness: bit i set iff carried slot i is OrangeUp") {
    Rng rng(77, 0);
    for (int trial = 0; trial < 2000; ++trial) {
        std::string orange;
        for (int i = 0; i < 8; ++i) orange += rng.bernoulli(0.5) ? '1' : '0';
        const auto world = sim::init_world(testing::small_field(orange), 1);
        const auto mask1 = actor::edit::rotation_mask(world.blocks, "L1");
        const auto mask2 = actor::edit::rotation_mask(world.blocks, "L2");
        CHECK(mask1 == orange.substr(0, 4));
        CHECK(mask2 == orange.substr(4, 4));

        // The rule's inserted masks deliver every block colour-up.
        const char* src = R"((Sequence
  (Action NavigateTo zone=L1) (Action PickBlocks count=4) (Action NavigateTo zone=U1) (Action PlaceBlocks)
  (Action NavigateTo zone=L2) (Action PickBlocks count=4) (Action NavigateTo zone=U2) (Action PlaceBlocks)
  (Action ReturnToStart)))";
        const auto r = run(src, orange);
        const auto ctx = context_of(r, orange, true);
        const auto out = rule_refine(ctx, feedback({report(IssueCategory::MisorientedPlacement, std::nullopt, "b1")}),
                                     r.score);
        if (orange == "00000000") continue;
        REQUIRE(out.rule == "targeted-rotation");
        sim::WorldState w = sim::init_world(testing::small_field(orange), 1);
        sim::WorldExecutor ex(w, no_faults());
        auto t = out.tree;
        bt::tick(t, ex);
        for (const auto& b : w.blocks) CHECK(b.orientation == sim::Orientation::BlueUp);
    }
}

TEST_CASE("score inference: recovers the colour-down delivery count") {
    Rng rng(5, 0);
    sim::FaultModel faults;  // defaults: every fault kind active
    faults.p_drop_in_transit = 0.1;
    faults.p_place_offset = 0.3;
    int known = 0;
    for (int trial = 0; trial < 3000; ++trial) {
        std::string orange;
        for (int i = 0; i < 8; ++i) orange += rng.bernoulli(0.5) ? '1' : '0';
        std::string m1, m2;
        for (int i = 0; i < 4; ++i) {
            m1 += rng.bernoulli(0.5) ? '1' : '0';
            m2 += rng.bernoulli(0.5) ? '1' : '0';
        }
        const std::string src = "(Sequence (Action NavigateTo zone=L1) (Action PickBlocks count=4) "
                                "(Action RotateBlocks mask=" + m1 + ") (Action NavigateTo zone=U1) (Action PlaceBlocks) "
                                "(Action NavigateTo zone=L2) (Action PickBlocks count=" + std::to_string(1 + rng.below(4)) +
                                ") (Action RotateBlocks mask=" + m2 + ") (Action NavigateTo zone=U2) (Action PlaceBlocks)" +
                                (rng.bernoulli(0.7) ? " (Action ReturnToStart)" : "") + ")";
        const auto r = run(src, orange, faults, 100 + static_cast<std::uint64_t>(trial));
        int truth = 0;
        for (const auto& b : r.world.blocks) {
            const auto z = r.world.config.zone(b.location.zone);
            if (b.location.kind == sim::BlockLocation::Kind::InZone && z && z->kind == sim::ZoneKind::Unload &&
                b.orientation == sim::Orientation::OrangeUp) {
                ++truth;
            }
        }
        const auto inferred = actor::misoriented_from_score(context_of(r, orange), r.score);
        if (inferred) {
            ++known;
            REQUIRE(*inferred == truth);
        }
    }
    // Two deposits can never make the count ambiguous.
    CHECK(known == 3000);
}

TEST_CASE("validity gate: 10,000 fuzzed refinements return valid trees") {
    Rng rng(2024, 0);
    const auto lib = bt::default_library();
    actor::RuleBasedActor rule;
    actor::ScoreOnlyActor score_only;
    const IssueCategory cats[] = {IssueCategory::MisorientedPlacement, IssueCategory::BlockOutsideZones,
                                  IssueCategory::BlockIncorrectlyPlaced, IssueCategory::PickFailure,
                                  IssueCategory::DropInTransit, IssueCategory::MisRotation,
                                  IssueCategory::NavigationStall, IssueCategory::VacuousSubtreeSuccess,
                                  IssueCategory::TimeOverrun};
    testing::TreeGenOptions opt;
    opt.max_depth = 3;
    sim::FaultModel faults;
    int changed = 0;
    for (int i = 0; i < 10000; ++i) {
        std::string orange;
        for (int k = 0; k < 8; ++k) orange += rng.bernoulli(0.5) ? '1' : '0';
        Run r{testing::random_tree(rng, opt), sim::init_world(testing::small_field(orange), rng.below(1u << 30)), {}, 0};
        REQUIRE(dsl::validate(r.tree, lib).ok());
        sim::WorldExecutor ex(r.world, faults);
        auto running = r.tree;
        r.trace = bt::tick(running, ex).trace;
        r.score = scoring::score_episode(r.world).total;
        const auto ids = r.tree.preorder();
        std::optional<critic::CriticFeedback> fb;
        if (rng.bernoulli(0.9)) {
            std::vector<critic::IssueReport> issues;
            const auto n = rng.below(5);
            for (std::uint64_t k = 0; k < n; ++k) {
                std::optional<bt::NodeId> node;
                if (rng.bernoulli(0.8)) node = ids[rng.below(ids.size())];
                issues.push_back(report(cats[rng.below(std::size(cats))], node,
                                        rng.bernoulli(0.5) ? "b" + std::to_string(1 + rng.below(8)) : ""));
            }
            fb = feedback(issues, rng.uniform01());
        }
        actor::ActorMemory memory;
        for (std::uint64_t k = rng.below(3); k > 0; --k) {
            actor::MemoryEntry e;
            e.real_score = static_cast<int>(rng.below(100)) - 60;
            e.evidence.transport_failure = rng.bernoulli(0.5);
            e.evidence.critic_contradicted = rng.bernoulli(0.3);
            e.evidence.misoriented = static_cast<int>(rng.below(4));
            e.rule = rng.bernoulli(0.3) ? "targeted-rotation" : "identity";
            e.bt_source = dsl::serialize(r.tree);
            memory.entries.push_back(e);
        }
        const auto ctx = context_of(r, orange, rng.bernoulli(0.3));
        Rng actor_rng(static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(Stream::Actor));
        actor::Actor& a = rng.bernoulli(0.5) ? static_cast<actor::Actor&>(rule) : score_only;
        const auto out = a.refine(ctx, fb, r.score, memory, actor_rng);
        const auto report_ok = dsl::validate(out.tree, lib).ok();
        if (!report_ok) FAIL_CHECK("invalid tree from " << a.name() << ":\n" << dsl::serialize(out.tree));
        if (out.error) CHECK(dsl::serialize(out.tree) == dsl::serialize(r.tree));
        changed += !out.diff.empty();
    }
    CHECK(changed > 1000);
}

TEST_CASE("rule actor: pure function of its inputs") {
    const auto r = run(kTwoBatches, "01100110", sim::FaultModel{}, 9);
    const auto ctx = context_of(r, "01100110");
    const auto fb = feedback({report(IssueCategory::MisorientedPlacement, bt::NodeId("place1"), "b2"),
                              report(IssueCategory::PickFailure, bt::NodeId("pick2"))});
    const auto a = rule_refine(ctx, fb, r.score);
    for (int i = 0; i < 5; ++i) {
        actor::RuleBasedActor other;
        Rng different(static_cast<std::uint64_t>(i) + 50, 3);
        const auto b = other.refine(ctx, fb, r.score, {}, different);
        CHECK(dsl::serialize(b.tree) == dsl::serialize(a.tree));
        CHECK(b.rule == a.rule);
    }
}

TEST_CASE("score-only actor") {
    const auto r = run(kTwoBatches, "01100110");
    const auto ctx = context_of(r, "01100110");
    actor::ScoreOnlyActor a;
    actor::ActorMemory memory;
    memory.entries.push_back({});
    memory.entries.back().real_score = r.score - 5;

    SUBCASE("an improved score keeps the tree") {
        Rng rng(1, 3);
        const auto out = a.refine(ctx, std::nullopt, r.score, memory, rng);
        CHECK(out.rule == "identity");
        CHECK(out.diff.empty());
    }
    SUBCASE("a worse score applies one seeded mutation") {
        memory.entries.back().real_score = r.score + 5;
        Rng rng1(42, 3), rng2(42, 3);
        const auto x = a.refine(ctx, std::nullopt, r.score, memory, rng1);
        const auto y = a.refine(ctx, std::nullopt, r.score, memory, rng2);
        CHECK(x.rule != "identity");
        CHECK(!x.diff.empty());
        CHECK(dsl::serialize(x.tree) == dsl::serialize(y.tree));
        CHECK(x.rule == y.rule);
        CHECK(dsl::validate(x.tree, ctx.node_library).ok());
    }
    SUBCASE("no valid mutation gives RefinementFailed and the input tree") {
        memory.entries.back().real_score = r.score + 5;
        auto single = ctx;
        single.current_bt = dsl::parse("(Action NavigateTo zone=L1)");
        Rng rng(3, 3);
        const auto out = a.refine(single, std::nullopt, r.score, memory, rng);
        REQUIRE(out.error);
        CHECK(out.error->rfind("RefinementFailed", 0) == 0);
        CHECK(dsl::serialize(out.tree) == dsl::serialize(single.current_bt));
    }
}

TEST_CASE("remote actor: loopback, re-prompt and failure") {
    const auto r = run(kSingleBatch, "10100000");
    const auto ctx = context_of(r, "10100000", true);
    const auto fb = feedback({report(IssueCategory::MisRotation, bt::NodeId("rot"))});
    Rng rng(1, 3);

    SUBCASE("stub returning the input text gives the identity") {
        nlohmann::json seen;
        testing::StubServer stub(
            [&](const std::string& body) {
                seen = nlohmann::json::parse(body);
                return nlohmann::json{{"bt_source", seen["bt_source"]}}.dump();
            },
            "actor");
        actor::RemoteActor a({stub.url(), "tok", 5.0, 1, 2});
        const auto out = a.refine(ctx, fb, r.score, {}, rng);
        CHECK(out.diff.empty());
        CHECK(dsl::serialize(out.tree) == dsl::serialize(r.tree));
        CHECK(seen["schema_version"] == actor::kActorSchema);
        CHECK(seen["real_score"] == r.score);
        CHECK(seen["context"].contains("node_library"));
        CHECK(seen["context"]["block_info"].size() == 8);
        CHECK(seen["feedback"]["issues"].size() == 1);
    }
    SUBCASE("an invalid node kind is re-prompted with the violation") {
        std::vector<nlohmann::json> requests;
        testing::StubServer stub(
            [&](const std::string& body) {
                requests.push_back(nlohmann::json::parse(body));
                const std::string tree = requests.size() == 1 ? "(Sequence (Action FlyTo zone=L1))"
                                                              : "(Sequence (Action NavigateTo zone=L1))";
                return nlohmann::json{{"bt_source", tree}}.dump();
            },
            "actor");
        actor::RemoteActor a({stub.url(), "", 5.0, 1, 2});
        const auto out = a.refine(ctx, fb, r.score, {}, rng);
        REQUIRE(requests.size() == 2);
        CHECK(!requests[0].contains("validation_report"));
        CHECK(requests[1]["validation_report"].get<std::string>().find("FlyTo") != std::string::npos);
        CHECK(!out.error);
        CHECK(out.tree.nodes.size() == 2);
    }
    SUBCASE("always invalid ends in RefinementFailed") {
        testing::StubServer stub([](const std::string&) { return R"({"bt_source":"(Sequence"})"; }, "actor");
        actor::RemoteActor a({stub.url(), "", 5.0, 1, 2});
        const auto out = a.refine(ctx, fb, r.score, {}, rng);
        CHECK(stub.calls == 3);
        REQUIRE(out.error);
        CHECK(out.error->rfind("RefinementFailed", 0) == 0);
        CHECK(dsl::serialize(out.tree) == dsl::serialize(r.tree));
    }
    SUBCASE("a reply without bt_source is MalformedReply") {
        testing::StubServer stub([](const std::string&) { return R"({"tree":"x"})"; }, "actor");
        actor::RemoteActor a({stub.url(), "", 5.0, 1, 2});
        try {
            a.refine(ctx, fb, r.score, {}, rng);
            FAIL("expected MalformedReply");
        } catch (const actor::ActorError& e) {
            CHECK(e.code() == actor::ActorError::Code::MalformedReply);
        }
    }
    SUBCASE("an unreachable endpoint is a Timeout") {
        actor::RemoteActor a({"http://127.0.0.1:1/actor", "", 1.0, 2, 0});
        try {
            a.refine(ctx, fb, r.score, {}, rng);
            FAIL("expected Timeout");
        } catch (const actor::ActorError& e) {
            CHECK(e.code() == actor::ActorError::Code::Timeout);
        }
    }
}

TEST_CASE("memory entries survive a JSON round trip") {
    actor::MemoryEntry e;
    e.episode_index = 3;
    e.final_feedback = feedback({report(IssueCategory::PickFailure, bt::NodeId("p"), "b2")});
    e.real_score = -17;
    e.evidence = {true, false, 2};
    e.bt_source = "(Action ReturnToStart)\n";
    e.rule = "transactional";
    const auto back = nlohmann::json(e).get<actor::MemoryEntry>();
    CHECK(back.episode_index == 3);
    CHECK(back.final_feedback == e.final_feedback);
    CHECK(back.real_score == -17);
    CHECK(back.evidence == e.evidence);
    CHECK(back.bt_source == e.bt_source);
    CHECK(back.rule == e.rule);
}
