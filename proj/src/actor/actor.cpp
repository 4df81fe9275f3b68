// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "vrl/actor/actor.hpp"
#include "vrl/dsl/diff_json.hpp"
#include "vrl/scoring/scoring.hpp"
#include "vrl/sim/io.hpp"

using nlohmann::json;

namespace vrl::actor {

using sim::IssueCategory;

const std::string& Environment::unload_for(std::size_t load_index) const {
    if (unload_zones.empty()) throw std::invalid_argument("environment has no unload zone");
    return unload_zones[load_index % unload_zones.size()];
}

std::string Environment::describe() const {
    std::ostringstream os;
    auto list = [&os](const std::vector<std::string>& ids) {
        for (std::size_t i = 0; i < ids.size(); ++i) os << (i ? ", " : "") << ids[i];
    };
    os << "Start/finish zone: " << start_zone << "\nLoad zones: ";
    list(load_zones);
    os << "\nUnload zones: ";
    list(unload_zones);
    os << "\nShelf: currently in " << shelf_zone << ", target " << shelf_target;
    os << "\nCarry capacity: " << carry_capacity << " blocks";
    os << "\nTime limit: " << time_limit << " s\n";
    return os.str();
}

Environment environment_of(const sim::FieldConfig& field) {
    Environment env;
    env.start_zone = field.start_zone().zone_id;
    for (const auto& z : field.zones) {
        if (z.kind == sim::ZoneKind::Load) env.load_zones.push_back(z.zone_id);
        if (z.kind == sim::ZoneKind::Unload) env.unload_zones.push_back(z.zone_id);
    }
    env.shelf_zone = field.shelf.initial_zone;
    env.shelf_target = field.shelf.target_zone;
    env.time_limit = field.time_limit;
    return env;
}

const std::string& task_definition() {
    static const std::string text =
        "Transport every block from the load zones to the unload zones in batches of at most four. "
        "A delivered block must overlap an unload zone and show its blue side up. "
        "Move the shelf to its target side of the field if time allows, and finish the episode by "
        "returning to the start/finish zone within the time limit.";
    return text;
}

ActorContext make_context(const sim::FieldConfig& field, bt::BehaviorTree current, const bt::Trace* trace,
                          std::optional<std::vector<sim::BlockState>> block_info) {
    ActorContext c;
    c.task_definition = task_definition();
    c.environment = environment_of(field);
    c.environment_spec = c.environment.describe();
    c.node_library = bt::default_library();
    c.authoring_rules = c.node_library.authoring_rules;
    c.current_bt = std::move(current);
    c.block_info = std::move(block_info);
    c.trace = trace;
    return c;
}

std::optional<int> ActorMemory::best_score() const {
    std::optional<int> best;
    for (const auto& e : entries) {
        if (!best || e.real_score > *best) best = e.real_score;
    }
    return best;
}

std::string_view to_string(ActorError::Code code) {
    switch (code) {
        case ActorError::Code::Timeout: return "Timeout";
        case ActorError::Code::MalformedReply: return "MalformedReply";
        case ActorError::Code::RefinementFailed: return "RefinementFailed";
    }
    return "RefinementFailed";
}

std::string_view to_string(Rule rule) {
    switch (rule) {
        case Rule::CursorWrap: return "cursor-wrap";
        case Rule::DropRotation: return "drop-rotation";
        case Rule::Transactional: return "transactional";
        case Rule::TargetedRotation: return "targeted-rotation";
        case Rule::TimeBudget: return "time-budget";
    }
    return "identity";
}

// ---------------------------------------------------------------------------
// Tree editing

namespace edit {

void remove_subtree(bt::BehaviorTree& tree, const bt::NodeId& id) {
    if (!tree.contains(id)) return;
    const auto parent = tree.parent_of(id);
    std::vector<bt::NodeId> stack{id};
    while (!stack.empty()) {
        const auto cur = stack.back();
        stack.pop_back();
        auto it = tree.nodes.find(cur);
        if (it == tree.nodes.end()) continue;
        for (const auto& c : it->second.children) stack.push_back(c);
        tree.nodes.erase(it);
    }
    if (!parent) {
        tree.root.clear();
        return;
    }
    auto& siblings = tree.at(*parent).children;
    siblings.erase(std::remove(siblings.begin(), siblings.end(), id), siblings.end());
    if (siblings.empty() && *parent != tree.root) remove_subtree(tree, *parent);
}

bt::NodeId fresh_id(const bt::BehaviorTree& tree, const std::string& stem) {
    if (!tree.contains(stem)) return stem;
    for (int k = 2;; ++k) {
        auto id = stem + "_" + std::to_string(k);
        if (!tree.contains(id)) return id;
    }
}

std::string rotation_mask(const std::vector<sim::BlockState>& blocks, const std::string& zone,
                          std::size_t capacity) {
    std::string mask(sim::kCarryCapacity, '0');
    std::size_t slot = 0;
    for (const auto& b : blocks) {
        if (slot >= capacity || slot >= mask.size()) break;
        if (b.location.kind != sim::BlockLocation::Kind::InZone || b.location.zone != zone) continue;
        if (b.orientation == sim::Orientation::OrangeUp) mask[slot] = '1';
        ++slot;
    }
    return mask;
}

}  // namespace edit

namespace {

bool is_action(const bt::BTNode& n, std::string_view kind) {
    return n.kind == bt::NodeKind::Action && n.leaf_kind == kind;
}

std::optional<std::string> detail_value(const std::string& detail, const std::string& key) {
    std::istringstream words(detail);
    std::string word;
    while (words >> word) {
        if (word.rfind(key + "=", 0) == 0) return word.substr(key.size() + 1);
    }
    return std::nullopt;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

bool has_fault(const std::string& detail) { return detail.find("fault=") != std::string::npos; }

const bt::Trace& trace_of(const ActorContext& c) {
    static const bt::Trace empty;
    return c.trace ? *c.trace : empty;
}

std::vector<const critic::IssueReport*> reports(const std::optional<critic::CriticFeedback>& fb, IssueCategory c) {
    std::vector<const critic::IssueReport*> out;
    if (!fb) return out;
    for (const auto& i : fb->issues) {
        if (i.category == c) out.push_back(&i);
    }
    return out;
}

bool reported(const std::optional<critic::CriticFeedback>& fb, IssueCategory c) { return !reports(fb, c).empty(); }

bool transport_category(IssueCategory c) {
    return c == IssueCategory::PickFailure || c == IssueCategory::DropInTransit ||
           c == IssueCategory::BlockOutsideZones || c == IssueCategory::BlockIncorrectlyPlaced;
}

// Zone the robot is in when `pick` runs, read from the NavigateTo leaves
// preceding it in tree order.
std::optional<std::string> zone_before(const bt::BehaviorTree& tree, const bt::NodeId& pick) {
    std::optional<std::string> zone;
    for (const auto& id : tree.preorder()) {
        if (id == pick) return zone;
        const auto& n = tree.at(id);
        if (is_action(n, "NavigateTo")) {
            auto it = n.params.find("zone");
            if (it != n.params.end()) zone = it->second;
        }
    }
    return std::nullopt;
}

std::optional<bt::NodeId> rotation_after(const bt::BehaviorTree& tree, const bt::NodeId& pick) {
    const auto parent = tree.parent_of(pick);
    if (!parent) return std::nullopt;
    const auto& siblings = tree.at(*parent).children;
    auto it = std::find(siblings.begin(), siblings.end(), pick);
    if (it == siblings.end() || it + 1 == siblings.end()) return std::nullopt;
    if (is_action(tree.at(*(it + 1)), "RotateBlocks")) return *(it + 1);
    return std::nullopt;
}

// Makes the RotateBlocks after `pick` use `mask`: edits, inserts or deletes it.
void set_rotation(bt::BehaviorTree& tree, const bt::NodeId& pick, const std::string& mask, const std::string& stem) {
    const bool none = mask.find('1') == std::string::npos;
    if (auto rot = rotation_after(tree, pick)) {
        if (none) {
            edit::remove_subtree(tree, *rot);
        } else {
            tree.at(*rot).params["mask"] = mask;
        }
        return;
    }
    if (none) return;
    const auto parent = tree.parent_of(pick);
    if (!parent) return;
    auto& p = tree.at(*parent);
    if (p.kind != bt::NodeKind::Sequence && p.kind != bt::NodeKind::CursorSequence) return;
    bt::BTNode rot;
    rot.id = edit::fresh_id(tree, stem);
    rot.kind = bt::NodeKind::Action;
    rot.leaf_kind = "RotateBlocks";
    rot.params["mask"] = mask;
    auto pos = std::find(p.children.begin(), p.children.end(), pick);
    p.children.insert(pos + 1, rot.id);
    tree.nodes.emplace(rot.id, std::move(rot));
}

std::vector<bt::NodeId> leaves_of(const bt::BehaviorTree& tree, std::string_view action) {
    std::vector<bt::NodeId> out;
    for (const auto& id : tree.preorder()) {
        if (is_action(tree.at(id), action)) out.push_back(id);
    }
    return out;
}

bool remove_all(bt::BehaviorTree& tree, std::string_view action) {
    const auto ids = leaves_of(tree, action);
    for (const auto& id : ids) edit::remove_subtree(tree, id);
    return !ids.empty();
}

// ---------------------------------------------------------------------------
// Rules. Each returns a candidate tree or nullopt when it does not trigger.

struct Situation {
    const ActorContext& context;
    const std::optional<critic::CriticFeedback>& feedback;
    int real_score;
    const ActorMemory& memory;
    EpisodeEvidence now;

    bool critic_reliable() const {
        if (now.critic_contradicted) return false;
        return memory.entries.empty() || !memory.entries.back().evidence.critic_contradicted;
    }
};

std::optional<bt::BehaviorTree> cursor_wrap(const Situation& s) {
    auto tree = s.context.current_bt;
    bool changed = false;
    for (const auto* r : reports(s.feedback, IssueCategory::VacuousSubtreeSuccess)) {
        if (!r->node || !tree.contains(*r->node)) continue;
        const auto& target = *r->node;
        if (tree.at(target).kind != bt::NodeKind::CursorSequence) continue;
        const auto parent = tree.parent_of(target);
        if (!parent || tree.at(*parent).kind == bt::NodeKind::Sequence) continue;
        bt::BTNode wrap;
        wrap.id = edit::fresh_id(tree, target.rfind('$', 0) == 0 ? "cursor_wrap" : target + "_wrap");
        wrap.kind = bt::NodeKind::Sequence;
        wrap.children = {target};
        auto& siblings = tree.at(*parent).children;
        std::replace(siblings.begin(), siblings.end(), target, wrap.id);
        tree.nodes.emplace(wrap.id, std::move(wrap));
        changed = true;
    }
    if (!changed) return std::nullopt;
    return tree;
}

std::optional<bt::BehaviorTree> drop_rotation(const Situation& s) {
    if (s.context.block_info) return std::nullopt;
    const bool misrotation = reported(s.feedback, IssueCategory::MisRotation) && !s.critic_reliable();
    if (!s.now.critic_contradicted && !misrotation) return std::nullopt;
    // Targeted masks survive when the score shows every delivered block colour-up.
    const bool certified = !misrotation && s.now.misoriented == 0;
    auto tree = s.context.current_bt;
    bool changed = false;
    for (const auto& id : leaves_of(tree, "RotateBlocks")) {
        if (certified && tree.at(id).params.at("mask") != std::string(sim::kCarryCapacity, '1')) continue;
        edit::remove_subtree(tree, id);
        changed = true;
    }
    if (!changed) return std::nullopt;
    return tree;
}

// Expected score of one more full batch with `rotated` blocks turned, under
// the nominal durations and fault rates.
double batch_value(std::size_t capacity, std::size_t rotated) {
    const sim::FaultModel f;
    const scoring::ScoreRules rules;
    const double n = static_cast<double>(capacity);
    const double r = static_cast<double>(rotated);
    const double seconds = 2 * (f.durations.at("NavigateTo") + f.p_nav_stall * f.nav_stall_extra) +
                           n * (f.durations.at("PickBlocks") + f.durations.at("PlaceBlocks")) +
                           r * f.durations.at("RotateBlocks");
    const double batch_loss = rules.full_batch;
    const double wrong = rules.correct_box - rules.incorrect_box + batch_loss;
    const double lost = rules.correct_box - rules.outside_box + batch_loss;
    const double p_outside = f.p_place_offset * (1.0 - f.p_offset_partial);
    const double gain = n * rules.correct_box + rules.full_batch - r * f.p_misrotate * wrong -
                        f.p_drop_in_transit * lost - n * p_outside * lost;
    return gain - seconds;
}

std::optional<bt::BehaviorTree> transactional(const Situation& s) {
    if (!s.now.transport_failure || s.memory.entries.empty() || !s.memory.entries.back().evidence.transport_failure) {
        return std::nullopt;
    }
    const auto& env = s.context.environment;
    const auto& current = s.context.current_bt;
    if (env.load_zones.empty() || env.unload_zones.empty()) return std::nullopt;

    // Zone pairs already served keep their masks; others join only when their mask
    // is known and the batch is worth its time.
    std::map<std::string, std::string> masks;
    std::set<std::string> served;
    for (const auto& pick : leaves_of(current, "PickBlocks")) {
        auto zone = zone_before(current, pick);
        if (!zone) continue;
        served.insert(*zone);
        auto rot = rotation_after(current, pick);
        if (rot && !masks.count(*zone)) masks[*zone] = current.at(*rot).params.at("mask");
    }
    if (s.context.block_info) {
        for (const auto& z : env.load_zones) {
            const auto mask = edit::rotation_mask(*s.context.block_info, z, env.carry_capacity);
            const auto rotated = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), '1'));
            if (served.count(z) || batch_value(env.carry_capacity, rotated) > 0.0) masks[z] = mask;
        }
    }

    std::ostringstream src;
    src << "(Sequence\n";
    for (std::size_t i = 0; i < env.load_zones.size(); ++i) {
        const auto& load = env.load_zones[i];
        if (!served.count(load) && !masks.count(load)) continue;
        src << "  (txn_" << load << ": RetryUntilSuccessful max_attempts=2\n"
            << "    (Sequence (Action NavigateTo zone=" << load << ") (Action PickBlocks count=" << env.carry_capacity
            << ")";
        auto m = masks.find(load);
        if (m != masks.end() && m->second.find('1') != std::string::npos) {
            src << " (rotate_" << load << ": Action RotateBlocks mask=" << m->second << ")";
        }
        src << " (Action NavigateTo zone=" << env.unload_for(i) << ") (Action PlaceBlocks)))\n";
    }
    if (!leaves_of(current, "MoveShelf").empty()) {
        src << "  (shelf: Sequence (Action NavigateTo zone=" << env.shelf_zone << ") (Action MoveShelf))\n";
    }
    src << "  (Action ReturnToStart))\n";
    auto tree = dsl::parse(src.str());
    tree.metadata = current.metadata;
    return tree;
}

// Whether the mask patch made before episode i was followed by more
// colour-down deliveries than the episode it was drawn from.
bool refuted(const ActorMemory& memory, std::size_t i) {
    if (i == 0 || i >= memory.entries.size()) return false;
    const auto& before = memory.entries[i - 1];
    const auto& after = memory.entries[i];
    return before.rule == to_string(Rule::TargetedRotation) && before.evidence.misoriented &&
           after.evidence.misoriented && *after.evidence.misoriented > *before.evidence.misoriented;
}

std::optional<bt::BehaviorTree> targeted_rotation(const Situation& s) {
    const auto misoriented = reports(s.feedback, IssueCategory::MisorientedPlacement);
    auto tree = s.context.current_bt;
    const auto& trace = trace_of(s.context);

    if (s.context.block_info) {
        if (misoriented.empty()) return std::nullopt;
        std::map<std::string, std::size_t> taken;
        for (const auto& pick : leaves_of(tree, "PickBlocks")) {
            auto zone = zone_before(tree, pick);
            if (!zone) continue;
            int count = 0;
            try {
                count = std::stoi(tree.at(pick).params.at("count"));
            } catch (const std::exception&) {
                continue;
            }
            std::vector<sim::BlockState> remaining;
            std::size_t skip = taken[*zone];
            for (const auto& b : *s.context.block_info) {
                if (b.location.kind != sim::BlockLocation::Kind::InZone || b.location.zone != *zone) continue;
                if (skip > 0) {
                    --skip;
                    continue;
                }
                remaining.push_back(b);
            }
            taken[*zone] += static_cast<std::size_t>(count);
            set_rotation(tree, pick, edit::rotation_mask(remaining, *zone, static_cast<std::size_t>(count)),
                         "rotate_" + *zone);
        }
        return tree;
    }

    const auto& entries = s.memory.entries;
    const bool misrotated = std::any_of(trace.begin(), trace.end(), [](const bt::TraceEvent& ev) {
        return ev.detail.find("fault=MisRotation") != std::string::npos;
    });
    if (!entries.empty() && !misrotated && entries.back().rule == to_string(Rule::TargetedRotation) &&
        entries.back().evidence.misoriented && s.now.misoriented &&
        *s.now.misoriented > *entries.back().evidence.misoriented) {
        auto previous = dsl::parse(entries.back().bt_source);
        previous.metadata = tree.metadata;
        return previous;
    }
    if (misoriented.empty() || !s.critic_reliable()) return std::nullopt;
    // Slot of each block in the last successful pick that lifted it, and
    // whether the rotation that followed was itself faulty.
    struct Slot {
        bt::NodeId pick;
        std::size_t index = 0;
    };
    std::map<std::string, Slot> slot_of;
    std::set<bt::NodeId> misrotated_after;
    std::optional<bt::NodeId> last_pick;
    for (const auto& ev : trace) {
        if (ev.event != bt::TraceEvent::Kind::Returned) continue;
        if (ev.label == "Action:PickBlocks" && ev.status == bt::TickStatus::Success) {
            last_pick = ev.node_id;
            misrotated_after.erase(ev.node_id);
            const auto carried = split_list(detail_value(ev.detail, "carried").value_or(""));
            for (std::size_t i = 0; i < carried.size(); ++i) slot_of[carried[i]] = {ev.node_id, i};
        } else if (ev.label == "Action:RotateBlocks" && last_pick &&
                   ev.detail.find("fault=MisRotation") != std::string::npos) {
            misrotated_after.insert(*last_pick);
        }
    }
    // Claims beyond what the score allows mean some of them are misreads.
    std::set<std::string> claimed;
    for (const auto* r : misoriented) {
        if (slot_of.count(r->block_id)) claimed.insert(r->block_id);
    }
    if (s.now.misoriented && static_cast<int>(claimed.size()) > *s.now.misoriented) return std::nullopt;
    std::map<bt::NodeId, std::string> flips;
    for (const auto* r : misoriented) {
        auto it = slot_of.find(r->block_id);
        if (r->block_id.empty() || it == slot_of.end()) continue;
        const auto& [pick, index] = it->second;
        if (misrotated_after.count(pick) || !tree.contains(pick) || index >= sim::kCarryCapacity) continue;
        auto& f = flips.try_emplace(pick, std::string(sim::kCarryCapacity, '0')).first->second;
        f[index] = '1';
    }
    bool changed = false;
    for (const auto& [pick, flip] : flips) {
        std::string mask(sim::kCarryCapacity, '0');
        if (auto rot = rotation_after(tree, pick)) mask = tree.at(*rot).params.at("mask");
        for (std::size_t i = 0; i < mask.size(); ++i) {
            if (flip[i] == '1') mask[i] = mask[i] == '1' ? '0' : '1';
        }
        set_rotation(tree, pick, mask, "rotate_" + zone_before(tree, pick).value_or("batch"));
        changed = true;
    }
    if (!changed) return std::nullopt;
    const auto source = dsl::serialize(tree);
    for (std::size_t i = 1; i < entries.size(); ++i) {
        if (refuted(s.memory, i) && entries[i].bt_source == source) return std::nullopt;
    }
    return tree;
}

std::optional<bt::BehaviorTree> time_budget(const Situation& s) {
    if (!reported(s.feedback, IssueCategory::TimeOverrun)) return std::nullopt;
    auto tree = s.context.current_bt;
    if (remove_all(tree, "RotateBlocks")) return tree;
    const auto& env = s.context.environment;
    bool changed = remove_all(tree, "MoveShelf");
    for (const auto& id : leaves_of(tree, "NavigateTo")) {
        const auto& zone = tree.at(id).params.at("zone");
        if (zone == env.shelf_zone || zone == env.shelf_target) {
            edit::remove_subtree(tree, id);
            changed = true;
        }
    }
    if (!changed) return std::nullopt;
    return tree;
}

RefineResult identity(const ActorContext& c, std::optional<std::string> error = std::nullopt) {
    return {c.current_bt, {}, "identity", std::move(error)};
}

}  // namespace

std::optional<int> misoriented_from_score(const ActorContext& context, int real_score) {
    const auto& trace = trace_of(context);
    const auto& env = context.environment;
    const auto& tree = context.current_bt;
    if (trace.empty()) return std::nullopt;
    const scoring::ScoreRules rules;
    double clock = 0.0;
    int inside = 0, outside = 0, eligible = 0;
    std::string zone = env.start_zone;
    bool shelf_moved = env.shelf_zone == env.shelf_target;
    for (const auto& ev : trace) {
        clock = std::max(clock, ev.sim_time);
        if (ev.event != bt::TraceEvent::Kind::Returned || ev.status != bt::TickStatus::Success) continue;
        const auto faults = [&](std::string_view kind) {
            int n = 0;
            for (auto at = ev.detail.find(kind); at != std::string::npos; at = ev.detail.find(kind, at + 1)) ++n;
            return n;
        };
        outside += faults("fault=DropInTransit");
        if (ev.label == "Action:NavigateTo" && tree.contains(ev.node_id)) {
            zone = tree.at(ev.node_id).params.at("zone");
        } else if (ev.label == "Action:ReturnToStart") {
            zone = env.start_zone;
        } else if (ev.label == "Action:MoveShelf") {
            zone = env.shelf_target;
            shelf_moved = true;
        } else if (ev.label == "Action:PlaceBlocks") {
            const int placed = static_cast<int>(split_list(detail_value(ev.detail, "blocks").value_or("")).size());
            const int lost = faults("fault=PlaceOffsetOutside");
            inside += placed - lost;
            outside += lost;
            if (placed >= static_cast<int>(sim::kCarryCapacity) && lost == 0) ++eligible;
        }
    }
    int known = -static_cast<int>(std::floor(clock)) + (clock > env.time_limit ? rules.overtime : 0) +
                (zone == env.start_zone ? rules.final_position : 0) + (shelf_moved ? rules.shelf_bonus : 0) +
                outside * rules.outside_box + inside * rules.correct_box;
    const int residual = real_score - known;
    std::optional<int> found;
    for (int o = 0; o <= inside; ++o) {
        for (int b = 0; b <= eligible && 4 * b <= inside - o; ++b) {
            if (o * (rules.incorrect_box - rules.correct_box) + b * rules.full_batch != residual) continue;
            if (found && *found != o) return std::nullopt;
            found = o;
        }
    }
    return found;
}

EpisodeEvidence evidence_of(const ActorContext& context, const std::optional<critic::CriticFeedback>& feedback,
                            int real_score) {
    EpisodeEvidence e;
    e.misoriented = misoriented_from_score(context, real_score);
    const auto& trace = trace_of(context);
    std::set<bt::NodeId> clean_places;
    for (const auto& ev : trace) {
        if (ev.event != bt::TraceEvent::Kind::Returned) continue;
        const bool transport = ev.label == "Action:PickBlocks" || ev.label == "Action:PlaceBlocks" ||
                               ev.label == "Action:NavigateTo";
        if (transport && (ev.status == bt::TickStatus::Failure ||
                          ev.detail.find("fault=DropInTransit") != std::string::npos)) {
            e.transport_failure = true;
        }
        if (ev.label == "Action:PlaceBlocks" && ev.status == bt::TickStatus::Success && !has_fault(ev.detail)) {
            clean_places.insert(ev.node_id);
        }
    }
    if (feedback) {
        for (const auto& i : feedback->issues) {
            if (transport_category(i.category)) e.transport_failure = true;
            // The critic claims a misplacement where the trace shows a clean deposit.
            if (!context.block_info && i.category == IssueCategory::BlockIncorrectlyPlaced && i.node &&
                clean_places.count(*i.node)) {
                e.critic_contradicted = true;
            }
        }
    }
    return e;
}

RefineResult RuleBasedActor::refine(const ActorContext& context, const std::optional<critic::CriticFeedback>& feedback,
                                    int real_score, const ActorMemory& memory, Rng&) {
    const Situation s{context, feedback, real_score, memory, evidence_of(context, feedback, real_score)};
    using RuleFn = std::optional<bt::BehaviorTree> (*)(const Situation&);
    const std::pair<Rule, RuleFn> rules[] = {
        {Rule::CursorWrap, cursor_wrap},
        {Rule::DropRotation, drop_rotation},
        {Rule::Transactional, transactional},
        {Rule::TargetedRotation, targeted_rotation},
        {Rule::TimeBudget, time_budget},
    };
    std::string rejected;
    for (const auto& [rule, fn] : rules) {
        if (!options_.on(rule)) continue;
        std::optional<bt::BehaviorTree> candidate;
        try {
            candidate = fn(s);
        } catch (const std::exception& e) {
            rejected += std::string(to_string(rule)) + ": " + e.what() + "\n";
            continue;
        }
        if (!candidate || bt::shape_equal(*candidate, context.current_bt)) continue;
        const auto report = dsl::validate(*candidate, context.node_library);
        if (!report.ok()) {
            rejected += std::string(to_string(rule)) + ": " + report.to_text();
            continue;
        }
        auto d = dsl::diff(context.current_bt, *candidate);
        return {std::move(*candidate), std::move(d), std::string(to_string(rule)), std::nullopt};
    }
    if (!rejected.empty()) return identity(context, "RefinementFailed: " + rejected);
    return identity(context);
}

// ---------------------------------------------------------------------------
// Score-only baseline

namespace {

enum class Mutation { DeleteOptionalLeaf, ChangeMaxAttempts, ReorderSiblings };

bool optional_leaf(const bt::BTNode& n) {
    return n.kind == bt::NodeKind::Condition || is_action(n, "RotateBlocks") || is_action(n, "MoveShelf");
}

std::optional<bt::BehaviorTree> mutate(const bt::BehaviorTree& current, Mutation m, Rng& rng) {
    auto tree = current;
    std::vector<bt::NodeId> pool;
    for (const auto& id : tree.preorder()) {
        const auto& n = tree.at(id);
        if (m == Mutation::DeleteOptionalLeaf && optional_leaf(n)) pool.push_back(id);
        if (m == Mutation::ChangeMaxAttempts && n.kind == bt::NodeKind::RetryUntilSuccessful) pool.push_back(id);
        if (m == Mutation::ReorderSiblings && bt::is_composite(n.kind) && n.children.size() >= 2) pool.push_back(id);
    }
    if (pool.empty()) return std::nullopt;
    const auto& id = pool[rng.below(pool.size())];
    switch (m) {
        case Mutation::DeleteOptionalLeaf: edit::remove_subtree(tree, id); break;
        case Mutation::ChangeMaxAttempts: {
            const int now = tree.at(id).max_attempts();
            int next = 1 + static_cast<int>(rng.below(5));
            if (next == now) next = now % 5 + 1;
            tree.at(id).params["max_attempts"] = std::to_string(next);
            break;
        }
        case Mutation::ReorderSiblings: {
            auto& c = tree.at(id).children;
            const auto a = rng.below(c.size());
            auto b = rng.below(c.size() - 1);
            if (b >= a) ++b;
            std::swap(c[a], c[b]);
            break;
        }
    }
    return tree;
}

}  // namespace

RefineResult ScoreOnlyActor::refine(const ActorContext& context, const std::optional<critic::CriticFeedback>&,
                                    int real_score, const ActorMemory& memory, Rng& rng) {
    const auto best = memory.best_score();
    if (!best || real_score > *best) return identity(context);
    const Mutation kinds[] = {Mutation::DeleteOptionalLeaf, Mutation::ChangeMaxAttempts, Mutation::ReorderSiblings};
    for (int attempt = 0; attempt < max_attempts_; ++attempt) {
        const auto m = kinds[rng.below(3)];
        auto candidate = mutate(context.current_bt, m, rng);
        if (!candidate || bt::shape_equal(*candidate, context.current_bt)) continue;
        if (!dsl::validate(*candidate, context.node_library).ok()) continue;
        auto d = dsl::diff(context.current_bt, *candidate);
        static const char* names[] = {"delete-optional-leaf", "change-max-attempts", "reorder-siblings"};
        return {std::move(*candidate), std::move(d), names[static_cast<int>(m)], std::nullopt};
    }
    return identity(context, "RefinementFailed: no valid mutation in " + std::to_string(max_attempts_) + " attempts");
}

// ---------------------------------------------------------------------------

std::unique_ptr<Actor> make_actor(const std::string& spec, const RemoteActorConfig& remote) {
    if (spec == "rule") return std::make_unique<RuleBasedActor>();
    if (spec == "score-only") return std::make_unique<ScoreOnlyActor>();
    if (spec == "remote") return std::make_unique<RemoteActor>(remote);
    throw std::invalid_argument("unknown actor '" + spec + "' (expected rule, score-only or remote)");
}

void to_json(json& j, const EpisodeEvidence& v) {
    j = json{{"transport_failure", v.transport_failure},
             {"critic_contradicted", v.critic_contradicted},
             {"misoriented", v.misoriented ? json(*v.misoriented) : json(nullptr)}};
}

void from_json(const json& j, EpisodeEvidence& v) {
    j.at("transport_failure").get_to(v.transport_failure);
    j.at("critic_contradicted").get_to(v.critic_contradicted);
    v.misoriented.reset();
    if (const auto& m = j.at("misoriented"); !m.is_null()) v.misoriented = m.get<int>();
}

void to_json(json& j, const MemoryEntry& v) {
    j = json{{"episode_index", v.episode_index},
             {"final_feedback", v.final_feedback ? json(*v.final_feedback) : json(nullptr)},
             {"real_score", v.real_score},
             {"bt_diff", v.bt_diff},
             {"evidence", v.evidence},
             {"bt_source", v.bt_source},
             {"rule", v.rule}};
}

void from_json(const json& j, MemoryEntry& v) {
    v = MemoryEntry{};
    j.at("episode_index").get_to(v.episode_index);
    if (const auto& f = j.at("final_feedback"); !f.is_null()) v.final_feedback = f.get<critic::CriticFeedback>();
    j.at("real_score").get_to(v.real_score);
    j.at("bt_diff").get_to(v.bt_diff);
    j.at("evidence").get_to(v.evidence);
    j.at("bt_source").get_to(v.bt_source);
    j.at("rule").get_to(v.rule);
}

}  // namespace vrl::actor
