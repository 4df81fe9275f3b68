// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vrl/critic/critic.hpp"
#include "vrl/sim/io.hpp"

using nlohmann::json;

namespace vrl::critic {

std::string_view to_string(Severity s) {
    switch (s) {
        case Severity::Clean: return "Clean";
        case Severity::Minor: return "Minor";
        case Severity::Borderline: return "Borderline";
        case Severity::Actionable: return "Actionable";
        case Severity::Severe: return "Severe";
    }
    return "Clean";
}

std::optional<Severity> severity_from_string(std::string_view text) {
    for (auto s : {Severity::Clean, Severity::Minor, Severity::Borderline, Severity::Actionable, Severity::Severe}) {
        if (to_string(s) == text) return s;
    }
    return std::nullopt;
}

std::string_view to_string(CriticError::Code code) {
    switch (code) {
        case CriticError::Code::Timeout: return "Timeout";
        case CriticError::Code::MalformedReply: return "MalformedReply";
        case CriticError::Code::EndpointError: return "EndpointError";
    }
    return "EndpointError";
}

bool alarm(double s, double c) { return s >= 0.5 || c < 0.3; }
bool alarm(const CriticFeedback& f) { return alarm(f.alarm_score, f.confidence); }
bool alarm(const std::optional<CriticFeedback>& f) { return f && alarm(*f); }

double sample_alarm_score(Severity severity, Rng& rng) {
    switch (severity) {
        case Severity::Clean: return 0.0;
        case Severity::Minor: return 0.1 + 0.2 * rng.uniform01();
        case Severity::Borderline: return 0.3 + 0.2 * rng.uniform_open01();
        case Severity::Actionable: return 0.5 + 0.2 * rng.uniform01();
        case Severity::Severe: return 1.0 - 0.3 * rng.uniform01();
    }
    return 0.0;
}

bool in_bin(double s, Severity severity) {
    switch (severity) {
        case Severity::Clean: return s == 0.0;
        case Severity::Minor: return s >= 0.1 && s <= 0.3;
        case Severity::Borderline: return s > 0.3 && s < 0.5;
        case Severity::Actionable: return s >= 0.5 && s <= 0.7;
        case Severity::Severe: return s > 0.7 && s <= 1.0;
    }
    return false;
}

Severity severity_of(const sim::GroundTruthIssue& issue) {
    switch (issue.category) {
        case IssueCategory::DropInTransit: return Severity::Severe;
        case IssueCategory::MisorientedPlacement:
        case IssueCategory::BlockOutsideZones:
        case IssueCategory::PickFailure:
        case IssueCategory::MisRotation:
        case IssueCategory::VacuousSubtreeSuccess:
        case IssueCategory::TimeOverrun: return Severity::Actionable;
        case IssueCategory::BlockIncorrectlyPlaced:
            // an offset that still overlaps the zone is cosmetic; an undelivered block is not
            return issue.issue_id.rfind("ev", 0) == 0 ? Severity::Minor : Severity::Actionable;
        case IssueCategory::SetupAnomaly: return Severity::Borderline;
        case IssueCategory::NavigationStall:
        case IssueCategory::ShelfNotRelocated: return Severity::Minor;
    }
    return Severity::Minor;
}

double ConfidenceModel::sample(Rng& rng) const {
    return std::clamp(mean + spread * (2.0 * rng.uniform01() - 1.0), 0.0, 1.0);
}

double CriticProfile::detect(IssueCategory c) const {
    auto it = p_detect.find(c);
    return it == p_detect.end() ? 0.0 : it->second;
}

void CriticProfile::check() const {
    auto prob = [this](double p, const char* what) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("profile " + name + ": " + what + " outside [0,1]");
    };
    for (const auto& [c, p] : p_detect) prob(p, "p_detect");
    prob(p_false_positive, "p_false_positive");
    prob(p_color_misread, "p_color_misread");
    prob(p_zone_miscount, "p_zone_miscount");
    prob(confidence_when_correct.mean, "confidence_when_correct.mean");
    prob(confidence_when_wrong.mean, "confidence_when_wrong.mean");
}

CriticProfile uniform_profile(std::string name, double p_detect, double p_false_positive) {
    CriticProfile p;
    p.name = std::move(name);
    for (auto c : sim::all_issue_categories()) p.p_detect[c] = p_detect;
    p.p_false_positive = p_false_positive;
    return p;
}

const std::vector<std::string>& profile_names() {
    static const std::vector<std::string> names = {"perfect",     "blind",           "ft-3B-like",      "7B-like",
                                                   "gemini-like", "gemini+blockinfo", "color-misreading"};
    return names;
}

CriticProfile profile_by_name(const std::string& name) {
    if (name == "perfect") {
        auto p = uniform_profile(name, 1.0, 0.0);
        p.confidence_when_correct = {0.95, 0.05};
        p.confidence_when_wrong = {0.6, 0.1};
        return p;
    }
    if (name == "blind") {
        auto p = uniform_profile(name, 0.0, 0.0);
        p.confidence_when_correct = {0.6, 0.1};
        p.confidence_when_wrong = {0.6, 0.1};
        return p;
    }
    if (name == "ft-3B-like") {
        auto p = uniform_profile(name, 0.85, 0.05);
        p.p_color_misread = 0.05;
        p.p_zone_miscount = 0.02;
        p.confidence_when_correct = {0.7, 0.1};
        p.confidence_when_wrong = {0.45, 0.1};
        return p;
    }
    if (name == "7B-like") {
        auto p = uniform_profile(name, 0.6, 0.35);
        p.p_color_misread = 0.2;
        p.p_zone_miscount = 0.08;
        p.confidence_when_correct = {0.8, 0.15};
        p.confidence_when_wrong = {0.8, 0.15};
        return p;
    }
    if (name == "gemini-like" || name == "gemini+blockinfo") {
        auto p = uniform_profile(name, 0.95, 0.03);
        p.p_color_misread = 0.03;
        p.p_zone_miscount = 0.01;
        p.confidence_when_correct = {0.9, 0.05};
        p.confidence_when_wrong = {0.75, 0.1};
        p.block_info = name == "gemini+blockinfo";
        return p;
    }
    if (name == "color-misreading") {
        auto p = uniform_profile(name, 0.9, 0.0);
        p.p_color_misread = 0.5;
        p.p_zone_miscount = 0.9;
        p.confidence_when_correct = {0.8, 0.1};
        p.confidence_when_wrong = {0.7, 0.1};
        return p;
    }
    throw std::invalid_argument("unknown critic profile '" + name + "'");
}

namespace {

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

struct Placement {
    bt::NodeId node;
    std::string zone;
    std::vector<std::string> blocks;
};

// Successful PlaceBlocks leaves in the trace, parsed from their detail
// ("zone=U1 blocks=b1,b2").
std::vector<Placement> placements_in(const bt::Trace& trace) {
    std::vector<Placement> out;
    for (const auto& ev : trace) {
        if (ev.event != bt::TraceEvent::Kind::Returned || ev.label != "Action:PlaceBlocks" ||
            ev.status != bt::TickStatus::Success) {
            continue;
        }
        Placement p{ev.node_id, {}, {}};
        std::istringstream words(ev.detail);
        std::string word;
        while (words >> word) {
            if (word.rfind("zone=", 0) == 0) p.zone = word.substr(5);
            if (word.rfind("blocks=", 0) == 0) {
                std::istringstream ids(word.substr(7));
                std::string id;
                while (std::getline(ids, id, ',')) p.blocks.push_back(id);
            }
        }
        out.push_back(std::move(p));
    }
    return out;
}

std::optional<bt::NodeId> placing_node(const std::vector<Placement>& placements, const std::string& block) {
    std::optional<bt::NodeId> node;
    for (const auto& p : placements) {
        if (std::find(p.blocks.begin(), p.blocks.end(), block) != p.blocks.end()) node = p.node;
    }
    return node;
}

std::string evidence_for(const sim::GroundTruthIssue& g, const sim::Observation& obs) {
    switch (g.category) {
        case IssueCategory::MisorientedPlacement:
            for (const auto& b : obs.blocks) {
                if (b.block_id == g.block_id) {
                    return "observation: " + b.block_id + " shows " + std::string(sim::to_string(b.orientation)) +
                           " in " + b.location.zone;
                }
            }
            return "observation: " + g.block_id;
        case IssueCategory::ShelfNotRelocated: return "observation: shelf at " + obs.shelf_zone;
        case IssueCategory::TimeOverrun:
            return "observation: clock " + fmt2(obs.clock) + " s, limit " + fmt2(obs.time_limit) + " s";
        default: return "trace: " + g.description;
    }
}

std::string render(const CriticFeedback& f) {
    std::ostringstream os;
    os << '[' << sim::to_string(f.mode) << "] ";
    if (f.issues.empty()) {
        os << "No issues observed.";
    } else {
        os << f.issues.size() << " issue(s):";
        for (const auto& i : f.issues) {
            os << "\n- " << sim::to_string(i.category);
            if (i.node) os << " at node '" << *i.node << "'";
            os << " (" << to_string(i.severity) << "): " << i.evidence;
        }
    }
    os << "\nalarm_score=" << fmt2(f.alarm_score) << " confidence=" << fmt2(f.confidence);
    return os.str();
}

}  // namespace

OracleCritic::OracleCritic(CriticProfile profile) : profile_(std::move(profile)) { profile_.check(); }

// Draw order per call: one detection draw per considered ground-truth issue
// (plus a tolerance draw for each reported Minor one), one false-positive
// draw, then the alarm score and the confidence.
std::optional<CriticFeedback> OracleCritic::assess(const CriticInput& in, CriticMemory& memory, Rng& rng) {
    static const sim::Observation empty_obs;
    static const bt::Trace empty_trace;
    static const std::vector<sim::GroundTruthIssue> no_issues;
    const auto& obs = in.observation ? *in.observation : empty_obs;
    const auto& trace = in.trace ? *in.trace : empty_trace;
    const auto& truth = in.ground_truth ? *in.ground_truth : no_issues;

    CriticFeedback fb;
    fb.mode = in.mode;
    const bool tolerant = in.mode != Mode::Initial && profile_.severity_tolerance == Tolerance::Tolerant;
    const bool fresh_only = in.mode != Mode::Final;
    std::set<IssueCategory> considered;
    std::set<IssueCategory> reported_real;
    bool false_report = false;

    for (const auto& g : truth) {
        if (fresh_only && memory.reported.count(g.issue_id)) continue;
        considered.insert(g.category);
        bool seen = rng.bernoulli(profile_.detect(g.category));
        if (g.category == IssueCategory::MisorientedPlacement && !profile_.block_info) {
            auto it = std::find_if(obs.blocks.begin(), obs.blocks.end(),
                                   [&](const sim::BlockState& b) { return b.block_id == g.block_id; });
            if (it == obs.blocks.end() || it->orientation != sim::Orientation::OrangeUp) seen = false;
        }
        if (!seen) continue;
        Severity sev = severity_of(g);
        if (tolerant && sev == Severity::Minor && rng.bernoulli(0.5)) sev = Severity::Clean;
        fb.issues.push_back({g.category, g.node, sev, evidence_for(g, obs), g.block_id});
        reported_real.insert(g.category);
        memory.reported.insert(g.issue_id);
    }

    if (!profile_.block_info) {
        const auto placements = placements_in(trace);
        std::set<std::string> truly_misoriented;
        for (const auto& g : truth) {
            if (g.category == IssueCategory::MisorientedPlacement) truly_misoriented.insert(g.block_id);
        }
        for (const auto& b : obs.blocks) {
            if (b.location.kind != sim::BlockLocation::Kind::InZone || b.orientation != sim::Orientation::OrangeUp) {
                continue;
            }
            const auto zone = std::find_if(obs.zones.begin(), obs.zones.end(),
                                            [&](const sim::ZoneView& z) { return z.zone_id == b.location.zone; });
            if (zone == obs.zones.end() || zone->kind != sim::ZoneKind::Unload) continue;
            if (truly_misoriented.count(b.block_id)) continue;
            const auto key = "perceived:MisorientedPlacement:" + b.block_id;
            if (fresh_only && memory.reported.count(key)) continue;
            memory.reported.insert(key);
            fb.issues.push_back({IssueCategory::MisorientedPlacement, placing_node(placements, b.block_id),
                                 Severity::Actionable,
                                 "observation: " + b.block_id + " shows OrangeUp in " + b.location.zone, b.block_id});
            false_report = true;
        }
        for (const auto& z : obs.zones) {
            if (z.kind != sim::ZoneKind::Unload || z.blue_up + z.orange_up > 0) continue;
            const Placement* into = nullptr;
            for (const auto& p : placements) {
                if (p.zone == z.zone_id) into = &p;
            }
            if (!into) continue;
            const auto key = "perceived:ZoneEmpty:" + z.zone_id;
            if (fresh_only && memory.reported.count(key)) continue;
            memory.reported.insert(key);
            fb.issues.push_back({IssueCategory::BlockIncorrectlyPlaced, into->node, Severity::Actionable,
                                 "observation: unload zone " + z.zone_id + " appears empty after PlaceBlocks", {}});
            false_report = true;
        }
    }

    if (rng.bernoulli(profile_.p_false_positive)) {
        const auto& cats = sim::all_issue_categories();
        const auto cat = cats[rng.below(cats.size())];
        const Severity sev = rng.bernoulli(0.5) ? Severity::Minor : Severity::Borderline;
        std::vector<bt::NodeId> nodes;
        for (const auto& ev : trace) {
            if (ev.event == bt::TraceEvent::Kind::Entered) nodes.push_back(ev.node_id);
        }
        std::optional<bt::NodeId> node;
        if (!nodes.empty()) node = nodes[rng.below(nodes.size())];
        fb.issues.push_back({cat, node, sev, "observation: possible " + std::string(sim::to_string(cat)), {}});
        false_report = true;
    }

    Severity worst = Severity::Clean;
    for (const auto& i : fb.issues) worst = std::max(worst, i.severity);
    fb.alarm_score = sample_alarm_score(worst, rng);
    const bool correct = !false_report && reported_real == considered;
    fb.confidence = (correct ? profile_.confidence_when_correct : profile_.confidence_when_wrong).sample(rng);
    fb.text = render(fb);
    memory.feedback.push_back(fb);
    return fb;
}

// ---------------------------------------------------------------------------
// JSON

void to_json(json& j, Severity v) { j = std::string(to_string(v)); }

void from_json(const json& j, Severity& v) {
    const auto text = j.get<std::string>();
    auto s = severity_from_string(text);
    if (!s) throw std::invalid_argument("unknown severity class '" + text + "'");
    v = *s;
}

void to_json(json& j, const IssueReport& v) {
    j = json{{"category", v.category}, {"severity_class", v.severity}, {"evidence", v.evidence}};
    j["node"] = v.node ? json(*v.node) : json(nullptr);
    if (!v.block_id.empty()) j["block_id"] = v.block_id;
}

void from_json(const json& j, IssueReport& v) {
    v = IssueReport{};
    j.at("category").get_to(v.category);
    j.at("severity_class").get_to(v.severity);
    if (auto it = j.find("evidence"); it != j.end()) it->get_to(v.evidence);
    if (auto it = j.find("node"); it != j.end() && !it->is_null()) v.node = it->get<std::string>();
    if (auto it = j.find("block_id"); it != j.end()) it->get_to(v.block_id);
}

void to_json(json& j, const CriticFeedback& v) {
    j = json{{"mode", v.mode},
             {"text", v.text},
             {"issues", v.issues},
             {"alarm_score", v.alarm_score},
             {"confidence", v.confidence}};
}

void from_json(const json& j, CriticFeedback& v) {
    j.at("mode").get_to(v.mode);
    j.at("text").get_to(v.text);
    j.at("issues").get_to(v.issues);
    j.at("alarm_score").get_to(v.alarm_score);
    j.at("confidence").get_to(v.confidence);
}

void to_json(json& j, const CriticProfile& v) {
    json detect = json::object();
    for (const auto& [c, p] : v.p_detect) detect[std::string(sim::to_string(c))] = p;
    j = json{{"name", v.name},
             {"p_detect", detect},
             {"p_false_positive", v.p_false_positive},
             {"p_color_misread", v.p_color_misread},
             {"p_zone_miscount", v.p_zone_miscount},
             {"confidence_when_correct", {{"mean", v.confidence_when_correct.mean},
                                          {"spread", v.confidence_when_correct.spread}}},
             {"confidence_when_wrong", {{"mean", v.confidence_when_wrong.mean},
                                        {"spread", v.confidence_when_wrong.spread}}},
             {"severity_tolerance", v.severity_tolerance == Tolerance::Strict ? "Strict" : "Tolerant"},
             {"block_info", v.block_info}};
}

void from_json(const json& j, CriticProfile& v) {
    v = CriticProfile{};
    j.at("name").get_to(v.name);
    const auto& detect = j.at("p_detect");
    if (detect.is_number()) {
        for (auto c : sim::all_issue_categories()) v.p_detect[c] = detect.get<double>();
    } else {
        for (const auto& [k, p] : detect.items()) v.p_detect[json(k).get<IssueCategory>()] = p.get<double>();
    }
    auto get = [&j](const char* key, auto& out) {
        if (auto it = j.find(key); it != j.end()) it->get_to(out);
    };
    get("p_false_positive", v.p_false_positive);
    get("p_color_misread", v.p_color_misread);
    get("p_zone_miscount", v.p_zone_miscount);
    get("block_info", v.block_info);
    if (auto it = j.find("confidence_when_correct"); it != j.end()) {
        v.confidence_when_correct = {it->at("mean").get<double>(), it->at("spread").get<double>()};
    }
    if (auto it = j.find("confidence_when_wrong"); it != j.end()) {
        v.confidence_when_wrong = {it->at("mean").get<double>(), it->at("spread").get<double>()};
    }
    if (auto it = j.find("severity_tolerance"); it != j.end()) {
        v.severity_tolerance = it->get<std::string>() == "Strict" ? Tolerance::Strict : Tolerance::Tolerant;
    }
}

std::unique_ptr<Critic> make_critic(const std::string& spec, const RemoteConfig& remote) {
    if (spec == "none") return std::make_unique<NullCritic>();
    if (spec == "remote") return std::make_unique<RemoteCritic>(remote);
    if (spec.size() > 5 && spec.substr(spec.size() - 5) == ".json") {
        std::ifstream in(spec);
        if (!in) throw std::invalid_argument("cannot open critic profile " + spec);
        return std::make_unique<OracleCritic>(json::parse(in).get<CriticProfile>());
    }
    return std::make_unique<OracleCritic>(profile_by_name(spec));
}

}  // namespace vrl::critic
