// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

#include "vrl/scoring/scoring.hpp"

namespace vrl::scoring {

namespace {

bool in_unload(const sim::WorldState& w, const sim::BlockState& b) {
    if (b.location.kind != sim::BlockLocation::Kind::InZone) return false;
    if (b.location.placement == sim::Placement::Adjacent) return false;
    const auto* z = w.config.zone(b.location.zone);
    return z && z->kind == sim::ZoneKind::Unload;
}

bool correct(const sim::WorldState& w, const sim::BlockState& b) {
    return in_unload(w, b) && b.orientation == sim::Orientation::BlueUp;
}

}  // namespace

ScoreBreakdown score_episode(const sim::WorldState& w, const ScoreRules& rules) {
    ScoreBreakdown s;
    s.time_penalty = -static_cast<int>(std::floor(w.clock));
    if (w.overtime()) s.overtime_penalty = rules.overtime;
    for (const auto& b : w.blocks) {
        if (in_unload(w, b)) {
            if (b.orientation == sim::Orientation::BlueUp) {
                s.correct_boxes += rules.correct_box;
            } else {
                s.incorrect_boxes += rules.incorrect_box;
            }
        } else if (b.location.kind == sim::BlockLocation::Kind::OutsideAllZones) {
            s.outside_boxes += rules.outside_box;
        }
    }
    for (const auto& ev : w.event_log) {
        if (ev.action != "PlaceBlocks" || !ev.success || ev.blocks.size() < sim::kCarryCapacity) continue;
        bool all = true;
        for (const auto& id : ev.blocks) all = all && correct(w, w.block(id));
        if (all) s.batch_bonuses += rules.full_batch;
    }
    if (w.robot_zone == w.config.start_zone().zone_id) s.final_position_bonus = rules.final_position;
    if (w.shelf_zone == w.config.shelf.target_zone) s.shelf_bonus = rules.shelf_bonus;
    s.total = s.component_sum();
    return s;
}

MatchResult match_issues(const std::vector<sim::GroundTruthIssue>& real, const std::vector<ReportedIssue>& reports) {
    MatchResult r;
    r.real = real.size();
    r.matched.assign(real.size(), false);
    std::vector<bool> used(reports.size(), false);

    auto compatible = [](const sim::GroundTruthIssue& g, const ReportedIssue& rep) {
        if (g.category != rep.category) return false;
        return !g.node || g.node == rep.node;
    };
    // Pass 0 prefers reports naming the same block, pass 1 takes any
    // compatible report, so specific reports are not wasted on vague issues.
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t i = 0; i < real.size(); ++i) {
            if (r.matched[i]) continue;
            for (std::size_t k = 0; k < reports.size(); ++k) {
                if (used[k] || !compatible(real[i], reports[k])) continue;
                if (pass == 0 && (real[i].block_id.empty() || real[i].block_id != reports[k].block_id)) continue;
                used[k] = true;
                r.matched[i] = true;
                ++r.detected;
                break;
            }
        }
    }
    return r;
}

double idr(std::size_t detected, std::size_t real) {
    if (real == 0) return 1.0;
    return static_cast<double>(std::min(detected, real)) / static_cast<double>(real);
}

const std::vector<Metric>& metrics() {
    static const std::vector<Metric> all = {
        {"score", [](const MetricsRecord& r) -> std::optional<double> { return r.score; }},
        {"idr", [](const MetricsRecord& r) { return r.idr; }},
        {"confidence", [](const MetricsRecord& r) { return r.mean_confidence; }},
        {"alarm_count", [](const MetricsRecord& r) -> std::optional<double> { return static_cast<double>(r.alarm_count); }},
        {"alarm_rate", [](const MetricsRecord& r) { return r.alarm_rate; }},
    };
    return all;
}

const Metric& metric(const std::string& name) {
    for (const auto& m : metrics()) {
        if (m.name == name) return m;
    }
    throw std::invalid_argument("unknown metric '" + name + "'");
}

std::vector<std::optional<double>> aggregate(const std::vector<Series>& series, const Metric& metric) {
    if (series.empty()) return {};
    const auto n = series.front().records.size();
    for (const auto& s : series) {
        if (s.records.size() != n) {
            throw ScoringError(ScoringError::Code::RaggedInput,
                               "series " + s.config + "/" + std::to_string(s.seed) + " has " +
                                   std::to_string(s.records.size()) + " episodes, expected " + std::to_string(n));
        }
    }
    std::vector<std::optional<double>> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0;
        int count = 0;
        for (const auto& s : series) {
            if (auto v = metric.value(s.records[i])) {
                sum += *v;
                ++count;
            }
        }
        if (count > 0) out[i] = sum / count;
    }
    return out;
}

void write_metric_csv(std::ostream& out, const std::vector<Series>& series, const Metric& metric) {
    const auto means = aggregate(series, metric);
    auto cell = [](std::optional<double> v) {
        if (!v) return std::string();
        std::ostringstream os;
        os << std::setprecision(10) << *v;
        return os.str();
    };
    out << "config,seed";
    for (std::size_t i = 0; i < means.size(); ++i) out << ',' << (i + 1);
    out << '\n';
    for (const auto& s : series) {
        out << s.config << ',' << s.seed;
        for (const auto& r : s.records) out << ',' << cell(metric.value(r));
        out << '\n';
    }
    out << "mean,";
    for (const auto& m : means) out << ',' << cell(m);
    out << '\n';
}

}  // namespace vrl::scoring
