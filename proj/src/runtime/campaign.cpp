// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include "vrl/bt/trace_json.hpp"
#include "vrl/dsl/diff_json.hpp"
#include "vrl/runtime/runtime.hpp"
#include "vrl/sim/io.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace vrl::scoring {

void to_json(json& j, const ScoreBreakdown& v) {
    j = json{{"time_penalty", v.time_penalty},     {"overtime_penalty", v.overtime_penalty},
             {"correct_boxes", v.correct_boxes},   {"batch_bonuses", v.batch_bonuses},
             {"incorrect_boxes", v.incorrect_boxes}, {"outside_boxes", v.outside_boxes},
             {"final_position_bonus", v.final_position_bonus}, {"shelf_bonus", v.shelf_bonus},
             {"total", v.total}};
}

void from_json(const json& j, ScoreBreakdown& v) {
    j.at("time_penalty").get_to(v.time_penalty);
    j.at("overtime_penalty").get_to(v.overtime_penalty);
    j.at("correct_boxes").get_to(v.correct_boxes);
    j.at("batch_bonuses").get_to(v.batch_bonuses);
    j.at("incorrect_boxes").get_to(v.incorrect_boxes);
    j.at("outside_boxes").get_to(v.outside_boxes);
    j.at("final_position_bonus").get_to(v.final_position_bonus);
    j.at("shelf_bonus").get_to(v.shelf_bonus);
    j.at("total").get_to(v.total);
}

namespace {
json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
std::optional<double> opt_from(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<double>();
}
}  // namespace

void to_json(json& j, const MetricsRecord& v) {
    j = json{{"episode_index", v.episode_index},
             {"score", v.score},
             {"idr", opt(v.idr)},
             {"mean_confidence", opt(v.mean_confidence)},
             {"alarm_count", v.alarm_count},
             {"critic_calls", v.critic_calls},
             {"alarm_rate", opt(v.alarm_rate)},
             {"detected_issue_count", v.detected_issue_count},
             {"real_issue_count", v.real_issue_count}};
}

void from_json(const json& j, MetricsRecord& v) {
    j.at("episode_index").get_to(v.episode_index);
    j.at("score").get_to(v.score);
    v.idr = opt_from(j, "idr");
    v.mean_confidence = opt_from(j, "mean_confidence");
    j.at("alarm_count").get_to(v.alarm_count);
    j.at("critic_calls").get_to(v.critic_calls);
    v.alarm_rate = opt_from(j, "alarm_rate");
    j.at("detected_issue_count").get_to(v.detected_issue_count);
    j.at("real_issue_count").get_to(v.real_issue_count);
}

}  // namespace vrl::scoring

namespace vrl::runtime {

// ---------------------------------------------------------------------------
// Run configuration

void RunConfig::check() const {
    if (field_configs.empty()) throw std::invalid_argument("run config needs at least one field config");
    if (episodes_per_config < 1) throw std::invalid_argument("episodes_per_config must be at least 1");
    if (seeds.empty()) throw std::invalid_argument("run config needs at least one seed");
    if (initial_bt.empty()) throw std::invalid_argument("run config needs an initial_bt");
    if (time_limit && !(*time_limit > 0)) throw std::invalid_argument("time_limit must be positive");
    if (jobs < 1) throw std::invalid_argument("jobs must be at least 1");
    fault_model.check();
}

namespace {

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

std::string resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
    const auto j = json::parse(read_file(path));
    const auto base = fs::path(path).parent_path();
    RunConfig c;
    c.name = j.value("name", fs::path(path).stem().string());
    for (const auto& f : j.at("field_configs")) c.field_configs.push_back(resolve(base, f.get<std::string>()));
    c.initial_bt = resolve(base, j.at("initial_bt").get<std::string>());
    c.episodes_per_config = j.value("episodes_per_config", std::size_t{10});
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    c.critic = j.value("critic", std::string("none"));
    if (c.critic.size() > 5 && c.critic.substr(c.critic.size() - 5) == ".json") c.critic = resolve(base, c.critic);
    c.actor = j.value("actor", std::string("score-only"));
    if (j.contains("disabled_rules")) c.disabled_rules = j.at("disabled_rules").get<std::vector<std::string>>();
    c.block_info = j.value("block_info", false);
    if (j.contains("fault_model")) {
        auto merged = json(sim::FaultModel{});
        merged.merge_patch(j.at("fault_model"));
        c.fault_model = merged.get<sim::FaultModel>();
    }
    if (j.contains("time_limit") && !j.at("time_limit").is_null()) c.time_limit = j.at("time_limit").get<double>();
    c.output_dir = j.value("output_dir", std::string("out/") + c.name);
    c.jobs = j.value("jobs", 1);
    c.critic_remote.url = env_or(kCriticUrlEnv, j.value("critic_url", std::string()));
    c.critic_remote.token = env_or(kTokenEnv, "");
    c.critic_remote.block_info = c.block_info;
    c.actor_remote.url = env_or(kActorUrlEnv, j.value("actor_url", std::string()));
    c.actor_remote.token = c.critic_remote.token;
    c.check();
    return c;
}

std::unique_ptr<critic::Critic> make_run_critic(const RunConfig& config) {
    const auto& spec = config.critic;
    if (spec == "none" || spec == "remote") return critic::make_critic(spec, config.critic_remote);
    critic::CriticProfile profile;
    if (spec.size() > 5 && spec.substr(spec.size() - 5) == ".json") {
        profile = json::parse(read_file(spec)).get<critic::CriticProfile>();
    } else {
        profile = critic::profile_by_name(spec);
    }
    profile.block_info = profile.block_info || config.block_info;
    return std::make_unique<critic::OracleCritic>(profile);
}

std::unique_ptr<actor::Actor> make_run_actor(const RunConfig& config) {
    if (config.actor != "rule") return actor::make_actor(config.actor, config.actor_remote);
    actor::RuleOptions options;
    for (const auto& name : config.disabled_rules) {
        bool found = false;
        for (std::size_t r = 0; r < options.enabled.size(); ++r) {
            if (actor::to_string(static_cast<actor::Rule>(r)) == name) {
                options.enabled[r] = false;
                found = true;
            }
        }
        if (!found) throw std::invalid_argument("unknown repair rule '" + name + "'");
    }
    return std::make_unique<actor::RuleBasedActor>(options);
}

// ---------------------------------------------------------------------------
// Campaign

CampaignResult run_campaign(const RunConfig& config, std::ostream* console) {
    config.check();
    const auto initial = dsl::parse(read_file(config.initial_bt));
    const auto report = dsl::validate(initial, bt::default_library());
    if (!report.ok()) throw std::invalid_argument("initial BT is invalid:\n" + report.to_text());

    struct Task {
        std::size_t field_index;
        std::uint64_t run_seed;
        std::vector<EpisodeRecord> records;
        std::vector<Notification> notifications;
    };
    std::vector<sim::FieldConfig> fields;
    std::vector<std::string> labels;
    for (const auto& path : config.field_configs) {
        auto f = sim::load_field_config(path);
        if (config.time_limit) f.time_limit = *config.time_limit;
        fields.push_back(std::move(f));
        labels.push_back(fs::path(path).stem().string());
    }
    std::vector<Task> tasks;
    for (std::size_t fi = 0; fi < fields.size(); ++fi) {
        for (auto seed : config.seeds) tasks.push_back({fi, seed, {}, {}});
    }

    auto run_task = [&](Task& t) {
        auto critic = make_run_critic(config);
        auto actor = make_run_actor(config);
        Lineage lin;
        lin.run_id = config.name;
        lin.config_label = labels[t.field_index];
        lin.run_seed = t.run_seed;
        lin.lineage_seed = lineage_seed(t.run_seed, t.field_index);
        lin.field = fields[t.field_index];
        lin.fault_model = config.fault_model;
        lin.block_info = config.block_info || critic->block_info();
        lin.critic = critic.get();
        lin.actor = actor.get();
        lin.notify = [&t](const Notification& n) { t.notifications.push_back(n); };
        auto tree = initial;
        for (std::size_t k = 1; k <= config.episodes_per_config; ++k) {
            auto r = run_episode(tree, lin, k);
            tree = std::move(r.refined);
            t.records.push_back(std::move(r.record));
        }
    };

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&]() {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            try {
                run_task(tasks[i]);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(config.jobs), tasks.size());
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    CampaignResult out;
    for (auto& t : tasks) {
        for (auto& n : t.notifications) {
            if (console) *console << n.console_line() << '\n';
            out.notifications.push_back(std::move(n));
        }
        for (auto& r : t.records) out.records.push_back(std::move(r));
    }
    out.series = series_of(out.records);
    return out;
}

std::vector<scoring::Series> series_of(const std::vector<EpisodeRecord>& records) {
    std::vector<scoring::Series> out;
    for (const auto& r : records) {
        auto it = std::find_if(out.begin(), out.end(), [&](const scoring::Series& s) {
            return s.config == r.config_label && s.seed == r.run_seed;
        });
        if (it == out.end()) {
            out.push_back({r.config_label, r.run_seed, {}});
            it = out.end() - 1;
        }
        it->records.push_back(r.metrics);
    }
    return out;
}

void write_reports(const std::vector<scoring::Series>& series, const std::string& output_dir) {
    fs::create_directories(output_dir);
    for (const auto& m : scoring::metrics()) {
        std::ofstream csv(fs::path(output_dir) / (m.name + ".csv"));
        scoring::write_metric_csv(csv, series, m);
    }
}

void write_campaign(const CampaignResult& result, const std::string& output_dir) {
    fs::create_directories(output_dir);
    {
        std::ofstream out(fs::path(output_dir) / "records.jsonl");
        for (const auto& r : result.records) out << json(r).dump() << '\n';
    }
    {
        std::ofstream out(fs::path(output_dir) / "notifications.jsonl");
        for (const auto& n : result.notifications) out << json(n).dump() << '\n';
    }
    write_reports(result.series, output_dir);
}

std::vector<EpisodeRecord> read_records(const std::string& jsonl_path) {
    std::ifstream in(jsonl_path);
    if (!in) throw std::invalid_argument("cannot open " + jsonl_path);
    std::vector<EpisodeRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            out.push_back(json::parse(line).get<EpisodeRecord>());
        } catch (const std::exception& e) {
            throw std::invalid_argument(jsonl_path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON

void to_json(json& j, const Checkpoint& v) {
    j = json{{"mode", v.mode},
             {"subtree", v.subtree ? json(*v.subtree) : json(nullptr)},
             {"observation", v.observation},
             {"feedback", v.feedback ? json(*v.feedback) : json(nullptr)},
             {"alarm_fired", v.alarm_fired}};
    if (!v.error.empty()) j["error"] = v.error;
}

void from_json(const json& j, Checkpoint& v) {
    v = Checkpoint{};
    j.at("mode").get_to(v.mode);
    if (const auto& s = j.at("subtree"); !s.is_null()) v.subtree = s.get<std::string>();
    j.at("observation").get_to(v.observation);
    if (const auto& f = j.at("feedback"); !f.is_null()) v.feedback = f.get<critic::CriticFeedback>();
    j.at("alarm_fired").get_to(v.alarm_fired);
    v.error = j.value("error", std::string());
}

void to_json(json& j, const Notification& v) {
    j = json{{"run_id", v.run_id},         {"config", v.config_label},  {"seed", v.lineage_seed},
             {"episode", v.episode_index}, {"checkpoint", v.checkpoint}, {"mode", v.mode},
             {"sim_time", v.sim_time},     {"alarm_score", v.alarm_score}, {"confidence", v.confidence},
             {"issues", v.issues}};
}

void to_json(json& j, const EpisodeRecord& v) {
    j = json{{"schema_version", kEpisodeSchema},
             {"run_id", v.run_id},
             {"config_label", v.config_label},
             {"episode_index", v.episode_index},
             {"run_seed", v.run_seed},
             {"lineage_seed", v.lineage_seed},
             {"seed", v.seed},
             {"field", v.field},
             {"fault_model", v.fault_model},
             {"critic", v.critic},
             {"actor", v.actor},
             {"block_info", v.block_info},
             {"bt_before", v.bt_before},
             {"bt_after", v.bt_after},
             {"bt_diff", v.bt_diff},
             {"refine_rule", v.refine_rule},
             {"checkpoints", v.checkpoints},
             {"full_trace", v.full_trace},
             {"ground_truth_issues", v.ground_truth_issues},
             {"score", v.score},
             {"metrics", v.metrics},
             {"error_log", v.error_log},
             {"degraded", v.degraded},
             {"remote_failure", v.remote_failure},
             {"final_state", v.final_state}};
}

void from_json(const json& j, EpisodeRecord& v) {
    const auto schema = j.at("schema_version").get<std::string>();
    if (schema != kEpisodeSchema) throw std::invalid_argument("unsupported record schema '" + schema + "'");
    j.at("run_id").get_to(v.run_id);
    j.at("config_label").get_to(v.config_label);
    j.at("episode_index").get_to(v.episode_index);
    j.at("run_seed").get_to(v.run_seed);
    j.at("lineage_seed").get_to(v.lineage_seed);
    j.at("seed").get_to(v.seed);
    j.at("field").get_to(v.field);
    j.at("fault_model").get_to(v.fault_model);
    j.at("critic").get_to(v.critic);
    j.at("actor").get_to(v.actor);
    j.at("block_info").get_to(v.block_info);
    j.at("bt_before").get_to(v.bt_before);
    j.at("bt_after").get_to(v.bt_after);
    j.at("bt_diff").get_to(v.bt_diff);
    j.at("refine_rule").get_to(v.refine_rule);
    j.at("checkpoints").get_to(v.checkpoints);
    j.at("full_trace").get_to(v.full_trace);
    j.at("ground_truth_issues").get_to(v.ground_truth_issues);
    j.at("score").get_to(v.score);
    j.at("metrics").get_to(v.metrics);
    j.at("error_log").get_to(v.error_log);
    j.at("degraded").get_to(v.degraded);
    j.at("remote_failure").get_to(v.remote_failure);
    j.at("final_state").get_to(v.final_state);
}

}  // namespace vrl::runtime
