// SPDX-License-Identifier: Apache-2.0
// vrl: command-line front end for campaigns, single episodes, validation,
// scoring, replay and reporting.
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "vrl/dsl/dsl.hpp"
#include "vrl/runtime/runtime.hpp"
#include "vrl/sim/io.hpp"

using nlohmann::json;
using namespace vrl;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 2;
constexpr int kDiverged = 3;
constexpr int kRemoteFailure = 4;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void print_score(const scoring::ScoreBreakdown& s) {
    std::cout << "time_penalty " << s.time_penalty << "\novertime_penalty " << s.overtime_penalty
              << "\ncorrect_boxes " << s.correct_boxes << "\nbatch_bonuses " << s.batch_bonuses
              << "\nincorrect_boxes " << s.incorrect_boxes << "\noutside_boxes " << s.outside_boxes
              << "\nfinal_position_bonus " << s.final_position_bonus << "\nshelf_bonus " << s.shelf_bonus
              << "\ntotal " << s.total << '\n';
}

int cmd_run(const std::string& config_path, const std::string& out_override, int jobs) {
    auto config = runtime::load_run_config(config_path);
    if (!out_override.empty()) config.output_dir = out_override;
    if (jobs > 0) config.jobs = jobs;
    const auto result = runtime::run_campaign(config, &std::cerr);
    runtime::write_campaign(result, config.output_dir);
    bool remote_failure = false;
    for (const auto& r : result.records) remote_failure = remote_failure || r.remote_failure;
    const auto means = scoring::aggregate(result.series, scoring::metric("score"));
    std::cout << result.records.size() << " episodes, " << result.notifications.size() << " alarms -> "
              << config.output_dir << "\nmean score by episode:";
    for (const auto& m : means) std::cout << ' ' << (m ? std::to_string(static_cast<int>(std::lround(*m))) : "NA");
    std::cout << '\n';
    return remote_failure ? kRemoteFailure : kOk;
}

struct EpisodeArgs {
    std::string field;
    std::string bt;
    std::uint64_t seed = 1;
    std::string critic = "none";
    std::string actor = "score-only";
    bool block_info = false;
    std::string out;
};

int cmd_episode(const EpisodeArgs& a) {
    runtime::RunConfig config;
    config.field_configs = {a.field};
    config.initial_bt = a.bt;
    config.critic = a.critic;
    config.actor = a.actor;
    config.block_info = a.block_info;
    config.critic_remote.url = std::getenv(runtime::kCriticUrlEnv) ? std::getenv(runtime::kCriticUrlEnv) : "";
    config.actor_remote.url = std::getenv(runtime::kActorUrlEnv) ? std::getenv(runtime::kActorUrlEnv) : "";
    if (const char* t = std::getenv(runtime::kTokenEnv)) config.critic_remote.token = config.actor_remote.token = t;

    auto tree = dsl::parse(read_file(a.bt));
    const auto report = dsl::validate(tree, bt::default_library());
    if (!report.ok()) {
        std::cerr << report.to_text();
        return kInvalid;
    }
    auto critic = runtime::make_run_critic(config);
    auto actor = runtime::make_run_actor(config);
    runtime::Lineage lin;
    lin.run_id = "episode";
    lin.config_label = std::filesystem::path(a.field).stem().string();
    lin.run_seed = a.seed;
    lin.lineage_seed = a.seed;
    lin.field = sim::load_field_config(a.field);
    lin.block_info = a.block_info || critic->block_info();
    lin.critic = critic.get();
    lin.actor = actor.get();
    lin.notify = [](const runtime::Notification& n) { std::cerr << n.console_line() << '\n'; };
    auto r = runtime::run_episode(tree, lin, 1);

    const auto line = json(r.record).dump();
    if (a.out.empty()) {
        std::cout << line << '\n';
    } else {
        std::ofstream(a.out) << line << '\n';
        std::cout << "score " << r.record.score.total << ", alarms " << r.record.metrics.alarm_count << ", rule "
                  << r.record.refine_rule << "\n" << r.record.bt_after;
    }
    for (const auto& e : r.record.error_log) std::cerr << "error: " << e << '\n';
    return r.record.remote_failure ? kRemoteFailure : kOk;
}

int cmd_validate(const std::string& path) {
    bt::BehaviorTree tree;
    try {
        tree = dsl::parse(read_file(path));
    } catch (const dsl::DslError& e) {
        std::cerr << path << ":" << e.line() << ":" << e.column() << ": " << e.what() << '\n';
        return kInvalid;
    }
    const auto report = dsl::validate(tree, bt::default_library());
    if (!report.ok()) {
        std::cerr << report.to_text();
        return kInvalid;
    }
    std::cout << path << ": ok (" << tree.nodes.size() << " nodes)\n";
    return kOk;
}

int cmd_score(const std::string& path) {
    auto j = json::parse(read_file(path));
    if (j.contains("final_state")) j = j.at("final_state");
    print_score(scoring::score_episode(j.get<sim::WorldState>()));
    return kOk;
}

int cmd_replay(const std::string& path, std::size_t index) {
    const auto records = runtime::read_records(path);
    if (index >= records.size()) throw std::invalid_argument("record index out of range");
    try {
        runtime::replay(records[index]);
    } catch (const runtime::ReplayDivergence& e) {
        std::cerr << "ReplayDivergence: " << e.what() << '\n';
        return kDiverged;
    }
    std::cout << "record " << index << ": replay matches (" << records[index].full_trace.size()
              << " trace events, score " << records[index].score.total << ")\n";
    return kOk;
}

int cmd_report(const std::string& path, const std::string& out) {
    const auto records = runtime::read_records(path);
    runtime::write_reports(runtime::series_of(records), out);
    std::cout << records.size() << " records -> " << out << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Closed-loop behavior tree refinement on a simulated warehouse robot"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    int jobs = 0;
    auto* run = app.add_subcommand("run", "Run a campaign from a run config");
    run->add_option("--config", config_path, "Run config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "Output directory (overrides the config)");
    run->add_option("--jobs", jobs, "Lineages to run in parallel");

    EpisodeArgs ep;
    auto* episode = app.add_subcommand("episode", "Run a single episode and print its record");
    episode->add_option("--field", ep.field, "Field config (JSON)")->required()->check(CLI::ExistingFile);
    episode->add_option("--bt", ep.bt, "Behavior tree (.bt)")->required()->check(CLI::ExistingFile);
    episode->add_option("--seed", ep.seed, "Episode seed");
    episode->add_option("--critic", ep.critic, "none, remote, a profile name or a profile .json");
    episode->add_option("--actor", ep.actor, "rule, score-only or remote");
    episode->add_flag("--block-info", ep.block_info, "Give critic and actor exact block orientations");
    episode->add_option("--out", ep.out, "Write the record here instead of stdout");

    std::string bt_path;
    auto* validate = app.add_subcommand("validate", "Parse and validate a .bt file");
    validate->add_option("bt", bt_path, "Behavior tree (.bt)")->required();

    std::string state_path;
    auto* score = app.add_subcommand("score", "Score a final world state");
    score->add_option("--state", state_path, "World state or episode record (JSON)")->required();

    std::string records_path;
    std::size_t index = 0;
    auto* replay = app.add_subcommand("replay", "Re-execute a recorded episode and compare");
    replay->add_option("records", records_path, "records.jsonl")->required();
    replay->add_option("--index", index, "Zero-based record index");

    std::string report_out = "report";
    auto* report = app.add_subcommand("report", "Write per-metric CSVs from records");
    report->add_option("records", records_path, "records.jsonl")->required();
    report->add_option("--out", report_out, "Output directory");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) return cmd_run(config_path, out_dir, jobs);
        if (*episode) return cmd_episode(ep);
        if (*validate) return cmd_validate(bt_path);
        if (*score) return cmd_score(state_path);
        if (*replay) return cmd_replay(records_path, index);
        if (*report) return cmd_report(records_path, report_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kOk;
}
