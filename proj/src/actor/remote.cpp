// SPDX-License-Identifier: Apache-2.0
#include "vrl/actor/actor.hpp"
#include "vrl/net/http.hpp"

using nlohmann::json;

namespace vrl::actor {

json RemoteActor::request_body(const ActorContext& context, const std::optional<critic::CriticFeedback>& feedback,
                               int real_score, const ActorMemory& memory,
                               const std::optional<std::string>& violations) const {
    json body;
    body["schema_version"] = kActorSchema;
    body["context"] = {{"task_definition", context.task_definition},
                       {"environment_spec", context.environment_spec},
                       {"node_library", context.node_library.describe()},
                       {"authoring_rules", context.authoring_rules}};
    if (context.block_info) {
        json blocks = json::array();
        for (const auto& b : *context.block_info) {
            blocks.push_back({{"block_id", b.block_id},
                              {"zone", b.location.zone},
                              {"orientation", std::string(sim::to_string(b.orientation))}});
        }
        body["context"]["block_info"] = blocks;
    }
    body["bt_source"] = dsl::serialize(context.current_bt);
    body["feedback"] = feedback ? json(*feedback) : json(nullptr);
    body["real_score"] = real_score;
    body["memory"] = memory.entries;
    if (violations) body["validation_report"] = *violations;
    return body;
}

RefineResult RemoteActor::refine(const ActorContext& context, const std::optional<critic::CriticFeedback>& feedback,
                                 int real_score, const ActorMemory& memory, Rng&) {
    if (config_.url.empty()) throw std::invalid_argument("remote actor needs an endpoint url");
    const net::HttpOptions opts{config_.url, config_.token, config_.timeout_seconds};
    const int attempts = std::max(1, config_.attempts);
    std::optional<std::string> violations;

    for (int turn = 0; turn <= config_.reprompts; ++turn) {
        const auto body = request_body(context, feedback, real_score, memory, violations).dump();
        net::HttpResult res;
        std::string last_error;
        bool answered = false;
        for (int attempt = 0; attempt < attempts && !answered; ++attempt) {
            res = net::post_json(opts, body);
            if (res.transport_error) {
                last_error = "actor endpoint unreachable: " + res.error;
            } else if (res.status != 200) {
                last_error = "actor endpoint returned HTTP " + std::to_string(res.status);
            } else {
                answered = true;
            }
        }
        if (!answered) {
            throw ActorError(ActorError::Code::Timeout,
                             last_error + " (after " + std::to_string(attempts) + " attempts)");
        }

        std::string source;
        try {
            source = json::parse(res.body).at("bt_source").get<std::string>();
        } catch (const json::exception& e) {
            throw ActorError(ActorError::Code::MalformedReply, std::string("actor reply: ") + e.what());
        }

        bt::BehaviorTree tree;
        try {
            tree = dsl::parse(source);
        } catch (const dsl::DslError& e) {
            violations = "SyntaxError at " + std::to_string(e.line()) + ":" + std::to_string(e.column()) + ": " +
                         e.what() + "\n";
            continue;
        }
        const auto report = dsl::validate(tree, context.node_library);
        if (!report.ok()) {
            violations = report.to_text();
            continue;
        }
        auto d = dsl::diff(context.current_bt, tree);
        return {std::move(tree), std::move(d), "remote", std::nullopt};
    }
    return {context.current_bt, {}, "identity",
            "RefinementFailed: no valid tree after " + std::to_string(config_.reprompts + 1) + " turns\n" +
                violations.value_or("")};
}

}  // namespace vrl::actor
