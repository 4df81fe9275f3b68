// SPDX-License-Identifier: Apache-2.0
#include "vrl/bt/trace_json.hpp"
#include "vrl/critic/critic.hpp"
#include "vrl/net/http.hpp"
#include "vrl/sim/io.hpp"

using nlohmann::json;

namespace vrl::critic {

RemoteCritic::RemoteCritic(RemoteConfig config) : config_(std::move(config)) {
    if (config_.url.empty()) throw std::invalid_argument("remote critic needs an endpoint url");
    if (config_.attempts < 1) config_.attempts = 1;
}

json RemoteCritic::request_body(const CriticInput& in, const CriticMemory& memory) const {
    json body;
    body["schema_version"] = kCriticSchema;
    body["mode"] = in.mode;
    body["observation"] = in.observation ? json(*in.observation) : json(nullptr);
    body["trace"] = in.trace ? json(*in.trace) : json::array();
    json mem = json::array();
    for (const auto& f : memory.feedback) mem.push_back({{"mode", f.mode}, {"text", f.text}, {"issues", f.issues}});
    body["memory"] = mem;
    return body;
}

CriticFeedback parse_reply(const json& reply, Mode mode) {
    auto bad = [](const std::string& why) { throw CriticError(CriticError::Code::MalformedReply, why); };
    if (!reply.is_object()) bad("reply is not a JSON object");
    CriticFeedback fb;
    fb.mode = mode;
    try {
        fb.text = reply.at("text").get<std::string>();
        fb.alarm_score = reply.at("alarm_score").get<double>();
        fb.confidence = reply.at("confidence").get<double>();
        fb.issues = reply.at("issues").get<std::vector<IssueReport>>();
    } catch (const std::exception& e) {
        bad(std::string("reply does not match the schema: ") + e.what());
    }
    if (!(fb.alarm_score >= 0.0 && fb.alarm_score <= 1.0)) bad("alarm_score outside [0,1]");
    if (!(fb.confidence >= 0.0 && fb.confidence <= 1.0)) bad("confidence outside [0,1]");
    return fb;
}

std::optional<CriticFeedback> RemoteCritic::assess(const CriticInput& in, CriticMemory& memory, Rng&) {
    const auto body = request_body(in, memory).dump();
    net::HttpOptions opts{config_.url, config_.token, config_.timeout_seconds};
    std::string last_error;
    auto last_code = CriticError::Code::Timeout;
    for (int attempt = 0; attempt < config_.attempts; ++attempt) {
        const auto res = net::post_json(opts, body);
        if (res.transport_error) {
            last_code = CriticError::Code::Timeout;
            last_error = "critic endpoint unreachable: " + res.error;
            continue;
        }
        if (res.status != 200) {
            last_code = CriticError::Code::EndpointError;
            last_error = "critic endpoint returned HTTP " + std::to_string(res.status);
            continue;
        }
        try {
            auto fb = parse_reply(json::parse(res.body), in.mode);
            memory.feedback.push_back(fb);
            return fb;
        } catch (const json::exception& e) {
            last_code = CriticError::Code::MalformedReply;
            last_error = std::string("critic reply is not JSON: ") + e.what();
        } catch (const CriticError& e) {
            last_code = e.code();
            last_error = e.what();
        }
    }
    throw CriticError(last_code, last_error + " (after " + std::to_string(config_.attempts) + " attempts)");
}

}  // namespace vrl::critic
