// SPDX-License-Identifier: Apache-2.0
#include "vrl/net/http.hpp"

#include <stdexcept>

#include "httplib.h"

namespace vrl::net {

HttpResult post_json(const HttpOptions& options, const std::string& body) {
    HttpResult out;
    const auto scheme_end = options.url.find("://");
    const auto path_start = options.url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    const std::string base = path_start == std::string::npos ? options.url : options.url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : options.url.substr(path_start);

    httplib::Client client(base);
    if (!client.is_valid()) {
        out.transport_error = true;
        out.error = "invalid endpoint url '" + options.url + "'";
        return out;
    }
    const auto secs = static_cast<time_t>(options.timeout_seconds);
    const auto usecs = static_cast<time_t>((options.timeout_seconds - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (!options.token.empty()) headers.emplace("Authorization", "Bearer " + options.token);

    auto res = client.Post(path, headers, body, "application/json");
    if (!res) {
        out.transport_error = true;
        out.error = httplib::to_string(res.error());
        return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
}

}  // namespace vrl::net
