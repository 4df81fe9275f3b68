// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

namespace vrl::net {

struct HttpOptions {
    std::string url;  // scheme://host[:port]/path
    std::string token;  // sent as a bearer token when set
    double timeout_seconds = 30.0;
};

struct HttpResult {
    bool transport_error = false;  // no HTTP exchange took place
    std::string error;
    int status = 0;
    std::string body;
};

// One blocking JSON POST; never throws for network problems.
HttpResult post_json(const HttpOptions& options, const std::string& body);

}  // namespace vrl::net
