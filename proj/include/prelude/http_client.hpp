#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

namespace prelude {

struct RetryPolicy {
    int max_retries = 3;
    std::chrono::milliseconds initial_backoff{500};
    double backoff_multiplier = 2.0;
    std::chrono::seconds timeout{120};
};

struct HttpResponse {
    int status = 0;
    std::string body;
    int attempts = 0;
};

// POSTs a JSON body to base_url + path. Connection failures, 429 and 5xx
// are retried with exponential backoff; other statuses return immediately.
// Throws TransportError once retries are exhausted or on a non-retriable
// status.
HttpResponse post_json(const std::string& base_url, const std::string& path, const std::string& body,
                       const std::vector<std::pair<std::string, std::string>>& headers,
                       const RetryPolicy& retry);

// Reads a credential from the environment; empty when unset.
std::string credential_from_env(const std::string& var);

}  // namespace prelude
