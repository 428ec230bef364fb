#include "prelude/http_client.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "prelude/error.hpp"

namespace prelude {

namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path prefix without trailing slash
};

Endpoint split_base_url(const std::string& base) {
    auto scheme_end = base.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("base URL lacks a scheme: '" + base + "'");
    auto path_start = base.find('/', scheme_end + 3);
    Endpoint ep;
    if (path_start == std::string::npos) {
        ep.origin = base;
    } else {
        ep.origin = base.substr(0, path_start);
        ep.prefix = base.substr(path_start);
        while (!ep.prefix.empty() && ep.prefix.back() == '/') ep.prefix.pop_back();
    }
    return ep;
}

bool retriable(int status) { return status == 429 || status >= 500; }

}  // namespace

std::string credential_from_env(const std::string& var) {
    if (var.empty()) return {};
    const char* v = std::getenv(var.c_str());
    return v ? std::string(v) : std::string();
}

HttpResponse post_json(const std::string& base_url, const std::string& path, const std::string& body,
                       const std::vector<std::pair<std::string, std::string>>& headers,
                       const RetryPolicy& retry) {
    auto ep = split_base_url(base_url);
    httplib::Client client(ep.origin);
    client.set_connection_timeout(retry.timeout);
    client.set_read_timeout(retry.timeout);
    client.set_write_timeout(retry.timeout);

    httplib::Headers hdrs;
    for (const auto& [k, v] : headers) hdrs.emplace(k, v);

    const std::string full_path = ep.prefix + path;
    auto backoff = retry.initial_backoff;
    std::string last_error;
    const int max_attempts = 1 + std::max(0, retry.max_retries);
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        auto res = client.Post(full_path, hdrs, body, "application/json");
        if (res) {
            if (res->status >= 200 && res->status < 300) return {res->status, res->body, attempt};
            last_error = "HTTP " + std::to_string(res->status) + " from " + base_url + path + ": " +
                         res->body.substr(0, 200);
            if (!retriable(res->status)) throw TransportError(last_error, attempt);
        } else {
            last_error = "request to " + base_url + path + " failed: " + httplib::to_string(res.error());
        }
        if (attempt < max_attempts) {
            std::this_thread::sleep_for(backoff);
            backoff = std::chrono::milliseconds(
                static_cast<long long>(static_cast<double>(backoff.count()) * retry.backoff_multiplier));
        }
    }
    throw TransportError(last_error, max_attempts);
}

}  // namespace prelude
