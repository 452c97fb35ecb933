#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <mutex>
#include <string>
#include <thread>

#include "httplib.h"

#include "error.hpp"

namespace aicfc::http {

/// "http://host[:port]/path" split into the parts httplib wants.
struct Endpoint {
    std::string base; // scheme://host:port
    std::string path;
};

inline Endpoint parse_endpoint(const std::string& url) {
    const std::string scheme = "http://";
    if (url.rfind(scheme, 0) != 0) {
        throw InvalidArgument("only http:// endpoints are supported: " + url);
    }
    const auto slash = url.find('/', scheme.size());
    Endpoint ep;
    ep.base = slash == std::string::npos ? url : url.substr(0, slash);
    ep.path = slash == std::string::npos ? "/" : url.substr(slash);
    if (ep.base.size() == scheme.size()) {
        throw InvalidArgument("endpoint has no host: " + url);
    }
    return ep;
}

/// Counting semaphore with a runtime limit.
class Semaphore {
public:
    explicit Semaphore(std::size_t limit) : available_(limit == 0 ? 1 : limit) {}

    void acquire() {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return available_ > 0; });
        --available_;
    }

    void release() {
        {
            std::lock_guard lock(mutex_);
            ++available_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    std::size_t available_;
};

class SemaphoreGuard {
public:
    explicit SemaphoreGuard(Semaphore& sem) : sem_(sem) { sem_.acquire(); }
    ~SemaphoreGuard() { sem_.release(); }
    SemaphoreGuard(const SemaphoreGuard&) = delete;
    SemaphoreGuard& operator=(const SemaphoreGuard&) = delete;

private:
    Semaphore& sem_;
};

struct RetryPolicy {
    int max_retries = 2;
    double backoff_s = 0.5; // doubled after every failed attempt
};

struct PostOptions {
    double timeout_s = 30.0;
    std::string auth_token;
};

/// POST a JSON body and return the response body. Connection errors, 429 and
/// 5xx responses are retried with exponential backoff; read timeouts raise
/// TimeoutError without retrying; other statuses fail immediately.
inline std::string post_json(const Endpoint& endpoint, const std::string& body,
                             const PostOptions& options, const RetryPolicy& retry) {
    std::string last_error;
    double delay = retry.backoff_s;
    for (int attempt = 0; attempt <= retry.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::duration<double>(delay));
            delay *= 2.0;
        }
        httplib::Client client(endpoint.base);
        const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
            std::chrono::duration<double>(options.timeout_s));
        client.set_connection_timeout(std::chrono::seconds(5));
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        httplib::Headers headers;
        if (!options.auth_token.empty()) {
            headers.emplace("Authorization", "Bearer " + options.auth_token);
        }
        const auto started = std::chrono::steady_clock::now();
        auto res = client.Post(endpoint.path, headers, body, "application/json");
        if (!res) {
            const std::chrono::duration<double> waited = std::chrono::steady_clock::now() - started;
            if (res.error() == httplib::Error::Read && waited.count() >= 0.9 * options.timeout_s) {
                throw TimeoutError("no response from " + endpoint.base + endpoint.path + " within " +
                                   std::to_string(options.timeout_s) + " s");
            }
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 200 && res->status < 300) {
            return res->body;
        }
        last_error = "HTTP " + std::to_string(res->status);
        if (res->status != 429 && res->status < 500) {
            break;
        }
    }
    throw EndpointError(endpoint.base + endpoint.path + ": " + last_error);
}

} // namespace aicfc::http
