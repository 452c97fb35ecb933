#pragma once

#include <chrono>
#include <cstdint>
#include <mutex>
#include <ostream>
#include <string>

#include "json.hpp"

namespace aicfc {

/// One JSON object per line: {"claim_id", "stage", "duration_s", ...}.
/// A default-constructed logger discards everything.
class StageLog {
public:
    StageLog() = default;
    explicit StageLog(std::ostream& out) : out_(&out) {}

    void record(std::int64_t claim_id, const std::string& stage, double duration_s,
                nlohmann::json extra = nlohmann::json::object()) {
        if (out_ == nullptr) {
            return;
        }
        extra["claim_id"] = claim_id;
        extra["stage"] = stage;
        extra["duration_s"] = duration_s;
        const std::string line = extra.dump();
        std::lock_guard lock(mutex_);
        *out_ << line << '\n';
        out_->flush();
    }

private:
    std::ostream* out_ = nullptr;
    std::mutex mutex_;
};

/// Seconds since construction.
class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}

    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

} // namespace aicfc
