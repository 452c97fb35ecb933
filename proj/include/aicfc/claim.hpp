#pragma once

#include <cstdint>
#include <string>

namespace aicfc {

struct Claim {
    std::int64_t claim_id = 0;
    std::string text;
    std::string speaker;
    std::string date;
    std::string reporting_source;
};

} // namespace aicfc
