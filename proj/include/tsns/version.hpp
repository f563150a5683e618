#pragma once

namespace tsns {

inline constexpr const char* kToolVersion = "1.0.0";

}  // namespace tsns
