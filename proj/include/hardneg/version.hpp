#pragma once

namespace hardneg {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace hardneg
