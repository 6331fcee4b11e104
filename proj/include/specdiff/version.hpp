#pragma once

namespace specdiff {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace specdiff
