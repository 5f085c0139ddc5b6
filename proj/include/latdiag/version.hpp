#pragma once

namespace latdiag {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kToolName = "latdiag";

} // namespace latdiag
