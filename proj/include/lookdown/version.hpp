#pragma once

namespace lookdown {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace lookdown
