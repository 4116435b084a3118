#pragma once

namespace specx {

inline constexpr const char* version = "0.1.0";

}  // namespace specx
