#pragma once

namespace lar {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace lar
