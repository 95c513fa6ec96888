#pragma once

namespace aerogrip {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace aerogrip
