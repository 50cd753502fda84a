#pragma once

namespace pspin {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace pspin
