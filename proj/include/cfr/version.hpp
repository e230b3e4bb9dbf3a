#pragma once

namespace cfr {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace cfr
