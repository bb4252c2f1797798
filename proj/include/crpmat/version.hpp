#pragma once

namespace crpmat {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace crpmat
