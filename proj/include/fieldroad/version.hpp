#pragma once

namespace fieldroad {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fieldroad
