#pragma once

namespace silico {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace silico
