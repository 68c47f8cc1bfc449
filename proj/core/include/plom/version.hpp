#pragma once

namespace plom {

inline constexpr const char* kVersion = "0.3.0";

}  // namespace plom
