#pragma once

namespace plsshrink {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace plsshrink
