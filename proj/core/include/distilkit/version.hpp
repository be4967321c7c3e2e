#pragma once

namespace distilkit {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace distilkit
