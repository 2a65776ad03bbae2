#pragma once

namespace deltaspec {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace deltaspec
