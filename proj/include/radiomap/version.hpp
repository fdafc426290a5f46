#pragma once

namespace radiomap {
inline constexpr const char* kVersion = "0.1.0";
}
