#pragma once

namespace qcdlab {
inline constexpr const char* kVersion = "0.1.0";
}
