#pragma once

namespace schro {

inline constexpr const char* version = "0.1.0";

} // namespace schro
