#pragma once

namespace cbfed {

inline constexpr const char* kVersion = "0.1.0";

} // namespace cbfed
