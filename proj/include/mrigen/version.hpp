#pragma once

namespace mrigen {

inline constexpr const char* kVersion = "0.1.0";

}
