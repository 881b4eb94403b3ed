#pragma once

namespace fiberlink {

inline constexpr const char* fiberlink_version = "0.1.0";

}  // namespace fiberlink
