#pragma once

namespace cfd {

inline constexpr const char* kLibraryVersion = "0.1.0";

}  // namespace cfd
