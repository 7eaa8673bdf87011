#pragma once

#include <filesystem>
#include <iosfwd>

namespace eigengap::cli {

/// Exit codes. A rejected null is reported as kReject so scripts can tell a
/// statistical outcome from a program failure.
inline constexpr int kOk = 0;
inline constexpr int kError = 1;
inline constexpr int kUsage = 2;
inline constexpr int kReject = 3;

/// $EIGENGAP_CACHE_DIR, else $XDG_DATA_HOME/eigengap/calibration, else
/// $HOME/.local/share/eigengap/calibration, else ./.eigengap-cache.
std::filesystem::path default_cache_dir();

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace eigengap::cli
