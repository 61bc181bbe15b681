#pragma once

#include <spdlog/spdlog.h>

namespace aeronet {

/// Returns the library logger (stderr). Verbosity comes from the
/// AERONET_LOG environment variable: trace, debug, info, warn, error, off.
/// Default is warn.
spdlog::logger& logger();

}  // namespace aeronet
