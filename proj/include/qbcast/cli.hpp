#pragma once

#include <ostream>
#include <span>
#include <string>

namespace qbcast {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command (argv without the program name). The JSON report goes
/// to `out`, a short human summary to `err`.
///
///   simulate --scenario F [--seed N]
///   prepare  --scenario F [--detach v,...] [--seed N]
///   verify   --props [--dmax N]
///   ghz      --n N [--seed N]
int run_command(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace qbcast
