#pragma once

namespace ews::cli {

/// Parses argv and runs one subcommand (simulate | detect | calibrate |
/// metrics). Exit codes: 0 success, 2 config/invariant violation, 3 input
/// parse failure.
int run(int argc, const char* const* argv);

}  // namespace ews::cli
