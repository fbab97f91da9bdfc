#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hpmdiag::cli {

// Exit codes: 0 success, 1 I/O or parse failure, 2 validation failure
// (including bad usage).
inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitInvalid = 2;

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hpmdiag::cli
