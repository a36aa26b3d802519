#pragma once

#include <iosfwd>

namespace lsfem::cli {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

/// Entry point of the `lsfem` tool. Tables go to files under --out and a
/// summary to `out`; usage errors and warnings go to `err`.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lsfem::cli
