// SPDX-License-Identifier: Apache-2.0

#ifndef KS1D_CLI_HPP
#define KS1D_CLI_HPP

namespace ks1d
{

// Parses argv, runs one subcommand, writes its artifacts, and returns the
// process exit code: 0 success, 2 configuration error, 3 solver failure,
// 4 internal-consistency failure (also used for unexpected exceptions).
int run_cli(int argc, const char *const *argv);

}  // namespace ks1d

#endif  // KS1D_CLI_HPP
