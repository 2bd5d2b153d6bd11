// Command-line entry point, factored out of main() so tests can invoke
// subcommands in-process.

#ifndef IMPLODE_CLI_HPP
#define IMPLODE_CLI_HPP

namespace implode {

// Exit codes: 0 success, 1 invalid parameters, 2 no shooting root,
// 3 crossing failure, 4 repulsivity verdict negative, 64 missing or corrupt
// input files, 70 internal error.
int cli_main(int argc, const char* const* argv);

}  // namespace implode

#endif
