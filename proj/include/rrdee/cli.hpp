#pragma once

namespace rrdee {

// Entry point for the command-line tool. Exit codes: 0 success, 1 usage
// error, 2 data error, 3 training failure.
int run_cli(int argc, const char* const* argv);

}  // namespace rrdee
