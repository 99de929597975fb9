#pragma once

namespace pathcast::cli {

// Dispatches argv to a subcommand. Exit codes: 0 success, 1 usage error,
// 2 data error, 3 numeric error.
int run(int argc, const char* const* argv);

}  // namespace pathcast::cli
