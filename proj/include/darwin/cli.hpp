#pragma once

namespace darwin::cli {

// Full command-line surface. Exit codes: 0 success, 1 usage error,
// 2 data or numeric error.
int run(int argc, const char* const* argv);

}  // namespace darwin::cli
