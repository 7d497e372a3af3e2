#pragma once

namespace entroflow::cli {

// Full command-line surface. Returns the process exit code:
//   0 success, 2 invalid input, 3 numerical failure.
// Errors are reported as a single JSON line on stderr.
int dispatch(int argc, const char* const* argv);

}
