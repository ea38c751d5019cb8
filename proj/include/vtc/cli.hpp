#pragma once

#include <iosfwd>

namespace vtc {

/// Command-line entry point. Exit codes: 0 success, 1 verification failure
/// or runtime error, 2 usage, configuration or problem-definition error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vtc
