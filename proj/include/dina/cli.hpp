#pragma once

#include <iostream>

namespace dina {

/// Exit codes: 0 success, 1 usage or configuration error, 2 data, format or
/// dimension error.
int run_cli(int argc, const char* const argv[], std::ostream& out = std::cout, std::ostream& err = std::cerr);

}  // namespace dina
