#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vtax::cli {

// Runs one command line (without the program name). Returns 0 on success, 1
// on a usage error and 2 when input data could not be read or validated.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, std::istream& in);

}  // namespace vtax::cli
