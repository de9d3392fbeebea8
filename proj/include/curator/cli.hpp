#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace curator {

// Exit codes: 0 success, 1 parse/validation/compile failure, 2 runtime failure.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace curator
