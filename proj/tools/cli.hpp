#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sumlens {

// Exit codes: 0 ok, 1 unexpected failure, 2 config error, 3 backend error, 4 data error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sumlens
