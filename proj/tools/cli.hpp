#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace parafac::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kInvalid = 2;
inline constexpr int kVerifyFailed = 3;
inline constexpr int kResource = 4;

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace parafac::cli
