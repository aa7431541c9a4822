#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace sdmscr::cli {

using Getenv = std::function<const char*(const char*)>;

struct Io {
    std::ostream* out = nullptr;  // defaults to std::cout
    std::ostream* err = nullptr;  // defaults to std::cerr
    Getenv getenv;                // defaults to std::getenv
};

/// Runs one subcommand (gen | decouple | embed | train | eval).
/// `args` excludes the program name. Returns the process exit code.
int run(const std::vector<std::string>& args, const Io& io = {});

int run(int argc, char** argv);

}  // namespace sdmscr::cli
