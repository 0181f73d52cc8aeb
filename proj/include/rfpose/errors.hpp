#pragma once

#include <stdexcept>
#include <string>

namespace rfpose {

// Invalid user-supplied configuration; mapped to exit code 1 by the CLI.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace rfpose
