#pragma once

#include <stdexcept>
#include <string>

namespace su11 {

/// Invalid or inconsistent run configuration. `line` is 1-based, 0 if unknown.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

}  // namespace su11
