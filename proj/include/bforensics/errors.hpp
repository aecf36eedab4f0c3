#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bforensics {

// Bad configuration or arguments. The CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data. The CLI maps this to exit code 3.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : DataError {
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : DataError(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// An internal contract was broken (e.g. a share with no prior exposure).
struct InvariantError : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace bforensics
