#pragma once

#include <stdexcept>
#include <string>

namespace motionkit {

/// Input file could not be parsed.  `line` is 1-based when known, else -1.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what, int line = -1)
      : std::runtime_error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}

  int line() const { return line_; }

 private:
  int line_;
};

/// Input uses a file feature outside the supported subset.
class UnsupportedFormatError : public ParseError {
 public:
  explicit UnsupportedFormatError(const std::string& what, int line = -1)
      : ParseError(what, line) {}
};

}  // namespace motionkit
