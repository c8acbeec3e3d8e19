#pragma once

#include <stdexcept>
#include <string>

namespace treefilter {

enum class ErrorKind {
  usage,        // malformed request (bad flag value, missing argument)
  parse,        // malformed input file; message carries the byte offset
  size,         // degenerate dimensions
  dimension,    // shape mismatch between inputs
  validation,   // non-finite or out-of-domain values
  structure,    // edge set is not a spanning tree
  connectivity, // graph does not connect all vertices
  grouping,     // channel count not divisible by the group count
  state,        // cache does not match the inputs it is paired with
  tolerance,    // numeric check exceeded its bound
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

} // namespace treefilter
