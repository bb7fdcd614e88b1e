#pragma once

#include <stdexcept>
#include <string>

namespace settled {

// One exception type for the whole core; `kind` maps 1:1 onto the C API
// status codes so the boundary layer stays a dumb switch.
class Error : public std::runtime_error {
public:
  enum class Kind {
    Parse,      // bad expression / literal / serialized form
    Precision,  // a 2-adic fact is not resolvable at the carried precision
    Domain,     // argument outside the mathematical domain (even z-index, ...)
    Depth,      // depth cap exceeded or inconsistent level request
    Internal,   // broken invariant; always a bug
  };

  Error(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}

  Kind kind() const { return kind_; }

  static Error parse(const std::string& msg) { return {Kind::Parse, msg}; }
  static Error precision(const std::string& msg) { return {Kind::Precision, msg}; }
  static Error domain(const std::string& msg) { return {Kind::Domain, msg}; }
  static Error depth(const std::string& msg) { return {Kind::Depth, msg}; }
  static Error internal(const std::string& msg) { return {Kind::Internal, msg}; }

private:
  Kind kind_;
};

}  // namespace settled
