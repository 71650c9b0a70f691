#pragma once

#include <stdexcept>
#include <string>

namespace sampaudit {

/// Single exception type for the library; kind lets callers (the CLI in particular) map
/// failures onto exit codes.
class Error : public std::runtime_error {
 public:
  enum class Kind { validation, size, layout, solver, locality };

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

inline Error validation_error(const std::string& what) { return Error(Error::Kind::validation, what); }
inline Error size_error(const std::string& what) { return Error(Error::Kind::size, what); }
inline Error layout_error(const std::string& what) { return Error(Error::Kind::layout, what); }

}  // namespace sampaudit
