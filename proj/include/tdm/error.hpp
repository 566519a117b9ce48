#pragma once

#include <stdexcept>
#include <string>

namespace tdm {

// All validation and modeling failures surface as tdm::Error; callers that
// need process exit codes map on the category.
class Error : public std::runtime_error {
 public:
  enum class Kind { schema, infeasible, solver, internal };

  Error(Kind kind, std::string msg) : std::runtime_error(std::move(msg)), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

[[noreturn]] inline void fail_schema(const std::string& msg) {
  throw Error(Error::Kind::schema, msg);
}
[[noreturn]] inline void fail_infeasible(const std::string& msg) {
  throw Error(Error::Kind::infeasible, msg);
}
[[noreturn]] inline void fail_solver(const std::string& msg) {
  throw Error(Error::Kind::solver, msg);
}

} // namespace tdm
