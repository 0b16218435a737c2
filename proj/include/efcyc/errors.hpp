#pragma once

#include <stdexcept>
#include <string>

namespace efcyc {

/// Machine-readable reason attached to every rejected input.
enum class ErrorCode {
  malformed_input,
  descriptor_mismatch,
  inconsistent_groups,
  degree_mismatch,
  empty_set,
  not_in_subgroup,
  non_cycle,
  nonzero_pushforward,
  infinite_subgroup,
  filling_mismatch,
  invalid_module,
  unsupported,
  infeasible,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::malformed_input: return "malformed_input";
    case ErrorCode::descriptor_mismatch: return "descriptor_mismatch";
    case ErrorCode::inconsistent_groups: return "inconsistent_groups";
    case ErrorCode::degree_mismatch: return "degree_mismatch";
    case ErrorCode::empty_set: return "empty_set";
    case ErrorCode::not_in_subgroup: return "not_in_subgroup";
    case ErrorCode::non_cycle: return "non_cycle";
    case ErrorCode::nonzero_pushforward: return "nonzero_pushforward";
    case ErrorCode::infinite_subgroup: return "infinite_subgroup";
    case ErrorCode::filling_mismatch: return "filling_mismatch";
    case ErrorCode::invalid_module: return "invalid_module";
    case ErrorCode::unsupported: return "unsupported";
    case ErrorCode::infeasible: return "infeasible";
  }
  return "unknown";
}

class Error : public std::invalid_argument {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::invalid_argument(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace efcyc
