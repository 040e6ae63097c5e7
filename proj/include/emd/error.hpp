#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace emd {

enum class ErrorKind {
  DimensionMismatch,
  InvalidArgument,
  NonFinite,
  InfiniteDivergence,
  Domain,
  NonConvergence,
  RankZero,
  Infeasible,
  BudgetExhausted,
  Io,
  Parse,
};

std::string_view to_string(ErrorKind kind);

/// Library failure tagged with an ErrorKind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace emd
