#pragma once

#include <stdexcept>
#include <string>

namespace spd {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid argument shape, parameter range, or out-of-domain input.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A matrix that should be positive definite is not (even after jitter).
class NotPositiveDefiniteError : public Error {
 public:
  using Error::Error;
};

/// The iterative eigensolver failed to converge.
class NonConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A log argument inside the divergence became non-positive.
class DegenerateLogArgumentError : public Error {
 public:
  using Error::Error;
};

/// Normal-equation system numerically singular.
class SingularSystemError : public Error {
 public:
  using Error::Error;
};

/// File format / dataset content problems.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Re-throws library errors with a context prefix, preserving the type.
template <typename Fn>
auto with_context(const std::string& ctx, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const DomainError& e) {
    throw DomainError(ctx + ": " + e.what());
  } catch (const NotPositiveDefiniteError& e) {
    throw NotPositiveDefiniteError(ctx + ": " + e.what());
  } catch (const NonConvergenceError& e) {
    throw NonConvergenceError(ctx + ": " + e.what());
  } catch (const DegenerateLogArgumentError& e) {
    throw DegenerateLogArgumentError(ctx + ": " + e.what());
  } catch (const SingularSystemError& e) {
    throw SingularSystemError(ctx + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(ctx + ": " + e.what());
  }
}

}  // namespace spd
