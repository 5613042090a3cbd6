#pragma once

#include <stdexcept>
#include <string>

namespace riskcap {

/// Configuration or input-validation failure (bad market file, bad ranges).
class config_error : public std::runtime_error {
public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// A solver hypothesis failed and no fallback regime covers the request.
/// `condition()` names the violated condition as it appears in the
/// solution report's condition ledger.
class infeasible_error : public std::runtime_error {
public:
  infeasible_error(std::string condition, const std::string& what)
      : std::runtime_error(what), condition_(std::move(condition)) {}
  const std::string& condition() const noexcept { return condition_; }

private:
  std::string condition_;
};

/// Numerical failure (non-convergent refinement, root bracketing failure).
/// Carries the last two estimates when they are meaningful.
class numerical_error : public std::runtime_error {
public:
  explicit numerical_error(const std::string& what,
                           double last = 0.0, double previous = 0.0)
      : std::runtime_error(what), last_(last), previous_(previous) {}
  double last_estimate() const noexcept { return last_; }
  double previous_estimate() const noexcept { return previous_; }

private:
  double last_;
  double previous_;
};

} // namespace riskcap
