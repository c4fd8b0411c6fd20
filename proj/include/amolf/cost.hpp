#pragma once

// Closed-form multiply counts per training iteration. Counts are evaluated
// from formulas, never instrumented, and rounded to the nearest integer.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace amolf {

using MultCount = std::int64_t;

// Solving the Nu x Nu output-weight system for M outputs.
MultCount mult_ols(std::int64_t nu, std::int64_t m);
// Output weights plus negative input-weight gradients.
MultCount mult_owo_bp(std::int64_t n, std::int64_t nh, std::int64_t m, std::int64_t nv);
MultCount mult_lm(std::int64_t n, std::int64_t nh, std::int64_t m, std::int64_t nv);
// Newton's method for the input weights, including its Nv^2 term.
MultCount mult_newton(std::int64_t n, std::int64_t nh, std::int64_t m, std::int64_t nv);
MultCount mult_owo(std::int64_t n, std::int64_t nh, std::int64_t m, std::int64_t nv);
MultCount mult_owo_newton(std::int64_t n, std::int64_t nh, std::int64_t m, std::int64_t nv);
MultCount mult_owo_molf(std::int64_t n, std::int64_t nh, std::int64_t m, std::int64_t nv);
MultCount mult_amolf(std::int64_t n, std::int64_t nh, std::int64_t m, std::int64_t nv,
                     std::int64_t ng);

// Counted operation by operation from this implementation.
// One conjugate-gradient iteration: gradient, direction update and the
// Gauss-Newton step length along the direction.
MultCount mult_cg(std::int64_t n, std::int64_t nh, std::int64_t m, std::int64_t nv);
// One exhaustive group-count search: the input Hessian plus, for each
// candidate Ng in [1, max_groups], the interpolated system, its solve, the
// trial step and an error evaluation.
MultCount mult_group_search(std::int64_t n, std::int64_t nh, std::int64_t m, std::int64_t nv,
                            std::int64_t max_groups);

/// Error change per multiply, (e_prev - e_now) / m_it. Negative when the
/// error rose. Throws std::invalid_argument when m_it <= 0.
double epm(double e_prev, double e_now, MultCount m_it);

class CostLedger {
 public:
  CostLedger() = default;
  explicit CostLedger(std::string tag) : tag_(std::move(tag)) {}

  void add(MultCount multiplies);

  const std::string& tag() const { return tag_; }
  const std::vector<MultCount>& per_iteration() const { return per_iteration_; }
  const std::vector<MultCount>& cumulative() const { return cumulative_; }
  MultCount total() const { return cumulative_.empty() ? 0 : cumulative_.back(); }
  std::size_t iterations() const { return per_iteration_.size(); }

 private:
  std::string tag_;
  std::vector<MultCount> per_iteration_;
  std::vector<MultCount> cumulative_;
};

}  // namespace amolf
