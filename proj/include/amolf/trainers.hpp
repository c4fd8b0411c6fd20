#pragma once

// Training algorithms for the single-hidden-layer MLP. Each trainer owns a
// private copy of the network and advances it one outer iteration per call to
// iterate(). All trainers first solve the output weights of the initial
// network so that they share one starting point.

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "amolf/cost.hpp"
#include "amolf/dataset.hpp"
#include "amolf/gradients.hpp"
#include "amolf/linalg.hpp"
#include "amolf/network.hpp"
#include "amolf/partition.hpp"

namespace amolf {

enum class Algorithm { owo_bp, owo_molf, owo_newton, amolf, lm, cg };

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view name);

inline constexpr double kCurvatureFloor = 1e-12;
inline constexpr double kFallbackLearningFactor = 1e-3;

// ---------------------------------------------------------------------------
// Optimal learning factor

/// Newton step length along G for the input weights: (sum g^2) / (d2E/dz2),
/// with the denominator from the Gauss-Newton model. Falls back to 1e-3 when
/// the curvature is not positive.
double olf(const Mlp& m, const Dataset& d, const ForwardTrace& trace, const GradientBundle& grad);

// d2E/dz2 = sum_k sum_j g_k^T H^{k,j} g_j, evaluated block by block from H.
double olf_curvature(const HessianBundle& h);

// ---------------------------------------------------------------------------
// Multiple and adaptive multiple learning factors

/// Newton system for the learning factors z: h * z = g.
struct LearningFactorSystem {
  Matrix h;
  Vector g;
};

// One factor per hidden unit, compressed from the input-weight Hessian:
// hmolf(k,j) = g_k^T H^{k,j} g_j, gmolf(k) = sum_n g(k,n)^2.
LearningFactorSystem molf_system(const HessianBundle& h);
SolveReport<Vector> molf_solve(const HessianBundle& h);

/// Grouped system interpolated from the full input-weight Hessian; no pass
/// over the data.
LearningFactorSystem amolf_assemble(const HessianBundle& h, const GroupPartition& p);

/// The same system accumulated pattern by pattern from the grouped net-value
/// changes. Cost grows with (Nh*Ng)^2 instead of (Nh*(N+1))^2.
LearningFactorSystem amolf_assemble_direct(const Mlp& m, const Dataset& d,
                                           const ForwardTrace& trace, const GradientBundle& grad,
                                           const GroupPartition& p);

struct GroupStep {
  Mlp mlp;
  Vector z;
  bool rank_deficient = false;
};

/// Solves the learning-factor system and moves every input weight w(k,n) by
/// z(k, group of n) * g(k,n).
GroupStep amolf_step(const Mlp& m, const LearningFactorSystem& sys, const GroupPartition& p,
                     const GradientBundle& grad);
void apply_group_step(Matrix& w, const Matrix& g, const GroupPartition& p,
                      std::span<const double> z);

/// Ng for the next iteration from the two most recent error-per-multiply
/// values: doubled (at most N) on a rise, halved (at least 1) on a fall.
std::size_t adapt_group_count(std::size_t n_groups, double epm_prev, double epm_now,
                              std::size_t n_inputs);

struct GroupSearchResult {
  std::size_t n_groups = 1;
  std::vector<double> errors;  // error after the step, per candidate Ng = 1..
  GroupStep best;
  GroupPartition partition;
};

/// Tries every Ng in [1, max_groups] using systems interpolated from one
/// input-weight Hessian, and keeps the one with the lowest error after the
/// step (ties go to the smaller Ng).
GroupSearchResult initial_group_search(const Mlp& m, const Dataset& d, const ForwardTrace& trace,
                                       const GradientBundle& grad, std::size_t max_groups);
GroupSearchResult initial_group_search(const Mlp& m, const Dataset& d);

// ---------------------------------------------------------------------------
// Newton, Levenberg-Marquardt, conjugate gradient

struct NewtonStep {
  Matrix delta;  // Nh x (N+1)
  bool rank_deficient = false;
};

NewtonStep newton_input_step(const HessianBundle& h);

// (H + lambda I) e = g
SolveReport<Vector> lm_step(const Matrix& h, std::span<const double> g, double lambda);

/// Fletcher-Reeves direction memory shared by the CG trainer and any other
/// caller that supplies negative gradients.
struct CgMemory {
  Vector direction;
  Vector gradient;  // previous negative gradient
  double beta = 0.0;
  bool started = false;
};

double fletcher_reeves_beta(std::span<const double> g_new, std::span<const double> g_old);
// p <- g on the first call, p <- g + beta * p afterwards.
const Vector& cg_update_direction(CgMemory& memory, std::span<const double> neg_gradient);
// Newton step length along p: (g^T p) / curvature, or the fallback when the
// curvature is not positive.
double cg_step_length(std::span<const double> neg_gradient, std::span<const double> direction,
                      double curvature);

// ---------------------------------------------------------------------------
// Trainers

struct TrainerOptions {
  std::size_t search_period = 50;
  // Pins AMOLF's group count (no search, no adaptation). May be N+1.
  std::optional<std::size_t> fixed_groups;
  double lm_initial_lambda = 1e-2;
  double lm_lambda_factor = 10.0;
  std::size_t lm_max_attempts = 10;
};

struct TrainerState {
  Mlp mlp;
  std::size_t iteration = 0;
  double last_error = 0.0;
  CostLedger ledger;
};

class Trainer {
 public:
  virtual ~Trainer() = default;
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  void iterate();

  const TrainerState& state() const { return state_; }
  const Dataset& data() const { return *data_; }
  Algorithm algorithm() const { return algorithm_; }

 protected:
  // d must outlive the trainer.
  Trainer(Algorithm algorithm, Mlp initial, const Dataset& d);

  // Advances the network and returns the iteration's multiply count.
  virtual MultCount step() = 0;

  TrainerState state_;
  const Dataset* data_;

 private:
  Algorithm algorithm_;
};

class OwoBpTrainer final : public Trainer {
 public:
  OwoBpTrainer(Mlp initial, const Dataset& d) : Trainer(Algorithm::owo_bp, std::move(initial), d) {}
  double last_learning_factor() const { return last_z_; }

 private:
  MultCount step() override;
  double last_z_ = 0.0;
};

class OwoMolfTrainer final : public Trainer {
 public:
  OwoMolfTrainer(Mlp initial, const Dataset& d)
      : Trainer(Algorithm::owo_molf, std::move(initial), d) {}
  const Vector& last_learning_factors() const { return last_z_; }

 private:
  MultCount step() override;
  Vector last_z_;
};

class OwoNewtonTrainer final : public Trainer {
 public:
  OwoNewtonTrainer(Mlp initial, const Dataset& d)
      : Trainer(Algorithm::owo_newton, std::move(initial), d) {}

 private:
  MultCount step() override;
};

struct EpmRecord {
  std::size_t iteration;
  double error_before;
  double error_after;
  MultCount multiplies;  // the iteration's formula count, without search surcharge
  double epm;
};

struct AmolfState {
  std::size_t n_groups = 1;
  std::size_t search_period = 50;
  std::vector<EpmRecord> epm_history;
  std::vector<std::size_t> group_history;  // Ng used in each iteration
  std::vector<bool> searched;              // whether each iteration ran a search
};

class AmolfTrainer final : public Trainer {
 public:
  AmolfTrainer(Mlp initial, const Dataset& d, const TrainerOptions& options = {});
  const AmolfState& amolf_state() const { return amolf_; }

 private:
  MultCount step() override;
  AmolfState amolf_;
  std::optional<std::size_t> fixed_groups_;
};

class LmTrainer final : public Trainer {
 public:
  LmTrainer(Mlp initial, const Dataset& d, const TrainerOptions& options = {});
  double lambda() const { return lambda_; }
  bool stalled() const { return stalled_; }

 private:
  MultCount step() override;
  double lambda_;
  double factor_;
  std::size_t max_attempts_;
  bool stalled_ = false;
};

class CgTrainer final : public Trainer {
 public:
  CgTrainer(Mlp initial, const Dataset& d) : Trainer(Algorithm::cg, std::move(initial), d) {}
  const CgMemory& memory() const { return memory_; }

 private:
  MultCount step() override;
  CgMemory memory_;
};

std::unique_ptr<Trainer> make_trainer(Algorithm algorithm, Mlp initial, const Dataset& d,
                                      const TrainerOptions& options = {});

}  // namespace amolf
