#pragma once

// Experiment driver: averaged training curves over several initial networks
// and the k-fold train/validate/test protocol, plus their CSV outputs.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "amolf/cost.hpp"
#include "amolf/dataset.hpp"
#include "amolf/network.hpp"
#include "amolf/trainers.hpp"

namespace amolf {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class DataSource { file, matinv };

struct ExperimentConfig {
  DataSource source = DataSource::matinv;
  std::filesystem::path data_path;  // used when source == file
  std::size_t n_patterns = 2000;    // synthetic sets only
  std::size_t n_inputs = 4;         // N, for file loads
  std::size_t n_outputs = 4;        // M, for file loads
  std::size_t n_hidden = 30;
  Algorithm algorithm = Algorithm::amolf;
  std::size_t iterations = 150;
  std::size_t n_trials = 10;
  std::size_t k = 10;
  std::uint64_t seed = 1;
  Activation activation = Activation::sigmoid;
  std::size_t search_period = 50;
  std::size_t patience = 20;
  // 0 picks the hardware concurrency. Results do not depend on it.
  std::size_t threads = 0;

  // Throws ConfigError on an invalid combination.
  void validate(bool kfold) const;
  TrainerOptions trainer_options() const;
};

// Synthetic data is generated from cfg.seed; files are read with cfg's N, M.
Dataset load_dataset(const ExperimentConfig& cfg);

// Seed of trial (or k-fold round) i.
inline std::uint64_t trial_seed(std::uint64_t seed, std::size_t i) { return seed ^ i; }

struct CurvePoint {
  std::size_t iteration = 0;
  double mean_mse = 0.0;
  MultCount cum_multiplies = 0;
};

struct TrainingCurve {
  Algorithm algorithm = Algorithm::amolf;
  std::size_t n_trials = 0;
  double initial_mse = 0.0;  // mean error after the initial output solve
  std::vector<CurvePoint> points;
  // Per-trial final errors, in trial order.
  std::vector<double> final_mse;
};

/// Normalizes d, then trains n_trials networks from net-control starts and
/// averages the error per iteration. Cumulative multiplies are the integer
/// mean of the trials' ledgers.
TrainingCurve run_training(const ExperimentConfig& cfg, const Dataset& d);
TrainingCurve run_training(const ExperimentConfig& cfg);

struct KfoldRound {
  std::size_t round = 0;
  std::size_t n_train = 0;
  std::size_t best_iteration = 0;
  std::size_t iterations_run = 0;
  double train_mse = 0.0;
  double validation_mse = 0.0;
  double test_mse = 0.0;
};

struct KfoldReport {
  Algorithm algorithm = Algorithm::amolf;
  std::size_t k = 0;
  std::vector<KfoldRound> rounds;
  double mean_train_mse = 0.0;
  double mean_test_mse = 0.0;
};

/// Each round trains on k-2 folds (normalized with their own means), stops
/// once the validation error has not improved by at least 1e-6 relative for
/// cfg.patience iterations, and scores the best-validation network.
KfoldReport run_kfold(const ExperimentConfig& cfg, const Dataset& d);
KfoldReport run_kfold(const ExperimentConfig& cfg);

inline constexpr double kEarlyStopRelativeGain = 1e-6;

void write_curve(const TrainingCurve& curve, std::ostream& out);
void emit_curve(const TrainingCurve& curve, const std::filesystem::path& path);
std::vector<CurvePoint> parse_curve(std::istream& in);
std::vector<CurvePoint> read_curve(const std::filesystem::path& path);

void write_kfold(const KfoldReport& report, std::ostream& out);
void emit_kfold(const KfoldReport& report, const std::filesystem::path& path);

}  // namespace amolf
