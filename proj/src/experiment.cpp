#include "amolf/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

namespace amolf {

void ExperimentConfig::validate(bool kfold) const {
  if (iterations < 1) throw ConfigError("iterations must be at least 1");
  if (n_trials < 1) throw ConfigError("trials must be at least 1");
  if (n_hidden < 1) throw ConfigError("hidden units must be at least 1");
  if (kfold && k < 3) throw ConfigError("k-fold needs k >= 3");
  if (kfold && patience < 1) throw ConfigError("patience must be at least 1");
  if (source == DataSource::file) {
    if (data_path.empty()) throw ConfigError("no data file given");
    if (n_inputs < 1 || n_outputs < 1) throw ConfigError("file data needs --n and --m");
  } else if (n_patterns < 1) {
    throw ConfigError("synthetic data needs at least one pattern");
  }
}

TrainerOptions ExperimentConfig::trainer_options() const {
  TrainerOptions o;
  o.search_period = search_period;
  return o;
}

Dataset load_dataset(const ExperimentConfig& cfg) {
  if (cfg.source == DataSource::file) return load_tra(cfg.data_path, cfg.n_inputs, cfg.n_outputs);
  return gen_matrix_inversion(cfg.n_patterns, cfg.seed);
}

namespace {

// Runs fn(0..n-1) on up to `threads` workers. Each index writes its own slot,
// so the outcome is independent of scheduling.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  std::vector<std::exception_ptr> errors(n);
  auto run = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) run(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) run(i);
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct TrialResult {
  double initial = 0.0;
  std::vector<double> errors;
  std::vector<MultCount> cumulative;
};

}  // namespace

TrainingCurve run_training(const ExperimentConfig& cfg, const Dataset& raw) {
  cfg.validate(false);
  const Dataset d = normalize_zero_mean(raw).first;
  std::vector<TrialResult> trials(cfg.n_trials);

  parallel_for(cfg.n_trials, cfg.threads, [&](std::size_t i) {
    Mlp init = init_net_control(cfg.n_hidden, d, trial_seed(cfg.seed, i), cfg.activation);
    auto trainer = make_trainer(cfg.algorithm, std::move(init), d, cfg.trainer_options());
    TrialResult& r = trials[i];
    r.initial = trainer->state().last_error;
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
      trainer->iterate();
      r.errors.push_back(trainer->state().last_error);
    }
    r.cumulative = trainer->state().ledger.cumulative();
  });

  TrainingCurve curve;
  curve.algorithm = cfg.algorithm;
  curve.n_trials = cfg.n_trials;
  const double nt = static_cast<double>(cfg.n_trials);
  for (const auto& r : trials) curve.initial_mse += r.initial;
  curve.initial_mse /= nt;
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    double e = 0.0;
    MultCount m = 0;
    for (const auto& r : trials) {
      e += r.errors[it];
      m += r.cumulative[it];
    }
    curve.points.push_back({it + 1, e / nt, m / static_cast<MultCount>(cfg.n_trials)});
  }
  for (const auto& r : trials) curve.final_mse.push_back(r.errors.back());
  return curve;
}

TrainingCurve run_training(const ExperimentConfig& cfg) {
  cfg.validate(false);
  return run_training(cfg, load_dataset(cfg));
}

KfoldReport run_kfold(const ExperimentConfig& cfg, const Dataset& d) {
  cfg.validate(true);
  const FoldPlan plan = kfold_split(d, cfg.k, cfg.seed);
  KfoldReport report;
  report.algorithm = cfg.algorithm;
  report.k = cfg.k;
  report.rounds.resize(cfg.k);

  parallel_for(cfg.k, cfg.threads, [&](std::size_t r) {
    auto [train, stats] = normalize_zero_mean(d.subset(plan.training_patterns(r)));
    const Dataset valid = apply_normalization(d.subset(plan.validation_patterns(r)), stats);
    const Dataset test = apply_normalization(d.subset(plan.test_patterns(r)), stats);

    Mlp init = init_net_control(cfg.n_hidden, train, trial_seed(cfg.seed, r), cfg.activation);
    auto trainer = make_trainer(cfg.algorithm, std::move(init), train, cfg.trainer_options());

    Mlp best = trainer->state().mlp;
    double best_valid = mse(best, valid);
    std::size_t best_it = 0;
    std::size_t stale = 0;
    std::size_t it = 0;
    while (it < cfg.iterations && stale < cfg.patience) {
      trainer->iterate();
      ++it;
      const double e = mse(trainer->state().mlp, valid);
      if (e < best_valid * (1.0 - kEarlyStopRelativeGain)) {
        best_valid = e;
        best = trainer->state().mlp;
        best_it = it;
        stale = 0;
      } else {
        ++stale;
      }
    }

    KfoldRound& out = report.rounds[r];
    out.round = r;
    out.n_train = train.n_patterns();
    out.best_iteration = best_it;
    out.iterations_run = it;
    out.train_mse = mse(best, train);
    out.validation_mse = best_valid;
    out.test_mse = mse(best, test);
  });

  for (const auto& r : report.rounds) {
    report.mean_train_mse += r.train_mse;
    report.mean_test_mse += r.test_mse;
  }
  report.mean_train_mse /= static_cast<double>(cfg.k);
  report.mean_test_mse /= static_cast<double>(cfg.k);
  return report;
}

KfoldReport run_kfold(const ExperimentConfig& cfg) {
  cfg.validate(true);
  return run_kfold(cfg, load_dataset(cfg));
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

constexpr const char* kCurveHeader = "iteration,mean_mse,cum_multiplies";

}  // namespace

void write_curve(const TrainingCurve& curve, std::ostream& out) {
  out << kCurveHeader << '\n';
  for (const auto& p : curve.points)
    out << p.iteration << ',' << num(p.mean_mse) << ',' << p.cum_multiplies << '\n';
}

void emit_curve(const TrainingCurve& curve, const std::filesystem::path& path) {
  auto out = open_output(path);
  write_curve(curve, out);
  finish(out, path);
}

std::vector<CurvePoint> parse_curve(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCurveHeader)
    throw DataError("curve: missing header '" + std::string(kCurveHeader) + "'");
  std::vector<CurvePoint> points;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    CurvePoint p;
    char c1 = 0, c2 = 0;
    std::string mse_text;
    if (!(row >> p.iteration >> c1) || c1 != ',' || !std::getline(row, mse_text, ',') ||
        !(row >> p.cum_multiplies) || (row >> c2))
      throw DataError("curve:" + std::to_string(line_no) + ": malformed row");
    const char* end = mse_text.data() + mse_text.size();
    const auto [ptr, ec] = std::from_chars(mse_text.data(), end, p.mean_mse);
    if (ec != std::errc{} || ptr != end) throw DataError("curve:" + std::to_string(line_no) + ": bad mse");
    points.push_back(p);
  }
  return points;
}

std::vector<CurvePoint> read_curve(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string() + ": cannot open");
  return parse_curve(in);
}

void write_kfold(const KfoldReport& report, std::ostream& out) {
  out << "round,n_train,best_iteration,iterations_run,train_mse,validation_mse,test_mse\n";
  for (const auto& r : report.rounds)
    out << r.round + 1 << ',' << r.n_train << ',' << r.best_iteration << ',' << r.iterations_run
        << ',' << num(r.train_mse) << ',' << num(r.validation_mse) << ',' << num(r.test_mse)
        << '\n';
  out << "mean,,,," << num(report.mean_train_mse) << ",," << num(report.mean_test_mse) << '\n';
}

void emit_kfold(const KfoldReport& report, const std::filesystem::path& path) {
  auto out = open_output(path);
  write_kfold(report, out);
  finish(out, path);
}

}  // namespace amolf
