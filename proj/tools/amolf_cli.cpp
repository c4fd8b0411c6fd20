// Command-line front end: train, kfold, gen-data, count-mults.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "amolf/cost.hpp"
#include "amolf/dataset.hpp"
#include "amolf/experiment.hpp"
#include "amolf/trainers.hpp"

namespace {

struct Flags {
  std::string data;
  std::string synthetic;
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t nh = 30;
  std::string algo = "amolf";
  std::size_t iters = 150;
  std::size_t trials = 10;
  std::size_t k = 10;
  std::uint64_t seed = 1;
  std::string activation = "sigmoid";
  std::size_t search_period = 50;
  std::size_t patterns = 2000;
  std::size_t patience = 20;
  std::size_t threads = 0;
  std::string out;
};

void add_data_flags(CLI::App* cmd, Flags& f) {
  auto* data = cmd->add_option("--data", f.data, "pattern file: N inputs then M targets per line");
  auto* synth = cmd->add_option("--synthetic", f.synthetic, "synthetic generator")
                    ->check(CLI::IsMember({"matinv"}));
  data->excludes(synth);
  cmd->add_option("--n", f.n, "number of inputs (file data)");
  cmd->add_option("--m", f.m, "number of outputs (file data)");
  cmd->add_option("--patterns", f.patterns, "synthetic pattern count")->capture_default_str();
  cmd->add_option("--seed", f.seed, "master seed")->capture_default_str();
}

void add_training_flags(CLI::App* cmd, Flags& f) {
  add_data_flags(cmd, f);
  cmd->add_option("--nh", f.nh, "hidden units")->capture_default_str();
  cmd->add_option("--algo", f.algo, "owo-bp|owo-molf|owo-newton|amolf|lm|cg")
      ->capture_default_str();
  cmd->add_option("--iters", f.iters, "training iterations")->capture_default_str();
  cmd->add_option("--activation", f.activation, "sigmoid|tanh|linear")->capture_default_str();
  cmd->add_option("--search-period", f.search_period, "AMOLF group-search period")
      ->capture_default_str();
  cmd->add_option("--threads", f.threads, "worker threads, 0 = all cores")->capture_default_str();
  cmd->add_option("--out", f.out, "output CSV (default stdout)");
}

amolf::ExperimentConfig to_config(const Flags& f) {
  amolf::ExperimentConfig cfg;
  if (!f.data.empty()) {
    cfg.source = amolf::DataSource::file;
    cfg.data_path = f.data;
    cfg.n_inputs = f.n;
    cfg.n_outputs = f.m;
  } else if (f.synthetic == "matinv") {
    cfg.source = amolf::DataSource::matinv;
  } else {
    throw amolf::ConfigError("give --data PATH or --synthetic matinv");
  }
  cfg.n_patterns = f.patterns;
  cfg.n_hidden = f.nh;
  cfg.algorithm = amolf::parse_algorithm(f.algo);
  cfg.iterations = f.iters;
  cfg.n_trials = f.trials;
  cfg.k = f.k;
  cfg.seed = f.seed;
  cfg.activation = amolf::parse_activation(f.activation);
  cfg.search_period = f.search_period;
  cfg.patience = f.patience;
  cfg.threads = f.threads;
  return cfg;
}

template <class Write>
void emit(const std::string& out, Write write) {
  if (out.empty()) {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream file(out, std::ios::binary);
  if (!file) throw std::runtime_error(out + ": cannot open for writing");
  write(file);
  file.flush();
  if (!file) throw std::runtime_error(out + ": write failed");
}

void count_mults(const Flags& f, std::ostream& os) {
  const auto n = static_cast<std::int64_t>(f.n);
  const auto nh = static_cast<std::int64_t>(f.nh);
  const auto m = static_cast<std::int64_t>(f.m);
  const auto nv = static_cast<std::int64_t>(f.patterns);
  os << "algorithm,groups,multiplies_per_iteration\n";
  os << "owo-bp,," << amolf::mult_owo_bp(n, nh, m, nv) << '\n';
  os << "owo-molf,," << amolf::mult_owo_molf(n, nh, m, nv) << '\n';
  os << "owo-newton,," << amolf::mult_owo_newton(n, nh, m, nv) << '\n';
  os << "lm,," << amolf::mult_lm(n, nh, m, nv) << '\n';
  os << "cg,," << amolf::mult_cg(n, nh, m, nv) << '\n';
  for (std::int64_t ng = 1; ng <= n + 1; ++ng)
    os << "amolf," << ng << ',' << amolf::mult_amolf(n, nh, m, nv, ng) << '\n';
  os << "amolf-group-search,," << amolf::mult_group_search(n, nh, m, nv, n) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AMOLF and baseline MLP trainers"};
  app.require_subcommand(1);
  Flags f;

  auto* train = app.add_subcommand("train", "averaged training curve over several initial networks");
  add_training_flags(train, f);
  train->add_option("--trials", f.trials, "initial networks")->capture_default_str();

  auto* kfold = app.add_subcommand("kfold", "k-fold validation and testing");
  add_training_flags(kfold, f);
  kfold->add_option("--k", f.k, "folds")->capture_default_str();
  kfold->add_option("--patience", f.patience, "early-stopping patience")->capture_default_str();

  auto* gen = app.add_subcommand("gen-data", "write a synthetic pattern file");
  gen->add_option("--synthetic", f.synthetic, "generator")
      ->check(CLI::IsMember({"matinv"}))
      ->default_val("matinv");
  gen->add_option("--patterns", f.patterns, "pattern count")->capture_default_str();
  gen->add_option("--seed", f.seed, "seed")->capture_default_str();
  gen->add_option("--out", f.out, "output file")->required();

  auto* count = app.add_subcommand("count-mults", "closed-form multiplies per iteration");
  count->add_option("--n", f.n, "inputs")->required();
  count->add_option("--m", f.m, "outputs")->required();
  count->add_option("--nh", f.nh, "hidden units")->required();
  count->add_option("--patterns", f.patterns, "training patterns")->required();
  count->add_option("--out", f.out, "output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "amolf: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*train) {
      const auto curve = amolf::run_training(to_config(f));
      emit(f.out, [&](std::ostream& os) { amolf::write_curve(curve, os); });
    } else if (*kfold) {
      const auto report = amolf::run_kfold(to_config(f));
      emit(f.out, [&](std::ostream& os) { amolf::write_kfold(report, os); });
    } else if (*gen) {
      amolf::save_tra(amolf::gen_matrix_inversion(f.patterns, f.seed), f.out);
    } else if (*count) {
      emit(f.out, [&](std::ostream& os) { count_mults(f, os); });
    }
  } catch (const std::exception& e) {
    std::cerr << "amolf: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
