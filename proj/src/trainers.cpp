#include "amolf/trainers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "amolf/owo.hpp"

namespace amolf {

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::owo_bp: return "owo-bp";
    case Algorithm::owo_molf: return "owo-molf";
    case Algorithm::owo_newton: return "owo-newton";
    case Algorithm::amolf: return "amolf";
    case Algorithm::lm: return "lm";
    case Algorithm::cg: return "cg";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  for (Algorithm a : {Algorithm::owo_bp, Algorithm::owo_molf, Algorithm::owo_newton,
                      Algorithm::amolf, Algorithm::lm, Algorithm::cg})
    if (name == to_string(a)) return a;
  throw std::invalid_argument("unknown algorithm '" + std::string(name) + "'");
}

double olf(const Mlp& m, const Dataset& d, const ForwardTrace& trace, const GradientBundle& grad) {
  const double slope = dot(grad.g.data(), grad.g.data());
  const double curvature = input_directional_curvature(m, d, trace, grad.g);
  return curvature > kCurvatureFloor ? slope / curvature : kFallbackLearningFactor;
}

double olf_curvature(const HessianBundle& h) {
  const std::size_t nh = h.index.n_hidden;
  const std::size_t n1 = h.index.stride;
  double total = 0.0;
  for (std::size_t k = 0; k < nh; ++k)
    for (std::size_t j = 0; j < nh; ++j) {
      double block = 0.0;
      for (std::size_t n = 0; n < n1; ++n) {
        const auto hrow = h.h.row(h.index.flatten(k, n));
        double s = 0.0;
        for (std::size_t mm = 0; mm < n1; ++mm) s += hrow[h.index.flatten(j, mm)] * h.g[h.index.flatten(j, mm)];
        block += h.g[h.index.flatten(k, n)] * s;
      }
      total += block;
    }
  return total;
}

LearningFactorSystem molf_system(const HessianBundle& h) {
  const std::size_t nh = h.index.n_hidden;
  const std::size_t n1 = h.index.stride;
  LearningFactorSystem sys{Matrix(nh, nh), Vector(nh, 0.0)};
  for (std::size_t k = 0; k < nh; ++k) {
    for (std::size_t n = 0; n < n1; ++n) {
      const double g = h.g[h.index.flatten(k, n)];
      sys.g[k] += g * g;
    }
    for (std::size_t j = 0; j < nh; ++j) {
      double s = 0.0;
      for (std::size_t n = 0; n < n1; ++n) {
        const std::size_t a = h.index.flatten(k, n);
        double inner = 0.0;
        for (std::size_t mm = 0; mm < n1; ++mm) {
          const std::size_t b = h.index.flatten(j, mm);
          inner += h.h(a, b) * h.g[b];
        }
        s += h.g[a] * inner;
      }
      sys.h(k, j) = s;
    }
  }
  // Symmetrize rounding so solve_sym sees an exactly symmetric matrix.
  for (std::size_t k = 0; k < nh; ++k)
    for (std::size_t j = k + 1; j < nh; ++j) sys.h(j, k) = sys.h(k, j);
  return sys;
}

SolveReport<Vector> molf_solve(const HessianBundle& h) {
  const auto sys = molf_system(h);
  return solve_sym(sys.h, sys.g);
}

LearningFactorSystem amolf_assemble(const HessianBundle& h, const GroupPartition& p) {
  const std::size_t niw = h.index.size();
  if (p.n_hidden != h.index.n_hidden || p.n_aug != h.index.stride)
    throw std::invalid_argument("amolf_assemble: partition does not match the Hessian");
  const std::size_t l = p.n_factors();
  std::vector<std::size_t> factor(niw);
  for (std::size_t a = 0; a < niw; ++a) {
    const auto [k, n] = h.index.unflatten(a);
    factor[a] = p.factor_index(k, p.group_of(k, n));
  }
  LearningFactorSystem sys{Matrix(l, l), Vector(l, 0.0)};
  for (std::size_t a = 0; a < niw; ++a) {
    const double ga = h.g[a];
    sys.g[factor[a]] += ga * ga;
    if (ga == 0.0) continue;
    const auto hrow = h.h.row(a);
    auto out = sys.h.row(factor[a]);
    for (std::size_t b = 0; b < niw; ++b) out[factor[b]] += hrow[b] * ga * h.g[b];
  }
  for (std::size_t a = 0; a < l; ++a)
    for (std::size_t b = a + 1; b < l; ++b) {
      const double v = 0.5 * (sys.h(a, b) + sys.h(b, a));
      sys.h(a, b) = v;
      sys.h(b, a) = v;
    }
  return sys;
}

LearningFactorSystem amolf_assemble_direct(const Mlp& m, const Dataset& d,
                                           const ForwardTrace& trace, const GradientBundle& grad,
                                           const GroupPartition& p) {
  const std::size_t nh = m.n_hidden;
  const std::size_t n1 = m.n_inputs + 1;
  const std::size_t ng = p.n_groups;
  const std::size_t l = p.n_factors();
  if (p.n_hidden != nh || p.n_aug != n1)
    throw std::invalid_argument("amolf_assemble_direct: partition does not match the network");

  LearningFactorSystem sys{Matrix(l, l), Vector(l, 0.0)};
  for (std::size_t k = 0; k < nh; ++k)
    for (std::size_t n = 0; n < n1; ++n) {
      const double g = grad.g(k, n);
      sys.g[p.factor_index(k, p.group_of(k, n))] += g * g;
    }

  // v(k,C) = f'(n_p(k)) * sum over group C of x_p(n) g(k,n), the derivative
  // of the net value of unit k with respect to z(k,C).
  Vector v(l);
  for (std::size_t pat = 0; pat < d.n_patterns(); ++pat) {
    auto x = d.inputs.row(pat);
    std::fill(v.begin(), v.end(), 0.0);
    for (std::size_t k = 0; k < nh; ++k) {
      auto g = grad.g.row(k);
      double* vk = v.data() + k * ng;
      for (std::size_t n = 0; n < n1; ++n) vk[p.group_of(k, n)] += x[n] * g[n];
      const double slope = activation_slope(m.activation, trace.activ(pat, k));
      for (std::size_t c = 0; c < ng; ++c) vk[c] *= slope;
    }
    for (std::size_t a = 0; a < l; ++a) {
      const double va = v[a];
      if (va == 0.0) continue;
      auto row = sys.h.row(a);
      for (std::size_t b = a; b < l; ++b) row[b] += va * v[b];
    }
  }

  const double scale = 2.0 / static_cast<double>(d.n_patterns());
  for (std::size_t a = 0; a < l; ++a) {
    const std::size_t k = a / ng;
    for (std::size_t b = a; b < l; ++b) {
      const std::size_t j = b / ng;
      double q = 0.0;
      for (std::size_t i = 0; i < m.n_outputs; ++i) q += m.woh(i, k) * m.woh(i, j);
      sys.h(a, b) *= scale * q;
      sys.h(b, a) = sys.h(a, b);
    }
  }
  return sys;
}

void apply_group_step(Matrix& w, const Matrix& g, const GroupPartition& p,
                      std::span<const double> z) {
  if (z.size() != p.n_factors()) throw std::invalid_argument("apply_group_step: wrong factor count");
  for (std::size_t k = 0; k < p.n_hidden; ++k)
    for (std::size_t n = 0; n < p.n_aug; ++n)
      w(k, n) += z[p.factor_index(k, p.group_of(k, n))] * g(k, n);
}

GroupStep amolf_step(const Mlp& m, const LearningFactorSystem& sys, const GroupPartition& p,
                     const GradientBundle& grad) {
  auto solved = solve_sym(sys.h, sys.g);
  GroupStep step{m, std::move(solved.solution), solved.rank_deficient};
  apply_group_step(step.mlp.w, grad.g, p, step.z);
  return step;
}

std::size_t adapt_group_count(std::size_t n_groups, double epm_prev, double epm_now,
                              std::size_t n_inputs) {
  const std::size_t cap = std::max<std::size_t>(n_inputs, 1);
  std::size_t next = n_groups;
  if (epm_now > epm_prev)
    next = std::min(2 * n_groups, cap);
  else if (epm_now < epm_prev)
    next = std::max<std::size_t>((n_groups + 1) / 2, 1);
  return std::min(next, cap);
}

GroupSearchResult initial_group_search(const Mlp& m, const Dataset& d, const ForwardTrace& trace,
                                       const GradientBundle& grad, std::size_t max_groups) {
  if (max_groups == 0 || max_groups > m.n_inputs + 1)
    throw std::invalid_argument("initial_group_search: max_groups outside [1, N+1]");
  const HessianBundle h = gauss_newton_input_hessian(m, d, trace, grad);
  const Matrix hw = curvature_map(m, d, trace);

  GroupSearchResult result;
  double best = 0.0;
  for (std::size_t ng = 1; ng <= max_groups; ++ng) {
    GroupPartition p = build_partition(hw, ng);
    GroupStep step = amolf_step(m, amolf_assemble(h, p), p, grad);
    const double e = mse(step.mlp, d);
    result.errors.push_back(e);
    if (ng == 1 || e < best) {
      best = e;
      result.n_groups = ng;
      result.best = std::move(step);
      result.partition = std::move(p);
    }
  }
  return result;
}

GroupSearchResult initial_group_search(const Mlp& m, const Dataset& d) {
  const ForwardTrace trace = forward(m, d);
  return initial_group_search(m, d, trace, backprop(m, d, trace), m.n_inputs);
}

NewtonStep newton_input_step(const HessianBundle& h) {
  auto solved = solve_sym(h.h, h.g);
  return {unflatten_input_weights(solved.solution, h.index.n_hidden, h.index.stride),
          solved.rank_deficient};
}

SolveReport<Vector> lm_step(const Matrix& h, std::span<const double> g, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("lm_step: negative damping");
  Matrix damped = h;
  for (std::size_t i = 0; i < damped.rows(); ++i) damped(i, i) += lambda;
  return solve_sym(damped, g);
}

double fletcher_reeves_beta(std::span<const double> g_new, std::span<const double> g_old) {
  const double denom = dot(g_old, g_old);
  return denom > 0.0 ? dot(g_new, g_new) / denom : 0.0;
}

const Vector& cg_update_direction(CgMemory& memory, std::span<const double> neg_gradient) {
  if (!memory.started) {
    memory.direction.assign(neg_gradient.begin(), neg_gradient.end());
    memory.beta = 0.0;
    memory.started = true;
  } else {
    if (neg_gradient.size() != memory.direction.size())
      throw std::invalid_argument("cg_update_direction: dimension changed");
    memory.beta = fletcher_reeves_beta(neg_gradient, memory.gradient);
    for (std::size_t i = 0; i < neg_gradient.size(); ++i)
      memory.direction[i] = neg_gradient[i] + memory.beta * memory.direction[i];
  }
  memory.gradient.assign(neg_gradient.begin(), neg_gradient.end());
  return memory.direction;
}

double cg_step_length(std::span<const double> neg_gradient, std::span<const double> direction,
                      double curvature) {
  return curvature > kCurvatureFloor ? dot(neg_gradient, direction) / curvature
                                     : kFallbackLearningFactor;
}

// ---------------------------------------------------------------------------

Trainer::Trainer(Algorithm algorithm, Mlp initial, const Dataset& d)
    : data_(&d), algorithm_(algorithm) {
  state_.mlp = std::move(initial);
  state_.ledger = CostLedger(std::string(to_string(algorithm)));
  optimize_output_weights(state_.mlp, d);
  state_.last_error = mse(state_.mlp, d);
}

void Trainer::iterate() {
  const MultCount cost = step();
  ++state_.iteration;
  state_.last_error = mse(state_.mlp, *data_);
  state_.ledger.add(cost);
}

namespace {

std::int64_t as_count(std::size_t v) { return static_cast<std::int64_t>(v); }

}  // namespace

MultCount OwoBpTrainer::step() {
  Mlp& m = state_.mlp;
  const Dataset& d = *data_;
  optimize_output_weights(m, d);
  const ForwardTrace trace = forward(m, d);
  const GradientBundle grad = backprop(m, d, trace);
  last_z_ = olf(m, d, trace, grad);
  for (std::size_t i = 0; i < m.w.size(); ++i) m.w.data()[i] += last_z_ * grad.g.data()[i];
  return mult_owo_bp(as_count(m.n_inputs), as_count(m.n_hidden), as_count(m.n_outputs),
                     as_count(d.n_patterns()));
}

MultCount OwoMolfTrainer::step() {
  Mlp& m = state_.mlp;
  const Dataset& d = *data_;
  const ForwardTrace trace = forward(m, d);
  const GradientBundle grad = backprop(m, d, trace);
  const GroupPartition p = single_group_partition(m.n_hidden, m.n_inputs + 1);
  GroupStep step = amolf_step(m, amolf_assemble_direct(m, d, trace, grad, p), p, grad);
  m = std::move(step.mlp);
  last_z_ = std::move(step.z);
  optimize_output_weights(m, d);
  return mult_owo_molf(as_count(m.n_inputs), as_count(m.n_hidden), as_count(m.n_outputs),
                       as_count(d.n_patterns()));
}

MultCount OwoNewtonTrainer::step() {
  Mlp& m = state_.mlp;
  const Dataset& d = *data_;
  const ForwardTrace trace = forward(m, d);
  const GradientBundle grad = backprop(m, d, trace);
  const NewtonStep newton = newton_input_step(gauss_newton_input_hessian(m, d, trace, grad));
  for (std::size_t i = 0; i < m.w.size(); ++i) m.w.data()[i] += newton.delta.data()[i];
  optimize_output_weights(m, d);
  return mult_owo_newton(as_count(m.n_inputs), as_count(m.n_hidden), as_count(m.n_outputs),
                         as_count(d.n_patterns()));
}

AmolfTrainer::AmolfTrainer(Mlp initial, const Dataset& d, const TrainerOptions& options)
    : Trainer(Algorithm::amolf, std::move(initial), d), fixed_groups_(options.fixed_groups) {
  amolf_.search_period = options.search_period;
  if (fixed_groups_) {
    if (*fixed_groups_ == 0 || *fixed_groups_ > state_.mlp.n_inputs + 1)
      throw std::invalid_argument("fixed group count outside [1, N+1]");
    amolf_.n_groups = *fixed_groups_;
  }
}

MultCount AmolfTrainer::step() {
  Mlp& m = state_.mlp;
  const Dataset& d = *data_;
  const std::size_t it = state_.iteration + 1;
  const double error_before = state_.last_error;

  const ForwardTrace trace = forward(m, d);
  const GradientBundle grad = backprop(m, d, trace);

  const bool search =
      !fixed_groups_ && (it == 1 || (amolf_.search_period > 0 && (it - 1) % amolf_.search_period == 0));
  MultCount surcharge = 0;
  if (search) {
    GroupSearchResult found = initial_group_search(m, d, trace, grad, m.n_inputs);
    amolf_.n_groups = found.n_groups;
    m = std::move(found.best.mlp);
    surcharge = mult_group_search(as_count(m.n_inputs), as_count(m.n_hidden),
                                  as_count(m.n_outputs), as_count(d.n_patterns()),
                                  as_count(m.n_inputs));
  } else {
    if (!fixed_groups_ && amolf_.epm_history.size() >= 2) {
      const auto& h = amolf_.epm_history;
      amolf_.n_groups =
          adapt_group_count(amolf_.n_groups, h[h.size() - 2].epm, h.back().epm, m.n_inputs);
    }
    const GroupPartition p = build_partition(curvature_map(m, d, trace), amolf_.n_groups);
    GroupStep step = amolf_step(m, amolf_assemble_direct(m, d, trace, grad, p), p, grad);
    m = std::move(step.mlp);
  }
  optimize_output_weights(m, d);

  const double error_after = mse(m, d);
  const MultCount cost =
      mult_amolf(as_count(m.n_inputs), as_count(m.n_hidden), as_count(m.n_outputs),
                 as_count(d.n_patterns()), as_count(amolf_.n_groups));
  amolf_.epm_history.push_back(
      {it, error_before, error_after, cost, epm(error_before, error_after, cost)});
  amolf_.group_history.push_back(amolf_.n_groups);
  amolf_.searched.push_back(search);
  return cost + surcharge;
}

LmTrainer::LmTrainer(Mlp initial, const Dataset& d, const TrainerOptions& options)
    : Trainer(Algorithm::lm, std::move(initial), d),
      lambda_(options.lm_initial_lambda),
      factor_(options.lm_lambda_factor),
      max_attempts_(options.lm_max_attempts) {}

MultCount LmTrainer::step() {
  Mlp& m = state_.mlp;
  const Dataset& d = *data_;
  const ForwardTrace trace = forward(m, d);
  const GradientBundle grad = backprop(m, d, trace);
  const FullHessian full = full_gauss_newton(m, d, trace, grad);
  const double error = mse(d, trace);

  stalled_ = true;
  for (std::size_t attempt = 0; attempt < max_attempts_; ++attempt) {
    const auto e = lm_step(full.h, full.g, lambda_);
    Mlp trial = m;
    add_to_weights(trial, e.solution);
    if (mse(trial, d) < error) {
      m = std::move(trial);
      lambda_ /= factor_;
      stalled_ = false;
      break;
    }
    lambda_ *= factor_;
  }
  return mult_lm(as_count(m.n_inputs), as_count(m.n_hidden), as_count(m.n_outputs),
                 as_count(d.n_patterns()));
}

MultCount CgTrainer::step() {
  Mlp& m = state_.mlp;
  const Dataset& d = *data_;
  const ForwardTrace trace = forward(m, d);
  const Vector g = flatten_all(backprop(m, d, trace));
  const Vector& p = cg_update_direction(memory_, g);
  const double z = cg_step_length(g, p, directional_curvature(m, d, trace, p));
  add_to_weights(m, p, z);
  return mult_cg(as_count(m.n_inputs), as_count(m.n_hidden), as_count(m.n_outputs),
                 as_count(d.n_patterns()));
}

std::unique_ptr<Trainer> make_trainer(Algorithm algorithm, Mlp initial, const Dataset& d,
                                      const TrainerOptions& options) {
  switch (algorithm) {
    case Algorithm::owo_bp: return std::make_unique<OwoBpTrainer>(std::move(initial), d);
    case Algorithm::owo_molf: return std::make_unique<OwoMolfTrainer>(std::move(initial), d);
    case Algorithm::owo_newton: return std::make_unique<OwoNewtonTrainer>(std::move(initial), d);
    case Algorithm::amolf: return std::make_unique<AmolfTrainer>(std::move(initial), d, options);
    case Algorithm::lm: return std::make_unique<LmTrainer>(std::move(initial), d, options);
    case Algorithm::cg: return std::make_unique<CgTrainer>(std::move(initial), d);
  }
  throw std::invalid_argument("make_trainer: unknown algorithm");
}

}  // namespace amolf
