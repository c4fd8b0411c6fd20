#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <numeric>
#include <random>

#include "amolf/cost.hpp"
#include "amolf/gradients.hpp"
#include "amolf/owo.hpp"
#include "amolf/trainers.hpp"
#include "support.hpp"

using namespace amolf;

namespace {

struct Instance {
  Dataset d;
  Mlp m;
  ForwardTrace trace;
  GradientBundle grad;
  HessianBundle h;
};

// Random network whose output weights have been solved, so the input-weight
// gradient is the one every trainer sees.
Instance make_instance(std::uint64_t seed, std::size_t n, std::size_t nh, std::size_t mo,
                       std::size_t nv, Activation act = Activation::sigmoid) {
  Instance in{oracle::random_dataset(seed, n, mo, nv), oracle::random_mlp(seed, n, nh, mo, act),
              {}, {}, {}};
  optimize_output_weights(in.m, in.d);
  in.trace = forward(in.m, in.d);
  in.grad = backprop(in.m, in.d, in.trace);
  in.h = gauss_newton_input_hessian(in.m, in.d, in.trace, in.grad);
  return in;
}

double rel(const Matrix& a, const Matrix& b) { return oracle::rel_diff(a.data(), b.data()); }

Matrix moved(const Mlp& before, const Mlp& after) {
  Matrix d = after.w;
  for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] -= before.w.data()[i];
  return d;
}

Dataset matinv_data(std::size_t nv) { return normalize_zero_mean(gen_matrix_inversion(nv, 7)).first; }

}  // namespace

TEST_CASE("algorithm names") {
  for (Algorithm a : {Algorithm::owo_bp, Algorithm::owo_molf, Algorithm::owo_newton,
                      Algorithm::amolf, Algorithm::lm, Algorithm::cg})
    CHECK(parse_algorithm(to_string(a)) == a);
  CHECK_THROWS_AS(parse_algorithm("scg"), std::invalid_argument);
}

TEST_CASE("learning factor for a linear network is the exact line minimizer") {
  // Output weights are left random: after an output solve the bypass already
  // absorbs every linear map and the input gradient vanishes.
  Instance in{oracle::random_dataset(3, 3, 2, 30), oracle::random_mlp(3, 3, 1, 2, Activation::linear),
              {}, {}, {}};
  in.trace = forward(in.m, in.d);
  in.grad = backprop(in.m, in.d, in.trace);
  const double z = olf(in.m, in.d, in.trace, in.grad);
  auto along = [&](double s) {
    Mlp q = in.m;
    for (std::size_t i = 0; i < q.w.size(); ++i) q.w.data()[i] += s * in.grad.g.data()[i];
    return oracle::error(q, in.d);
  };
  // E(z) is an exact parabola; its vertex from three samples.
  const double e0 = along(0.0), e1 = along(1.0), em = along(-1.0);
  const double vertex = (em - e1) / (2.0 * (e1 - 2.0 * e0 + em));
  CHECK(std::abs(z - vertex) <= 1e-8 * std::max(1.0, std::abs(vertex)));
}

TEST_CASE("learning factor brackets the minimum on a sigmoid network") {
  Instance in = make_instance(5, 4, 3, 2, 50);
  const double z = olf(in.m, in.d, in.trace, in.grad);
  auto along = [&](double s) {
    Mlp q = in.m;
    for (std::size_t i = 0; i < q.w.size(); ++i) q.w.data()[i] += s * in.grad.g.data()[i];
    return mse(q, in.d);
  };
  CHECK(z > 0.0);
  CHECK(along(z) <= along(0.5 * z));
  CHECK(along(z) <= along(2.0 * z));
  CHECK(along(z) < along(0.0));
}

TEST_CASE("learning factor falls back without curvature") {
  Instance in = make_instance(5, 2, 2, 1, 10);
  in.m.woh = Matrix(1, 2);
  const ForwardTrace t = forward(in.m, in.d);
  CHECK(olf(in.m, in.d, t, backprop(in.m, in.d, t)) == kFallbackLearningFactor);
}

TEST_CASE("one hidden unit: MOLF reduces to the single learning factor") {
  Instance in = make_instance(8, 4, 1, 2, 40);
  const auto z = molf_solve(in.h);
  REQUIRE(z.solution.size() == 1);
  const double o = olf(in.m, in.d, in.trace, in.grad);
  CHECK(std::abs(z.solution[0] - o) <= 1e-10 * std::abs(o));
}

TEST_CASE("compressed systems agree with direct accumulation") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Instance in = make_instance(seed, 4, 3, 2, 35);
    const std::size_t n1 = 5;
    const LearningFactorSystem molf = molf_system(in.h);
    const auto [h1, g1] = oracle::grouped_system(in.m, in.d, in.grad.g, single_group_partition(3, n1));
    CHECK(rel(molf.h, h1) < 1e-10);
    CHECK(oracle::rel_diff(molf.g, g1) < 1e-12);

    const Matrix hw = curvature_map(in.m, in.d, in.trace);
    for (std::size_t ng : {std::size_t{1}, std::size_t{2}, n1}) {
      const GroupPartition p = build_partition(hw, ng);
      const LearningFactorSystem interp = amolf_assemble(in.h, p);
      const LearningFactorSystem direct = amolf_assemble_direct(in.m, in.d, in.trace, in.grad, p);
      const auto [ho, go] = oracle::grouped_system(in.m, in.d, in.grad.g, p);
      CHECK(rel(interp.h, ho) < 1e-10);
      CHECK(rel(direct.h, ho) < 1e-10);
      CHECK(oracle::rel_diff(interp.g, go) < 1e-12);
      CHECK(direct.g == interp.g);
      if (ng == 1) {
        CHECK(rel(interp.h, molf.h) < 1e-12);
      }
    }
  }
}

TEST_CASE("grouped gradient is minus the derivative of E along each learning factor") {
  Instance in = make_instance(13, 3, 2, 2, 30);
  const GroupPartition p = build_partition(curvature_map(in.m, in.d, in.trace), 2);
  const LearningFactorSystem sys = amolf_assemble(in.h, p);
  for (std::size_t f = 0; f < p.n_factors(); ++f) {
    const double fd = oracle::central_diff(
        [&](double s) {
          Vector z(p.n_factors(), 0.0);
          z[f] = s;
          Matrix w = in.m.w;
          apply_group_step(w, in.grad.g, p, z);
          Mlp q = in.m;
          q.w = w;
          return oracle::error(q, in.d);
        },
        1e-6);
    CHECK(std::abs(sys.g[f] + fd) <= 1e-6 * std::max(1.0, sys.g[f]));
  }
}

TEST_CASE("zero gradient gives zero learning factors") {
  Instance in = make_instance(4, 3, 2, 1, 20);
  HessianBundle h = in.h;
  std::fill(h.g.begin(), h.g.end(), 0.0);
  const auto z = molf_solve(h);
  for (double v : z.solution) CHECK(v == 0.0);
}

TEST_CASE("group step touches every weight once") {
  Instance in = make_instance(6, 4, 3, 2, 20);
  const GroupPartition p = build_partition(curvature_map(in.m, in.d, in.trace), 2);
  Matrix w(3, 5);
  apply_group_step(w, in.grad.g, p, Vector(p.n_factors(), 1.0));
  CHECK(w == in.grad.g);
  Matrix same = in.m.w;
  apply_group_step(same, in.grad.g, p, Vector(p.n_factors(), 0.0));
  CHECK(same == in.m.w);
  CHECK_THROWS(apply_group_step(same, in.grad.g, p, Vector(1, 0.0)));
}

TEST_CASE("singleton groups reproduce the Newton step") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    Instance in = make_instance(seed + 20, 3, 2, 2, 60);
    const GroupPartition p = build_partition(curvature_map(in.m, in.d, in.trace), 4);
    const GroupStep step = amolf_step(in.m, amolf_assemble(in.h, p), p, in.grad);
    const NewtonStep newton = newton_input_step(in.h);
    CHECK_FALSE(newton.rank_deficient);
    CHECK(rel(moved(in.m, step.mlp), newton.delta) < 1e-6);
  }
}

TEST_CASE("Newton step fixtures") {
  HessianBundle h;
  h.index = {2, 3};
  h.h = Matrix::identity(6);
  for (double& v : h.h.data()) v *= 4.0;
  h.g = {1, 2, 3, 4, 5, 6};
  const NewtonStep s = newton_input_step(h);
  CHECK(s.delta == Matrix::from_rows({{0.25, 0.5, 0.75}, {1, 1.25, 1.5}}));
  h.g.assign(6, 0.0);
  CHECK(newton_input_step(h).delta == Matrix(2, 3));
}

TEST_CASE("Newton step is nearly line-optimal on a near-quadratic instance") {
  Instance base = make_instance(31, 3, 2, 1, 60);
  // Targets from a nearby network keep residuals small.
  Mlp teacher = base.m;
  for (double& v : teacher.w.data()) v += 0.05;
  Dataset d = base.d;
  d.targets = forward(teacher, d).output;
  const ForwardTrace t = forward(base.m, d);
  const HessianBundle h = gauss_newton_input_hessian(base.m, d, t);
  const NewtonStep s = newton_input_step(h);
  auto along = [&](double a) {
    Mlp q = base.m;
    for (std::size_t i = 0; i < q.w.size(); ++i) q.w.data()[i] += a * s.delta.data()[i];
    return mse(q, d);
  };
  double best = along(0.0);
  for (int i = 1; i <= 2000; ++i) best = std::min(best, along(i * 1e-3));
  const double e0 = along(0.0);
  CHECK(e0 - along(1.0) >= 0.9 * (e0 - best));
}

TEST_CASE("quadratic surrogate: more groups never hurt") {
  std::mt19937_64 rng(2024);
  const std::size_t nh = 3, n1 = 8, niw = nh * n1;
  for (int trial = 0; trial < 10; ++trial) {
    HessianBundle h{oracle::random_psd(rng, niw, niw + 4), Vector(niw), {nh, n1}};
    for (double& v : h.g) v = oracle::uniform(rng, -1, 1);
    Matrix hw(nh, n1);
    for (std::size_t a = 0; a < niw; ++a) hw.data()[a] = h.h(a, a);
    const Matrix g = unflatten_input_weights(h.g, nh, n1);

    auto minimized = [&](const GroupPartition& p) {
      const auto z = solve_sym(amolf_assemble(h, p).h, amolf_assemble(h, p).g).solution;
      Matrix delta(nh, n1);
      apply_group_step(delta, g, p, z);
      return oracle::quadratic_change(h.h, h.g, delta.data());
    };
    const double molf = minimized(single_group_partition(nh, n1));
    double prev = minimized(build_partition(hw, 1));
    CHECK(std::abs(prev - molf) < 1e-12);
    for (std::size_t ng : {2, 4, 8}) {
      const double e = minimized(build_partition(hw, ng));
      CHECK(e <= prev + 1e-12);
      CHECK(e <= molf + 1e-12);
      prev = e;
    }
  }
}

TEST_CASE("group count adaptation") {
  CHECK(adapt_group_count(4, 1.0, 2.0, 10) == 8);
  CHECK(adapt_group_count(4, 2.0, 1.0, 10) == 2);
  CHECK(adapt_group_count(4, 1.0, 1.0, 10) == 4);
  CHECK(adapt_group_count(6, 1.0, 2.0, 10) == 10);
  CHECK(adapt_group_count(10, 1.0, 2.0, 10) == 10);
  CHECK(adapt_group_count(1, 2.0, 1.0, 10) == 1);
  CHECK(adapt_group_count(3, 2.0, 1.0, 10) == 2);
}

TEST_CASE("group search picks the lowest error and breaks ties low") {
  Instance in = make_instance(17, 4, 3, 2, 40);
  const GroupSearchResult r = initial_group_search(in.m, in.d, in.trace, in.grad, 4);
  REQUIRE(r.errors.size() == 4);
  const double best = *std::min_element(r.errors.begin(), r.errors.end());
  CHECK(r.errors[r.n_groups - 1] == best);
  for (std::size_t i = 0; i + 1 < r.n_groups; ++i) CHECK(r.errors[i] > best);
  CHECK(mse(r.best.mlp, in.d) == best);
  CHECK(r.partition.n_groups == r.n_groups);

  // Same choice when every candidate is rebuilt from the data.
  std::size_t chosen = 0;
  double lowest = 0.0;
  for (std::size_t ng = 1; ng <= 4; ++ng) {
    const GroupPartition p = build_partition(curvature_map(in.m, in.d, in.trace), ng);
    const double e =
        mse(amolf_step(in.m, amolf_assemble_direct(in.m, in.d, in.trace, in.grad, p), p, in.grad).mlp,
            in.d);
    if (ng == 1 || e < lowest) {
      lowest = e;
      chosen = ng;
    }
  }
  CHECK(chosen == r.n_groups);

  // With a single non-zero gradient entry per unit every grouping makes the
  // same move, so the tie goes to one group.
  GradientBundle sparse = in.grad;
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t n = 1; n < 5; ++n) sparse.g(k, n) = 0.0;
  CHECK(initial_group_search(in.m, in.d, in.trace, sparse, 4).n_groups == 1);
  CHECK_THROWS(initial_group_search(in.m, in.d, in.trace, in.grad, 6));
}

TEST_CASE("damped solve fixtures") {
  const Vector v{1, -2, 3};
  CHECK(lm_step(Matrix::identity(3), v, 0.0).solution == v);
  CHECK(lm_step(Matrix::identity(3), v, 1.0).solution == Vector{0.5, -1, 1.5});

  std::mt19937_64 rng(4);
  const Matrix h = oracle::random_psd(rng, 6, 8);
  Vector g(6);
  for (double& x : g) x = oracle::uniform(rng, -1, 1);
  double prev_norm = 1e300;
  double angle = 0.0;
  for (double lambda = 1e-2; lambda <= 1e6; lambda *= 100) {
    const Vector e = lm_step(h, g, lambda).solution;
    const double norm = std::sqrt(dot(e, e));
    CHECK(norm < prev_norm);
    prev_norm = norm;
    angle = std::acos(std::min(1.0, dot(e, g) / (norm * std::sqrt(dot(g, g)))));
  }
  CHECK(angle < 1e-3);
  CHECK_THROWS(lm_step(h, g, -1.0));
}

TEST_CASE("Fletcher-Reeves direction") {
  CHECK(fletcher_reeves_beta(Vector{2}, Vector{1}) == 4.0);
  CgMemory mem;
  CHECK(cg_update_direction(mem, Vector{1, 2}) == Vector{1, 2});
  CHECK(mem.beta == 0.0);
  CHECK(cg_update_direction(mem, Vector{2, 0}) == Vector{2 + 0.8 * 1, 0.8 * 2});
  CHECK(mem.beta == doctest::Approx(0.8));
  CHECK(cg_step_length(Vector{1}, Vector{1}, 0.0) == kFallbackLearningFactor);
}

TEST_CASE("conjugate gradient minimizes a 5-variable quadratic in 5 steps") {
  const Matrix a = Matrix::from_rows({{6, 1, 0, 0.5, 0},
                                      {1, 5, 1, 0, 0.2},
                                      {0, 1, 4, 1, 0},
                                      {0.5, 0, 1, 3, 0.3},
                                      {0, 0.2, 0, 0.3, 2}});
  const Vector b{1, -2, 3, 0.5, -1};
  const Vector exact = oracle::gauss_solve(a, b);
  Vector w(5, 0.0);
  CgMemory mem;
  for (int it = 0; it < 5; ++it) {
    Vector g = b;
    const Vector aw = multiply(a, w);
    for (std::size_t i = 0; i < 5; ++i) g[i] -= aw[i];
    const Vector& p = cg_update_direction(mem, g);
    const double z = cg_step_length(g, p, dot(p, multiply(a, p)));
    for (std::size_t i = 0; i < 5; ++i) w[i] += z * p[i];
  }
  CHECK(oracle::max_abs_diff(w, exact) < 1e-8);
}

TEST_CASE("every trainer keeps last_error current and charges its formula") {
  const Dataset d = matinv_data(200);
  const Mlp init = init_net_control(5, d, 3);
  const auto n = static_cast<std::int64_t>(d.n_inputs);
  const std::int64_t nv = 200;
  const std::int64_t expected[] = {mult_owo_bp(n, 5, 4, nv), mult_owo_molf(n, 5, 4, nv),
                                   mult_owo_newton(n, 5, 4, nv), 0, mult_lm(n, 5, 4, nv),
                                   mult_cg(n, 5, 4, nv)};
  const Algorithm algs[] = {Algorithm::owo_bp, Algorithm::owo_molf, Algorithm::owo_newton,
                            Algorithm::amolf, Algorithm::lm, Algorithm::cg};
  for (int a = 0; a < 6; ++a) {
    auto t = make_trainer(algs[a], init, d);
    CHECK(t->algorithm() == algs[a]);
    CHECK(t->state().ledger.tag() == to_string(algs[a]));
    const double e0 = t->state().last_error;
    for (int it = 0; it < 8; ++it) {
      t->iterate();
      CHECK(std::abs(t->state().last_error - mse(t->state().mlp, d)) <= 1e-12);
    }
    CHECK(t->state().iteration == 8);
    CHECK(t->state().last_error < e0);
    const auto& per = t->state().ledger.per_iteration();
    REQUIRE(per.size() == 8);
    if (expected[a] != 0)
      for (auto v : per) CHECK(v == expected[a]);

    auto again = make_trainer(algs[a], init, d);
    for (int it = 0; it < 8; ++it) again->iterate();
    CHECK(again->state().mlp == t->state().mlp);
  }
}

TEST_CASE("all trainers start from the same solved output weights") {
  const Dataset d = matinv_data(100);
  const Mlp init = init_net_control(4, d, 8);
  const double e = make_trainer(Algorithm::owo_bp, init, d)->state().last_error;
  for (Algorithm a : {Algorithm::owo_molf, Algorithm::amolf, Algorithm::lm, Algorithm::cg})
    CHECK(make_trainer(a, init, d)->state().last_error == e);
}

TEST_CASE("OWO-BP leaves converged input weights alone") {
  // Targets produced by a network with solved output weights: zero gradient.
  const Dataset base = matinv_data(60);
  Mlp teacher = init_net_control(3, base, 2);
  optimize_output_weights(teacher, base);
  Dataset d = base;
  d.targets = forward(teacher, base).output;
  OwoBpTrainer t(teacher, d);
  t.iterate();
  CHECK(oracle::max_abs_diff(t.state().mlp.w.data(), teacher.w.data()) < 1e-9);
}

TEST_CASE("OWO-BP usually decreases the error on matrix inversion") {
  const Dataset d = normalize_zero_mean(gen_matrix_inversion(2000, 1)).first;
  OwoBpTrainer t(init_net_control(30, d, 1), d);
  int decreases = 0;
  double prev = t.state().last_error;
  for (int it = 0; it < 30; ++it) {
    t.iterate();
    if (t.state().last_error < prev) ++decreases;
    prev = t.state().last_error;
  }
  CHECK(decreases >= 25);
}

TEST_CASE("OWO-MOLF on matrix inversion") {
  const Dataset d = normalize_zero_mean(gen_matrix_inversion(2000, 1)).first;
  OwoMolfTrainer t(init_net_control(30, d, 1), d);
  for (int it = 0; it < 100; ++it) t.iterate();
  CHECK(t.state().last_error <= 0.02);
  CHECK(t.last_learning_factors().size() == 30);
}

TEST_CASE("AMOLF pinned to one group follows OWO-MOLF") {
  const Dataset d = matinv_data(300);
  const Mlp init = init_net_control(6, d, 5);
  OwoMolfTrainer molf(init, d);
  TrainerOptions o;
  o.fixed_groups = 1;
  AmolfTrainer amolf(init, d, o);
  for (int it = 0; it < 20; ++it) {
    molf.iterate();
    amolf.iterate();
    CHECK(std::abs(molf.state().last_error - amolf.state().last_error) <= 1e-12);
    CHECK(oracle::max_abs_diff(molf.state().mlp.w.data(), amolf.state().mlp.w.data()) <= 1e-12);
  }
  CHECK_THROWS(AmolfTrainer(init, d, TrainerOptions{50, 0}));
}

TEST_CASE("AMOLF bookkeeping") {
  const Dataset d = matinv_data(300);
  TrainerOptions o;
  o.search_period = 10;
  AmolfTrainer t(init_net_control(6, d, 9), d, o);
  for (int it = 0; it < 25; ++it) t.iterate();
  const AmolfState& s = t.amolf_state();
  REQUIRE(s.epm_history.size() == 25);
  const auto n = static_cast<std::int64_t>(d.n_inputs);
  for (std::size_t i = 0; i < 25; ++i) {
    const EpmRecord& r = s.epm_history[i];
    CHECK(r.iteration == i + 1);
    CHECK(s.searched[i] == (i % 10 == 0));
    CHECK(s.group_history[i] >= 1);
    CHECK(s.group_history[i] <= d.n_inputs);
    CHECK(r.multiplies == mult_amolf(n, 6, 4, 300, static_cast<std::int64_t>(s.group_history[i])));
    CHECK(r.epm == (r.error_before - r.error_after) / static_cast<double>(r.multiplies));
    if (i > 0) CHECK(r.error_before == s.epm_history[i - 1].error_after);
    const MultCount surcharge = s.searched[i] ? mult_group_search(n, 6, 4, 300, n) : 0;
    CHECK(t.state().ledger.per_iteration()[i] == r.multiplies + surcharge);
  }
  // Between searches Ng follows the adaptation rule.
  for (std::size_t i = 2; i < 25; ++i) {
    if (s.searched[i]) continue;
    const std::size_t expect = adapt_group_count(s.group_history[i - 1], s.epm_history[i - 2].epm,
                                                 s.epm_history[i - 1].epm, d.n_inputs);
    CHECK(s.group_history[i] == expect);
  }
}

TEST_CASE("LM adjusts its damping") {
  const Dataset d = matinv_data(150);
  LmTrainer t(init_net_control(4, d, 2), d);
  const double lambda0 = t.lambda();
  t.iterate();
  CHECK_FALSE(t.stalled());
  CHECK(t.lambda() < lambda0 * 10.0);

  // With a zero-error start every attempt fails and the weights stay put.
  Dataset exact = d;
  exact.targets = Matrix(d.n_patterns(), d.n_outputs);
  const Mlp teacher(d.n_inputs, 3, d.n_outputs);
  TrainerOptions o;
  o.lm_max_attempts = 3;
  LmTrainer stuck(teacher, exact, o);
  const Mlp before = stuck.state().mlp;
  stuck.iterate();
  CHECK(stuck.stalled());
  CHECK(stuck.state().mlp == before);
  CHECK(stuck.lambda() == doctest::Approx(1e-2 * 1000));
}

TEST_CASE("CG trainer starts along the gradient") {
  const Dataset d = matinv_data(100);
  CgTrainer t(init_net_control(3, d, 6), d);
  const ForwardTrace tr = forward(t.state().mlp, d);
  const Vector g = flatten_all(backprop(t.state().mlp, d, tr));
  t.iterate();
  CHECK(t.memory().direction == g);
  CHECK(t.memory().beta == 0.0);
  t.iterate();
  CHECK(t.memory().beta > 0.0);
}
