#pragma once

// Reference implementations used only by the tests. They are written from the
// defining formulas with plain loops and share no code with the library
// beyond the data containers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "amolf/dataset.hpp"
#include "amolf/linalg.hpp"
#include "amolf/network.hpp"
#include "amolf/partition.hpp"

namespace oracle {

using amolf::Activation;
using amolf::Dataset;
using amolf::Matrix;
using amolf::Mlp;
using amolf::Vector;

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c, double lo = -1.0,
                            double hi = 1.0) {
  Matrix m(r, c);
  for (double& v : m.data()) v = uniform(rng, lo, hi);
  return m;
}

inline Dataset random_dataset(std::uint64_t seed, std::size_t n, std::size_t m, std::size_t nv) {
  std::mt19937_64 rng(seed);
  return Dataset::from_raw(random_matrix(rng, nv, n), random_matrix(rng, nv, m));
}

// Network with every weight random and non-zero.
inline Mlp random_mlp(std::uint64_t seed, std::size_t n, std::size_t nh, std::size_t m,
                      Activation act = Activation::sigmoid, double scale = 1.0) {
  std::mt19937_64 rng(seed * 7919 + 17);
  Mlp net(n, nh, m, act);
  net.w = random_matrix(rng, nh, n + 1, -scale, scale);
  net.woh = random_matrix(rng, m, nh, -scale, scale);
  net.woi = random_matrix(rng, m, n + 1, -scale, scale);
  return net;
}

inline double f(Activation a, double x) {
  switch (a) {
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::tanh: return std::tanh(x);
    case Activation::linear: return x;
  }
  return 0.0;
}

inline double fprime(Activation a, double x) {
  switch (a) {
    case Activation::sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-x));
      return s * (1.0 - s);
    }
    case Activation::tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::linear: return 1.0;
  }
  return 0.0;
}

// Augmented input n of pattern p (bias last).
inline double x(const Dataset& d, std::size_t p, std::size_t n) { return d.inputs(p, n); }

inline double net_value(const Mlp& m, const Dataset& d, std::size_t p, std::size_t k) {
  double s = 0.0;
  for (std::size_t n = 0; n <= m.n_inputs; ++n) s += m.w(k, n) * x(d, p, n);
  return s;
}

inline std::vector<double> outputs(const Mlp& m, const Dataset& d, std::size_t p) {
  std::vector<double> y(m.n_outputs, 0.0);
  for (std::size_t i = 0; i < m.n_outputs; ++i) {
    for (std::size_t n = 0; n <= m.n_inputs; ++n) y[i] += m.woi(i, n) * x(d, p, n);
    for (std::size_t k = 0; k < m.n_hidden; ++k)
      y[i] += m.woh(i, k) * f(m.activation, net_value(m, d, p, k));
  }
  return y;
}

inline double error(const Mlp& m, const Dataset& d) {
  double e = 0.0;
  for (std::size_t p = 0; p < d.n_patterns(); ++p) {
    const auto y = outputs(m, d, p);
    for (std::size_t i = 0; i < m.n_outputs; ++i) {
      const double r = d.targets(p, i) - y[i];
      e += r * r;
    }
  }
  return e / static_cast<double>(d.n_patterns());
}

// Gaussian elimination with partial pivoting on a copy.
inline Vector gauss_solve(Matrix a, Vector b) {
  const std::size_t n = a.rows();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    if (a(piv, c) == 0.0) throw std::runtime_error("gauss_solve: singular");
    if (piv != c) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(c, j), a(piv, j));
      std::swap(b[c], b[piv]);
    }
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a(r, c) / a(c, c);
      for (std::size_t j = c; j < n; ++j) a(r, j) -= f * a(c, j);
      b[r] -= f * b[c];
    }
  }
  Vector out(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * out[j];
    out[i] = s / a(i, i);
  }
  return out;
}

// Central difference of fn at 0 along a scalar parameter.
inline double central_diff(const std::function<double(double)>& fn, double h) {
  return (fn(h) - fn(-h)) / (2.0 * h);
}

inline double second_diff(const std::function<double(double)>& fn, double h) {
  return (fn(h) - 2.0 * fn(0.0) + fn(-h)) / (h * h);
}

/// Learning-factor system for an arbitrary grouping, from per-output
/// Jacobians: J_p(i, (k,c)) = woh(i,k) f'(net_p(k)) sum_{n in c} x_p(n) g(k,n).
/// Returns (h, g) with h = (2/Nv) sum_p J^T J and g(k,c) = sum_{n in c} g(k,n)^2.
inline std::pair<Matrix, Vector> grouped_system(const Mlp& m, const Dataset& d, const Matrix& g,
                                                const amolf::GroupPartition& part) {
  const std::size_t ng = part.n_groups;
  const std::size_t l = m.n_hidden * ng;
  Matrix h(l, l);
  Vector rhs(l, 0.0);
  for (std::size_t k = 0; k < m.n_hidden; ++k)
    for (std::size_t c = 0; c < ng; ++c)
      for (std::size_t n : part.members(k, c)) rhs[k * ng + c] += g(k, n) * g(k, n);

  for (std::size_t p = 0; p < d.n_patterns(); ++p) {
    Matrix jac(m.n_outputs, l);
    for (std::size_t k = 0; k < m.n_hidden; ++k) {
      const double slope = fprime(m.activation, net_value(m, d, p, k));
      for (std::size_t c = 0; c < ng; ++c) {
        double s = 0.0;
        for (std::size_t n : part.members(k, c)) s += x(d, p, n) * g(k, n);
        for (std::size_t i = 0; i < m.n_outputs; ++i) jac(i, k * ng + c) = m.woh(i, k) * slope * s;
      }
    }
    for (std::size_t a = 0; a < l; ++a)
      for (std::size_t b = 0; b < l; ++b)
        for (std::size_t i = 0; i < m.n_outputs; ++i) h(a, b) += jac(i, a) * jac(i, b);
  }
  const double scale = 2.0 / static_cast<double>(d.n_patterns());
  for (double& v : h.data()) v *= scale;
  return {h, rhs};
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// max |a - b| / max(|b|, tiny)
inline double rel_diff(std::span<const double> a, std::span<const double> b) {
  double scale = 0.0;
  for (double v : b) scale = std::max(scale, std::abs(v));
  return max_abs_diff(a, b) / std::max(scale, 1e-300);
}

// Random symmetric positive semi-definite matrix A^T A / cols with the given rank.
inline Matrix random_psd(std::mt19937_64& rng, std::size_t n, std::size_t rank) {
  const Matrix a = random_matrix(rng, rank, n);
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < rank; ++r) s += a(r, i) * a(r, j);
      out(i, j) = s / static_cast<double>(rank);
    }
  return out;
}

// Quadratic model change -g^T delta + 0.5 delta^T H delta.
inline double quadratic_change(const Matrix& h, std::span<const double> g,
                               std::span<const double> delta) {
  double lin = 0.0, quad = 0.0;
  for (std::size_t a = 0; a < g.size(); ++a) {
    lin += g[a] * delta[a];
    double s = 0.0;
    for (std::size_t b = 0; b < g.size(); ++b) s += h(a, b) * delta[b];
    quad += delta[a] * s;
  }
  return -lin + 0.5 * quad;
}

}  // namespace oracle
