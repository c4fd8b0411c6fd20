#include "amolf/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace amolf {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw std::invalid_argument("Matrix::from_rows: ragged rows");
    std::copy(row.begin(), row.end(), m.row(i++).begin());
  }
  return m;
}

Matrix Matrix::column(std::span<const double> v) {
  Matrix m(v.size(), 1);
  std::copy(v.begin(), v.end(), m.data().begin());
  return m;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("multiply: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out[j] += aik * brow[j];
    }
  }
  return c;
}

Vector multiply(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw std::invalid_argument("multiply: vector length differs");
  Vector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
  return y;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

namespace {

void validate(const Matrix& a, const Matrix& b) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("solve_sym: matrix is " + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + ", not square");
  if (b.rows() != a.rows())
    throw std::invalid_argument("solve_sym: right-hand side has " + std::to_string(b.rows()) +
                                " rows, expected " + std::to_string(a.rows()));
  if (!all_finite(a.data()) || !all_finite(b.data()))
    throw std::invalid_argument("solve_sym: non-finite input");
  const double scale = max_abs(a.data());
  const std::size_t n = a.rows();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(a(i, j) - a(j, i)) > kSymmetryTolerance * scale)
        throw std::invalid_argument("solve_sym: matrix is not symmetric at (" +
                                    std::to_string(i) + "," + std::to_string(j) + ")");
}

// LDL^T with zero-pivot skipping. Only the lower triangle of a is read.
struct Factorization {
  Matrix lower;  // unit lower triangular, columns of skipped pivots are zero
  Vector pivots;
  std::vector<bool> skipped;
};

Factorization factorize(const Matrix& a, double shift) {
  const std::size_t n = a.rows();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(a(i, i) + shift));
  const double tol = kPivotTolerance * max_diag;

  Factorization f{Matrix(n, n), Vector(n, 0.0), std::vector<bool>(n, false)};
  Matrix& l = f.lower;
  // ld(i,k) = L(i,k) * D(k), kept to avoid recomputing the product.
  Matrix ld(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j) + shift;
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * ld(j, k);
    if (!(std::abs(d) >= tol) || max_diag == 0.0) {
      f.skipped[j] = true;
      continue;
    }
    f.pivots[j] = d;
    l(j, j) = 1.0;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * ld(j, k);
      l(i, j) = s / d;
      ld(i, j) = s;
    }
  }
  return f;
}

Matrix substitute(const Factorization& f, const Matrix& b) {
  const std::size_t n = b.rows();
  const std::size_t m = b.cols();
  Matrix x = b;
  // L y = b, restricted to kept coordinates.
  for (std::size_t i = 0; i < n; ++i) {
    if (f.skipped[i]) continue;
    for (std::size_t k = 0; k < i; ++k) {
      if (f.skipped[k]) continue;
      const double lik = f.lower(i, k);
      if (lik == 0.0) continue;
      for (std::size_t c = 0; c < m; ++c) x(i, c) -= lik * x(k, c);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < m; ++c) x(i, c) = f.skipped[i] ? 0.0 : x(i, c) / f.pivots[i];
  }
  // L^T x = y
  for (std::size_t ii = n; ii-- > 0;) {
    if (f.skipped[ii]) continue;
    for (std::size_t k = ii + 1; k < n; ++k) {
      if (f.skipped[k]) continue;
      const double lki = f.lower(k, ii);
      if (lki == 0.0) continue;
      for (std::size_t c = 0; c < m; ++c) x(ii, c) -= lki * x(k, c);
    }
  }
  return x;
}

}  // namespace

SolveReport<Matrix> solve_sym(const Matrix& a, const Matrix& b, SolveOptions options) {
  validate(a, b);
  if (options.ridge < 0.0) throw std::invalid_argument("solve_sym: negative ridge");

  SolveReport<Matrix> report;
  Factorization f = factorize(a, 0.0);
  for (std::size_t i = 0; i < f.skipped.size(); ++i)
    if (f.skipped[i]) report.skipped.push_back(i);

  if (!report.skipped.empty()) {
    report.rank_deficient = true;
    if (options.ridge > 0.0) {
      f = factorize(a, options.ridge);
      report.regularization_used = options.ridge;
      report.skipped.clear();
      for (std::size_t i = 0; i < f.skipped.size(); ++i)
        if (f.skipped[i]) report.skipped.push_back(i);
    }
  }
  report.solution = substitute(f, b);
  return report;
}

SolveReport<Vector> solve_sym(const Matrix& a, std::span<const double> b, SolveOptions options) {
  auto r = solve_sym(a, Matrix::column(b), options);
  const auto data = r.solution.data();
  return {Vector(data.begin(), data.end()), r.rank_deficient, r.regularization_used,
          std::move(r.skipped)};
}

}  // namespace amolf
