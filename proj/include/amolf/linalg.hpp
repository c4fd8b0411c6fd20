#pragma once

// Dense row-major storage and the symmetric solver used for every Newton-type
// system in the library (output weights, input-weight Hessians, compressed
// learning-factor Hessians, Levenberg-Marquardt).

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace amolf {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  // Column matrix holding v.
  static Matrix column(std::span<const double> v);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix transpose(const Matrix& a);
Matrix multiply(const Matrix& a, const Matrix& b);
Vector multiply(const Matrix& a, std::span<const double> x);
double dot(std::span<const double> a, std::span<const double> b);
double max_abs(std::span<const double> v);
bool all_finite(std::span<const double> v);

// Relative pivot threshold: a pivot is treated as zero when its magnitude is
// below this fraction of the largest diagonal entry.
inline constexpr double kPivotTolerance = 1e-10;
inline constexpr double kSymmetryTolerance = 1e-9;

struct SolveOptions {
  // When > 0, a singular system is re-solved as (A + ridge*I) X = B instead of
  // skipping pivots.
  double ridge = 0.0;
};

template <typename Solution>
struct SolveReport {
  Solution solution;
  bool rank_deficient = false;
  double regularization_used = 0.0;
  // Indices whose pivots were skipped; their solution entries are exactly 0.
  std::vector<std::size_t> skipped;
};

/// Solves A X = B for symmetric positive semi-definite A.
///
/// The factorization is an LDL^T elimination in natural order, equivalent to
/// Gram-Schmidt orthogonal least squares on the basis that generated A. A
/// pivot whose magnitude falls below kPivotTolerance * max(diag A) marks a
/// linearly dependent coordinate: it is skipped and its unknowns are set to 0.
///
/// Throws std::invalid_argument on dimension mismatch, an asymmetric A or
/// non-finite input.
SolveReport<Matrix> solve_sym(const Matrix& a, const Matrix& b, SolveOptions options = {});
SolveReport<Vector> solve_sym(const Matrix& a, std::span<const double> b,
                              SolveOptions options = {});

}  // namespace amolf
