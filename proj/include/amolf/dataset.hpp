#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "amolf/linalg.hpp"

namespace amolf {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training patterns. Each input row is augmented with a trailing constant 1
/// (the threshold input), so inputs has n_inputs + 1 columns.
struct Dataset {
  std::size_t n_inputs = 0;
  std::size_t n_outputs = 0;
  Matrix inputs;   // Nv x (N+1)
  Matrix targets;  // Nv x M

  std::size_t n_patterns() const { return inputs.rows(); }

  // Builds a dataset from raw (non-augmented) inputs.
  static Dataset from_raw(const Matrix& raw_inputs, const Matrix& targets);

  Dataset subset(std::span<const std::size_t> patterns) const;
};

struct NormalizationStats {
  Vector means;  // one per non-bias input
};

/// Reads a whitespace-separated pattern file: one pattern per line, N inputs
/// followed by M targets. Blank lines are ignored.
Dataset load_tra(const std::filesystem::path& path, std::size_t n_inputs, std::size_t n_outputs);
void save_tra(const Dataset& d, const std::filesystem::path& path);

std::pair<Dataset, NormalizationStats> normalize_zero_mean(const Dataset& d);
Dataset apply_normalization(const Dataset& d, const NormalizationStats& stats);
Dataset denormalize(const Dataset& d, const NormalizationStats& stats);

// Row-major inverse of the row-major 2x2 matrix m.
std::array<double, 4> inverse_2x2(const std::array<double, 4>& m);

inline constexpr double kMatInvMinDet = 0.3;
inline constexpr double kMatInvMaxDet = 2.0;

/// Synthetic 2x2 matrix-inversion data: 4 inputs uniform on [0,1] forming a
/// row-major matrix whose determinant lies in [0.3, 2] (rejection sampled),
/// and 4 targets holding its row-major inverse.
Dataset gen_matrix_inversion(std::size_t n_patterns, std::uint64_t seed);

/// Fold assignment for k-fold validation. In round r (0-based), fold r is the
/// test fold and fold (r+1) mod k the validation fold; the rest train.
struct FoldPlan {
  std::size_t k = 0;
  std::vector<std::size_t> assignment;  // fold (0-based) of each pattern

  std::size_t test_fold(std::size_t round) const { return round; }
  std::size_t validation_fold(std::size_t round) const { return (round + 1) % k; }

  std::vector<std::size_t> fold_patterns(std::size_t fold) const;
  std::vector<std::size_t> training_patterns(std::size_t round) const;
  std::vector<std::size_t> validation_patterns(std::size_t round) const {
    return fold_patterns(validation_fold(round));
  }
  std::vector<std::size_t> test_patterns(std::size_t round) const {
    return fold_patterns(test_fold(round));
  }
};

FoldPlan kfold_split(std::size_t n_patterns, std::size_t k, std::uint64_t seed);
inline FoldPlan kfold_split(const Dataset& d, std::size_t k, std::uint64_t seed) {
  return kfold_split(d.n_patterns(), k, seed);
}

}  // namespace amolf
