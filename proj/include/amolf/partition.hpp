#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "amolf/linalg.hpp"

namespace amolf {

/// Splits the N+1 input weights of every hidden unit into Ng groups that
/// share one learning factor. Within a hidden unit, inputs are ordered by
/// descending curvature and cut into contiguous groups; groups never span
/// hidden units.
struct GroupPartition {
  std::size_t n_hidden = 0;
  std::size_t n_aug = 0;     // N+1
  std::size_t n_groups = 0;  // Ng
  // order[k] is the curvature-sorted input order of hidden unit k.
  std::vector<std::vector<std::size_t>> order;
  std::vector<std::size_t> sizes;       // Ng entries summing to N+1
  std::vector<std::size_t> boundaries;  // Ng+1 prefix sums of sizes
  std::vector<std::size_t> group;       // group of input n at hidden unit k, k*(N+1)+n

  std::size_t n_factors() const { return n_hidden * n_groups; }
  std::size_t factor_index(std::size_t k, std::size_t c) const { return k * n_groups + c; }
  std::size_t group_of(std::size_t k, std::size_t n) const { return group[k * n_aug + n]; }
  std::span<const std::size_t> members(std::size_t k, std::size_t c) const {
    return std::span<const std::size_t>(order[k]).subspan(boundaries[c], sizes[c]);
  }
};

// Equal split of total into groups, one extra element to each of the first
// (total mod groups) groups.
std::vector<std::size_t> equal_group_sizes(std::size_t total, std::size_t groups);

/// Orders each row of curvature (Nh x (N+1)) by descending value, ties by
/// ascending index, and cuts it into n_groups groups. Throws
/// std::invalid_argument unless 1 <= n_groups <= N+1.
GroupPartition build_partition(const Matrix& curvature, std::size_t n_groups);

// One group per hidden unit in natural input order.
GroupPartition single_group_partition(std::size_t n_hidden, std::size_t n_aug);

// True when every group of fine lies inside one group of coarse.
bool refines(const GroupPartition& fine, const GroupPartition& coarse);

}  // namespace amolf
