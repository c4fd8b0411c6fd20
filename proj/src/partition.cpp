#include "amolf/partition.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace amolf {

std::vector<std::size_t> equal_group_sizes(std::size_t total, std::size_t groups) {
  if (groups == 0 || groups > total)
    throw std::invalid_argument("group count " + std::to_string(groups) + " outside [1, " +
                                std::to_string(total) + "]");
  std::vector<std::size_t> sizes(groups, total / groups);
  for (std::size_t c = 0; c < total % groups; ++c) ++sizes[c];
  return sizes;
}

namespace {

GroupPartition make_partition(std::vector<std::vector<std::size_t>> order, std::size_t n_aug,
                              std::size_t n_groups) {
  GroupPartition p;
  p.n_hidden = order.size();
  p.n_aug = n_aug;
  p.n_groups = n_groups;
  p.order = std::move(order);
  p.sizes = equal_group_sizes(n_aug, n_groups);
  p.boundaries.assign(n_groups + 1, 0);
  std::partial_sum(p.sizes.begin(), p.sizes.end(), p.boundaries.begin() + 1);
  p.group.assign(p.n_hidden * n_aug, 0);
  for (std::size_t k = 0; k < p.n_hidden; ++k)
    for (std::size_t c = 0; c < n_groups; ++c)
      for (std::size_t n : p.members(k, c)) p.group[k * n_aug + n] = c;
  return p;
}

}  // namespace

GroupPartition build_partition(const Matrix& curvature, std::size_t n_groups) {
  const std::size_t n_aug = curvature.cols();
  std::vector<std::vector<std::size_t>> order(curvature.rows());
  for (std::size_t k = 0; k < curvature.rows(); ++k) {
    auto& lk = order[k];
    lk.resize(n_aug);
    std::iota(lk.begin(), lk.end(), std::size_t{0});
    auto row = curvature.row(k);
    std::stable_sort(lk.begin(), lk.end(),
                     [&](std::size_t a, std::size_t b) { return row[a] > row[b]; });
  }
  return make_partition(std::move(order), n_aug, n_groups);
}

GroupPartition single_group_partition(std::size_t n_hidden, std::size_t n_aug) {
  std::vector<std::vector<std::size_t>> order(n_hidden, std::vector<std::size_t>(n_aug));
  for (auto& lk : order) std::iota(lk.begin(), lk.end(), std::size_t{0});
  return make_partition(std::move(order), n_aug, 1);
}

bool refines(const GroupPartition& fine, const GroupPartition& coarse) {
  if (fine.n_hidden != coarse.n_hidden || fine.n_aug != coarse.n_aug) return false;
  for (std::size_t k = 0; k < fine.n_hidden; ++k)
    for (std::size_t c = 0; c < fine.n_groups; ++c) {
      auto members = fine.members(k, c);
      const std::size_t target = coarse.group_of(k, members.front());
      for (std::size_t n : members)
        if (coarse.group_of(k, n) != target) return false;
    }
  return true;
}

}  // namespace amolf
