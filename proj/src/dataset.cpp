#include "amolf/dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "amolf/random.hpp"

namespace amolf {

Dataset Dataset::from_raw(const Matrix& raw_inputs, const Matrix& targets) {
  if (raw_inputs.rows() != targets.rows())
    throw DataError("inputs and targets have different pattern counts");
  if (raw_inputs.rows() == 0) throw DataError("no patterns");
  if (raw_inputs.cols() == 0 || targets.cols() == 0)
    throw DataError("need at least one input and one output");
  Dataset d;
  d.n_inputs = raw_inputs.cols();
  d.n_outputs = targets.cols();
  d.inputs = Matrix(raw_inputs.rows(), d.n_inputs + 1);
  for (std::size_t p = 0; p < raw_inputs.rows(); ++p) {
    auto src = raw_inputs.row(p);
    auto dst = d.inputs.row(p);
    std::copy(src.begin(), src.end(), dst.begin());
    dst[d.n_inputs] = 1.0;
  }
  d.targets = targets;
  return d;
}

Dataset Dataset::subset(std::span<const std::size_t> patterns) const {
  Dataset s;
  s.n_inputs = n_inputs;
  s.n_outputs = n_outputs;
  s.inputs = Matrix(patterns.size(), inputs.cols());
  s.targets = Matrix(patterns.size(), targets.cols());
  for (std::size_t i = 0; i < patterns.size(); ++i) {
    const std::size_t p = patterns[i];
    if (p >= n_patterns()) throw DataError("subset: pattern index out of range");
    std::copy(inputs.row(p).begin(), inputs.row(p).end(), s.inputs.row(i).begin());
    std::copy(targets.row(p).begin(), targets.row(p).end(), s.targets.row(i).begin());
  }
  return s;
}

namespace {

bool parse_number(std::string_view token, double& out) {
  // from_chars rejects a leading '+', which some writers emit.
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

}  // namespace

Dataset load_tra(const std::filesystem::path& path, std::size_t n_inputs, std::size_t n_outputs) {
  if (n_inputs == 0 || n_outputs == 0) throw DataError("need at least one input and one output");
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());

  const std::size_t width = n_inputs + n_outputs;
  std::vector<double> raw;
  std::size_t patterns = 0;
  std::size_t line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream tokens(line);
    std::string token;
    std::size_t count = 0;
    while (tokens >> token) {
      double v;
      if (!parse_number(token, v))
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed number '" +
                        token + "'");
      raw.push_back(v);
      ++count;
    }
    if (count == 0) continue;
    if (count != width)
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(width) + " columns, found " + std::to_string(count));
    ++patterns;
  }
  if (patterns == 0) throw DataError(path.string() + ": no patterns");

  Matrix x(patterns, n_inputs);
  Matrix t(patterns, n_outputs);
  for (std::size_t p = 0; p < patterns; ++p) {
    const double* row = raw.data() + p * width;
    std::copy(row, row + n_inputs, x.row(p).begin());
    std::copy(row + n_inputs, row + width, t.row(p).begin());
  }
  return Dataset::from_raw(x, t);
}

void save_tra(const Dataset& d, const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(std::fopen(path.string().c_str(), "w"),
                                                    &std::fclose);
  if (!f) throw DataError("cannot write " + path.string());
  for (std::size_t p = 0; p < d.n_patterns(); ++p) {
    for (std::size_t n = 0; n < d.n_inputs; ++n) std::fprintf(f.get(), "%.17g ", d.inputs(p, n));
    for (std::size_t i = 0; i < d.n_outputs; ++i)
      std::fprintf(f.get(), i + 1 == d.n_outputs ? "%.17g\n" : "%.17g ", d.targets(p, i));
  }
  if (std::ferror(f.get())) throw DataError("write failed: " + path.string());
}

std::pair<Dataset, NormalizationStats> normalize_zero_mean(const Dataset& d) {
  NormalizationStats stats{Vector(d.n_inputs, 0.0)};
  const double nv = static_cast<double>(d.n_patterns());
  for (std::size_t n = 0; n < d.n_inputs; ++n) {
    double s = 0.0;
    for (std::size_t p = 0; p < d.n_patterns(); ++p) s += d.inputs(p, n);
    stats.means[n] = s / nv;
  }
  Dataset out = apply_normalization(d, stats);
  // Second pass removes the rounding left by the first subtraction.
  for (std::size_t n = 0; n < d.n_inputs; ++n) {
    double s = 0.0;
    for (std::size_t p = 0; p < out.n_patterns(); ++p) s += out.inputs(p, n);
    const double residual = s / nv;
    for (std::size_t p = 0; p < out.n_patterns(); ++p) out.inputs(p, n) -= residual;
    stats.means[n] += residual;
  }
  return {std::move(out), std::move(stats)};
}

Dataset apply_normalization(const Dataset& d, const NormalizationStats& stats) {
  if (stats.means.size() != d.n_inputs) throw DataError("normalization stats do not match inputs");
  Dataset out = d;
  for (std::size_t p = 0; p < out.n_patterns(); ++p)
    for (std::size_t n = 0; n < d.n_inputs; ++n) out.inputs(p, n) -= stats.means[n];
  return out;
}

Dataset denormalize(const Dataset& d, const NormalizationStats& stats) {
  if (stats.means.size() != d.n_inputs) throw DataError("normalization stats do not match inputs");
  Dataset out = d;
  for (std::size_t p = 0; p < out.n_patterns(); ++p)
    for (std::size_t n = 0; n < d.n_inputs; ++n) out.inputs(p, n) += stats.means[n];
  return out;
}

std::array<double, 4> inverse_2x2(const std::array<double, 4>& m) {
  const double det = m[0] * m[3] - m[1] * m[2];
  if (det == 0.0) throw std::domain_error("inverse_2x2: singular matrix");
  return {m[3] / det, -m[1] / det, -m[2] / det, m[0] / det};
}

Dataset gen_matrix_inversion(std::size_t n_patterns, std::uint64_t seed) {
  if (n_patterns == 0) throw DataError("no patterns");
  Rng rng = make_rng(seed, RngStream::data);
  Matrix x(n_patterns, 4);
  Matrix t(n_patterns, 4);
  for (std::size_t p = 0; p < n_patterns; ++p) {
    std::array<double, 4> m;
    double det;
    do {
      for (double& v : m) v = uniform01(rng);
      det = m[0] * m[3] - m[1] * m[2];
    } while (det < kMatInvMinDet || det > kMatInvMaxDet);
    const auto inv = inverse_2x2(m);
    std::copy(m.begin(), m.end(), x.row(p).begin());
    std::copy(inv.begin(), inv.end(), t.row(p).begin());
  }
  return Dataset::from_raw(x, t);
}

std::vector<std::size_t> FoldPlan::fold_patterns(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < assignment.size(); ++p)
    if (assignment[p] == fold) out.push_back(p);
  return out;
}

std::vector<std::size_t> FoldPlan::training_patterns(std::size_t round) const {
  const std::size_t test = test_fold(round);
  const std::size_t val = validation_fold(round);
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < assignment.size(); ++p)
    if (assignment[p] != test && assignment[p] != val) out.push_back(p);
  return out;
}

FoldPlan kfold_split(std::size_t n_patterns, std::size_t k, std::uint64_t seed) {
  if (k < 3) throw DataError("k-fold needs k >= 3 (training, validation and test folds)");
  if (n_patterns < k) throw DataError("k-fold needs at least k patterns");
  std::vector<std::size_t> order(n_patterns);
  for (std::size_t i = 0; i < n_patterns; ++i) order[i] = i;
  Rng rng = make_rng(seed, RngStream::folds);
  for (std::size_t i = n_patterns; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);

  FoldPlan plan{k, std::vector<std::size_t>(n_patterns)};
  for (std::size_t i = 0; i < n_patterns; ++i) plan.assignment[order[i]] = i % k;
  return plan;
}

}  // namespace amolf
