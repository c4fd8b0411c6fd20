#include "amolf/owo.hpp"

namespace amolf {

Correlations accumulate_correlations(const Dataset& d, const ForwardTrace& trace) {
  const std::size_t n1 = d.inputs.cols();
  const std::size_t nh = trace.activ.cols();
  const std::size_t nu = n1 + nh;
  const std::size_t m = d.n_outputs;
  Correlations c{Matrix(nu, nu), Matrix(nu, m)};
  Vector basis(nu);
  for (std::size_t p = 0; p < d.n_patterns(); ++p) {
    auto x = d.inputs.row(p);
    auto o = trace.activ.row(p);
    std::copy(x.begin(), x.end(), basis.begin());
    std::copy(o.begin(), o.end(), basis.begin() + static_cast<std::ptrdiff_t>(n1));
    auto t = d.targets.row(p);
    for (std::size_t a = 0; a < nu; ++a) {
      const double xa = basis[a];
      auto rrow = c.r.row(a);
      for (std::size_t b = a; b < nu; ++b) rrow[b] += xa * basis[b];
      auto crow = c.c.row(a);
      for (std::size_t i = 0; i < m; ++i) crow[i] += xa * t[i];
    }
  }
  const double inv = 1.0 / static_cast<double>(d.n_patterns());
  for (std::size_t a = 0; a < nu; ++a) {
    for (std::size_t b = a; b < nu; ++b) {
      c.r(a, b) *= inv;
      c.r(b, a) = c.r(a, b);
    }
    for (std::size_t i = 0; i < m; ++i) c.c(a, i) *= inv;
  }
  return c;
}

OutputWeights solve_output_weights(const Correlations& c) {
  auto report = solve_sym(c.r, c.c);
  return {transpose(report.solution), report.rank_deficient};
}

void install_output_weights(Mlp& m, const Matrix& wo) {
  const std::size_t n1 = m.n_inputs + 1;
  for (std::size_t i = 0; i < m.n_outputs; ++i) {
    for (std::size_t n = 0; n < n1; ++n) m.woi(i, n) = wo(i, n);
    for (std::size_t k = 0; k < m.n_hidden; ++k) m.woh(i, k) = wo(i, n1 + k);
  }
}

Matrix stack_output_weights(const Mlp& m) {
  const std::size_t n1 = m.n_inputs + 1;
  Matrix wo(m.n_outputs, m.n_basis());
  for (std::size_t i = 0; i < m.n_outputs; ++i) {
    for (std::size_t n = 0; n < n1; ++n) wo(i, n) = m.woi(i, n);
    for (std::size_t k = 0; k < m.n_hidden; ++k) wo(i, n1 + k) = m.woh(i, k);
  }
  return wo;
}

bool optimize_output_weights(Mlp& m, const Dataset& d) {
  const auto solved = solve_output_weights(accumulate_correlations(d, forward(m, d)));
  install_output_weights(m, solved.wo);
  return solved.rank_deficient;
}

}  // namespace amolf
