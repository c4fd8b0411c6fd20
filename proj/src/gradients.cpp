#include "amolf/gradients.hpp"

#include <stdexcept>

#include "amolf/owo.hpp"

namespace amolf {

GradientBundle backprop(const Mlp& m, const Dataset& d, const ForwardTrace& trace) {
  const std::size_t nh = m.n_hidden;
  const std::size_t n1 = m.n_inputs + 1;
  const std::size_t mo = m.n_outputs;
  GradientBundle gb{Matrix(nh, n1), Matrix(mo, nh), Matrix(mo, n1)};
  Vector delta_out(mo);
  Vector delta_hidden(nh);
  for (std::size_t p = 0; p < d.n_patterns(); ++p) {
    auto x = d.inputs.row(p);
    auto o = trace.activ.row(p);
    for (std::size_t i = 0; i < mo; ++i) delta_out[i] = 2.0 * (d.targets(p, i) - trace.output(p, i));
    for (std::size_t k = 0; k < nh; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < mo; ++i) s += delta_out[i] * m.woh(i, k);
      delta_hidden[k] = activation_slope(m.activation, o[k]) * s;
    }
    for (std::size_t i = 0; i < mo; ++i) {
      auto goh = gb.goh.row(i);
      for (std::size_t k = 0; k < nh; ++k) goh[k] += delta_out[i] * o[k];
      auto goi = gb.goi.row(i);
      for (std::size_t n = 0; n < n1; ++n) goi[n] += delta_out[i] * x[n];
    }
    for (std::size_t k = 0; k < nh; ++k) {
      auto g = gb.g.row(k);
      for (std::size_t n = 0; n < n1; ++n) g[n] += delta_hidden[k] * x[n];
    }
  }
  const double inv = 1.0 / static_cast<double>(d.n_patterns());
  for (Matrix* a : {&gb.g, &gb.goh, &gb.goi})
    for (double& v : a->data()) v *= inv;
  return gb;
}

Vector flatten_input_weights(const Matrix& w) {
  return Vector(w.data().begin(), w.data().end());
}

Matrix unflatten_input_weights(std::span<const double> v, std::size_t n_hidden,
                               std::size_t stride) {
  if (v.size() != n_hidden * stride) throw std::invalid_argument("unflatten: length mismatch");
  Matrix w(n_hidden, stride);
  std::copy(v.begin(), v.end(), w.data().begin());
  return w;
}

namespace {

// Q(k,j) = sum_i woh(i,k) woh(i,j)
Matrix output_gram(const Mlp& m) {
  Matrix q(m.n_hidden, m.n_hidden);
  for (std::size_t k = 0; k < m.n_hidden; ++k)
    for (std::size_t j = 0; j < m.n_hidden; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < m.n_outputs; ++i) s += m.woh(i, k) * m.woh(i, j);
      q(k, j) = s;
    }
  return q;
}

// Per-pattern u(k,n) = f'(n_p(k)) x_p(n), the part of dy_p(i)/dw(k,n) that
// does not depend on the output i.
void fill_u(const Mlp& m, std::span<const double> x, std::span<const double> activ, Vector& u) {
  const std::size_t n1 = m.n_inputs + 1;
  for (std::size_t k = 0; k < m.n_hidden; ++k) {
    const double slope = activation_slope(m.activation, activ[k]);
    for (std::size_t n = 0; n < n1; ++n) u[k * n1 + n] = slope * x[n];
  }
}

// (2/Nv) (sum_p u u^T) scaled by Q(k_a, k_b); the Gauss-Newton input Hessian.
Matrix input_hessian_block(const Mlp& m, const Dataset& d, const ForwardTrace& trace) {
  const std::size_t n1 = m.n_inputs + 1;
  const std::size_t niw = m.n_input_weights();
  Matrix s(niw, niw);
  Vector u(niw);
  for (std::size_t p = 0; p < d.n_patterns(); ++p) {
    fill_u(m, d.inputs.row(p), trace.activ.row(p), u);
    for (std::size_t a = 0; a < niw; ++a) {
      const double ua = u[a];
      if (ua == 0.0) continue;
      auto srow = s.row(a);
      for (std::size_t b = a; b < niw; ++b) srow[b] += ua * u[b];
    }
  }
  const Matrix q = output_gram(m);
  const double scale = 2.0 / static_cast<double>(d.n_patterns());
  for (std::size_t a = 0; a < niw; ++a) {
    for (std::size_t b = a; b < niw; ++b) {
      s(a, b) *= scale * q(a / n1, b / n1);
      s(b, a) = s(a, b);
    }
  }
  return s;
}

}  // namespace

HessianBundle gauss_newton_input_hessian(const Mlp& m, const Dataset& d, const ForwardTrace& trace,
                                         const GradientBundle& grad) {
  return {input_hessian_block(m, d, trace), flatten_input_weights(grad.g),
          InputWeightIndex{m.n_hidden, m.n_inputs + 1}};
}

HessianBundle gauss_newton_input_hessian(const Mlp& m, const Dataset& d,
                                         const ForwardTrace& trace) {
  return gauss_newton_input_hessian(m, d, trace, backprop(m, d, trace));
}

OutputHessian output_hessian_gradient(const Mlp& m, const Dataset& d, const ForwardTrace& trace) {
  const Correlations c = accumulate_correlations(d, trace);
  const Matrix wo = stack_output_weights(m);
  const std::size_t nu = m.n_basis();
  const std::size_t mo = m.n_outputs;
  OutputHessian out{Matrix(mo * nu, mo * nu), Vector(mo * nu)};
  for (std::size_t i = 0; i < mo; ++i) {
    const std::size_t base = i * nu;
    for (std::size_t a = 0; a < nu; ++a) {
      for (std::size_t b = 0; b < nu; ++b) out.h(base + a, base + b) = 2.0 * c.r(a, b);
      out.g[base + a] = 2.0 * (c.c(a, i) - dot(c.r.row(a), wo.row(i)));
    }
  }
  return out;
}

Matrix curvature_map(const Mlp& m, const Dataset& d, const ForwardTrace& trace) {
  const std::size_t n1 = m.n_inputs + 1;
  Matrix hw(m.n_hidden, n1);
  for (std::size_t p = 0; p < d.n_patterns(); ++p) {
    auto x = d.inputs.row(p);
    for (std::size_t k = 0; k < m.n_hidden; ++k) {
      const double slope = activation_slope(m.activation, trace.activ(p, k));
      const double s2 = slope * slope;
      auto row = hw.row(k);
      for (std::size_t n = 0; n < n1; ++n) row[n] += s2 * x[n] * x[n];
    }
  }
  const double scale = 2.0 / static_cast<double>(d.n_patterns());
  for (std::size_t k = 0; k < m.n_hidden; ++k) {
    double wsq = 0.0;
    for (std::size_t i = 0; i < m.n_outputs; ++i) wsq += m.woh(i, k) * m.woh(i, k);
    for (double& v : hw.row(k)) v *= scale * wsq;
  }
  return hw;
}

Vector flatten_all(const Matrix& w, const Matrix& woh, const Matrix& woi) {
  Vector v;
  v.reserve(w.size() + woh.size() + woi.size());
  for (const Matrix* a : {&w, &woh, &woi}) v.insert(v.end(), a->data().begin(), a->data().end());
  return v;
}

Vector flatten_all(const GradientBundle& g) { return flatten_all(g.g, g.goh, g.goi); }
Vector flatten_all(const Mlp& m) { return flatten_all(m.w, m.woh, m.woi); }

void add_to_weights(Mlp& m, std::span<const double> delta, double scale) {
  if (delta.size() != m.w.size() + m.woh.size() + m.woi.size())
    throw std::invalid_argument("add_to_weights: length mismatch");
  std::size_t at = 0;
  for (Matrix* a : {&m.w, &m.woh, &m.woi})
    for (double& v : a->data()) v += scale * delta[at++];
}

FullHessian full_gauss_newton(const Mlp& m, const Dataset& d, const ForwardTrace& trace,
                              const GradientBundle& grad) {
  const std::size_t n1 = m.n_inputs + 1;
  const std::size_t nh = m.n_hidden;
  const std::size_t mo = m.n_outputs;
  const std::size_t nu = m.n_basis();
  const std::size_t niw = m.n_input_weights();
  const std::size_t nw = niw + mo * nh + mo * n1;

  // Position of output weight (i, basis j) within w.
  auto out_index = [&](std::size_t i, std::size_t j) {
    return j < n1 ? niw + mo * nh + i * n1 + j : niw + i * nh + (j - n1);
  };

  FullHessian full{Matrix(nw, nw), flatten_all(grad)};
  const Matrix hww = input_hessian_block(m, d, trace);
  for (std::size_t a = 0; a < niw; ++a)
    std::copy(hww.row(a).begin(), hww.row(a).end(), full.h.row(a).begin());

  // cross(a, j) = sum_p u_p(a) X_p(j)
  Matrix cross(niw, nu);
  Vector u(niw);
  for (std::size_t p = 0; p < d.n_patterns(); ++p) {
    auto x = d.inputs.row(p);
    auto o = trace.activ.row(p);
    fill_u(m, x, o, u);
    for (std::size_t a = 0; a < niw; ++a) {
      const double ua = u[a];
      if (ua == 0.0) continue;
      auto row = cross.row(a);
      for (std::size_t n = 0; n < n1; ++n) row[n] += ua * x[n];
      for (std::size_t k = 0; k < nh; ++k) row[n1 + k] += ua * o[k];
    }
  }
  const double scale = 2.0 / static_cast<double>(d.n_patterns());
  for (std::size_t a = 0; a < niw; ++a) {
    const std::size_t k = a / n1;
    for (std::size_t i = 0; i < mo; ++i) {
      const double wik = scale * m.woh(i, k);
      for (std::size_t j = 0; j < nu; ++j) {
        const double v = wik * cross(a, j);
        const std::size_t b = out_index(i, j);
        full.h(a, b) = v;
        full.h(b, a) = v;
      }
    }
  }

  const Correlations c = accumulate_correlations(d, trace);
  for (std::size_t i = 0; i < mo; ++i)
    for (std::size_t a = 0; a < nu; ++a)
      for (std::size_t b = 0; b < nu; ++b) full.h(out_index(i, a), out_index(i, b)) = 2.0 * c.r(a, b);
  return full;
}

double directional_curvature(const Mlp& m, const Dataset& d, const ForwardTrace& trace,
                             std::span<const double> direction) {
  const std::size_t n1 = m.n_inputs + 1;
  const std::size_t nh = m.n_hidden;
  const std::size_t mo = m.n_outputs;
  if (direction.size() != m.w.size() + m.woh.size() + m.woi.size())
    throw std::invalid_argument("directional_curvature: length mismatch");
  const auto pw = direction.subspan(0, nh * n1);
  const auto poh = direction.subspan(nh * n1, mo * nh);
  const auto poi = direction.subspan(nh * n1 + mo * nh, mo * n1);

  Vector dact(nh);
  double sum = 0.0;
  for (std::size_t p = 0; p < d.n_patterns(); ++p) {
    auto x = d.inputs.row(p);
    auto o = trace.activ.row(p);
    for (std::size_t k = 0; k < nh; ++k)
      dact[k] = activation_slope(m.activation, o[k]) * dot(pw.subspan(k * n1, n1), x);
    for (std::size_t i = 0; i < mo; ++i) {
      const double dy = dot(poi.subspan(i * n1, n1), x) + dot(poh.subspan(i * nh, nh), o) +
                        dot(m.woh.row(i), dact);
      sum += dy * dy;
    }
  }
  return 2.0 * sum / static_cast<double>(d.n_patterns());
}

double input_directional_curvature(const Mlp& m, const Dataset& d, const ForwardTrace& trace,
                                   const Matrix& direction) {
  const std::size_t nh = m.n_hidden;
  Vector dact(nh);
  double sum = 0.0;
  for (std::size_t p = 0; p < d.n_patterns(); ++p) {
    auto x = d.inputs.row(p);
    for (std::size_t k = 0; k < nh; ++k)
      dact[k] = activation_slope(m.activation, trace.activ(p, k)) * dot(direction.row(k), x);
    for (std::size_t i = 0; i < m.n_outputs; ++i) {
      const double dy = dot(m.woh.row(i), dact);
      sum += dy * dy;
    }
  }
  return 2.0 * sum / static_cast<double>(d.n_patterns());
}

}  // namespace amolf
