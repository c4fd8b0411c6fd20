#pragma once

// Negative gradients and Gauss-Newton curvature of the mean squared error.
//
// Every gradient here is a *negative* gradient (G = -dE/dW), so a step
// W + z*G with small z > 0 descends.

#include <cstddef>
#include <utility>

#include "amolf/dataset.hpp"
#include "amolf/linalg.hpp"
#include "amolf/network.hpp"

namespace amolf {

struct GradientBundle {
  Matrix g;    // Nh x (N+1)
  Matrix goh;  // M x Nh
  Matrix goi;  // M x (N+1)
};

GradientBundle backprop(const Mlp& m, const Dataset& d, const ForwardTrace& trace);

/// Input-weight index map: weight (k, n) lives at k*(N+1) + n.
struct InputWeightIndex {
  std::size_t n_hidden = 0;
  std::size_t stride = 0;  // N+1

  std::size_t size() const { return n_hidden * stride; }
  std::size_t flatten(std::size_t k, std::size_t n) const { return k * stride + n; }
  std::pair<std::size_t, std::size_t> unflatten(std::size_t idx) const {
    return {idx / stride, idx % stride};
  }
};

Vector flatten_input_weights(const Matrix& w);
Matrix unflatten_input_weights(std::span<const double> v, std::size_t n_hidden,
                               std::size_t stride);

/// Gauss-Newton input-weight Hessian and the flattened negative gradient.
struct HessianBundle {
  Matrix h;  // Niw x Niw
  Vector g;  // Niw
  InputWeightIndex index;
};

HessianBundle gauss_newton_input_hessian(const Mlp& m, const Dataset& d, const ForwardTrace& trace,
                                         const GradientBundle& grad);
// Convenience overload that runs backprop itself.
HessianBundle gauss_newton_input_hessian(const Mlp& m, const Dataset& d, const ForwardTrace& trace);

/// Hessian and negative gradient with respect to the stacked output weights
/// w_o = vec(Wo), Wo = [Woi : Woh], index i*Nu + j.
struct OutputHessian {
  Matrix h;  // M*Nu x M*Nu, block diagonal with M copies of 2R
  Vector g;  // M*Nu
};

OutputHessian output_hessian_gradient(const Mlp& m, const Dataset& d, const ForwardTrace& trace);

/// Diagonal curvature hw(k,n) = d2E/dw(k,n)^2 of the Gauss-Newton model.
Matrix curvature_map(const Mlp& m, const Dataset& d, const ForwardTrace& trace);

/// Full-network Gauss-Newton system over w = vec(W, Woh, Woi), each block
/// row-major. Size Nw = (N+1)Nh + M*Nh + M*(N+1).
struct FullHessian {
  Matrix h;
  Vector g;
};

FullHessian full_gauss_newton(const Mlp& m, const Dataset& d, const ForwardTrace& trace,
                              const GradientBundle& grad);

Vector flatten_all(const Matrix& w, const Matrix& woh, const Matrix& woi);
Vector flatten_all(const GradientBundle& g);
Vector flatten_all(const Mlp& m);
// Adds scale * delta (ordered as flatten_all) to every weight of m.
void add_to_weights(Mlp& m, std::span<const double> delta, double scale = 1.0);

/// Gauss-Newton second derivative of E along a whole-network direction:
/// (2/Nv) sum_p sum_i (dy_p(i)/dstep)^2, i.e. p^T H' p without forming H'.
double directional_curvature(const Mlp& m, const Dataset& d, const ForwardTrace& trace,
                             std::span<const double> direction);

/// Same quantity for a direction that moves only the input weights.
double input_directional_curvature(const Mlp& m, const Dataset& d, const ForwardTrace& trace,
                                   const Matrix& direction);

}  // namespace amolf
