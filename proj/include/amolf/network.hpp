#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "amolf/dataset.hpp"
#include "amolf/linalg.hpp"

namespace amolf {

// `linear` (f(x) = x) exists for tests that need an exactly quadratic error.
enum class Activation { sigmoid, tanh, linear };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

double activate(Activation a, double net);
// f'(net) expressed through the activation value f(net).
double activation_slope(Activation a, double activ);

/// Single-hidden-layer perceptron with linear outputs and bypass weights.
struct Mlp {
  std::size_t n_inputs = 0;   // N
  std::size_t n_hidden = 0;   // Nh
  std::size_t n_outputs = 0;  // M
  Matrix w;                   // Nh x (N+1) input weights
  Matrix woh;                 // M x Nh output weights
  Matrix woi;                 // M x (N+1) bypass weights
  Activation activation = Activation::sigmoid;

  Mlp() = default;
  Mlp(std::size_t n, std::size_t nh, std::size_t m, Activation act = Activation::sigmoid);

  std::size_t n_basis() const { return n_inputs + 1 + n_hidden; }  // Nu
  std::size_t n_input_weights() const { return n_hidden * (n_inputs + 1); }

  bool operator==(const Mlp&) const = default;
};

struct ForwardTrace {
  Matrix net;     // Nv x Nh
  Matrix activ;   // Nv x Nh
  Matrix output;  // Nv x M
};

class NetworkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kNetControlMean = 0.5;
inline constexpr double kNetControlVariance = 1.0;

/// Net-control initialization: random zero-mean input weights rescaled per
/// hidden unit so that, over d, each net value has mean 0.5 and variance 1.
/// Output and bypass weights start at zero.
Mlp init_net_control(std::size_t n_hidden, const Dataset& d, std::uint64_t seed,
                     Activation act = Activation::sigmoid);

ForwardTrace forward(const Mlp& m, const Dataset& d);
double mse(const Mlp& m, const Dataset& d);
double mse(const Dataset& d, const ForwardTrace& trace);

void save_mlp(const Mlp& m, const std::filesystem::path& path);
Mlp load_mlp(const std::filesystem::path& path);

}  // namespace amolf
