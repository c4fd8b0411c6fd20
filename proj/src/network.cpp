#include "amolf/network.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "amolf/random.hpp"

namespace amolf {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::linear: return "linear";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "tanh") return Activation::tanh;
  if (name == "linear") return Activation::linear;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

double activate(Activation a, double net) {
  switch (a) {
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-net));
    case Activation::tanh: return std::tanh(net);
    case Activation::linear: return net;
  }
  return net;
}

double activation_slope(Activation a, double activ) {
  switch (a) {
    case Activation::sigmoid: return activ * (1.0 - activ);
    case Activation::tanh: return 1.0 - activ * activ;
    case Activation::linear: return 1.0;
  }
  return 1.0;
}

Mlp::Mlp(std::size_t n, std::size_t nh, std::size_t m, Activation act)
    : n_inputs(n),
      n_hidden(nh),
      n_outputs(m),
      w(nh, n + 1),
      woh(m, nh),
      woi(m, n + 1),
      activation(act) {}

Mlp init_net_control(std::size_t n_hidden, const Dataset& d, std::uint64_t seed, Activation act) {
  if (n_hidden == 0) throw NetworkError("need at least one hidden unit");
  Mlp m(d.n_inputs, n_hidden, d.n_outputs, act);
  Rng rng = make_rng(seed, RngStream::init);
  const std::size_t n = d.n_inputs;
  const double nv = static_cast<double>(d.n_patterns());

  for (std::size_t k = 0; k < n_hidden; ++k) {
    auto row = m.w.row(k);
    for (std::size_t i = 0; i < n; ++i) row[i] = 2.0 * uniform01(rng) - 1.0;
    row[n] = 0.0;

    Vector net(d.n_patterns());
    double mean = 0.0;
    for (std::size_t p = 0; p < d.n_patterns(); ++p) {
      net[p] = dot(row.first(n), d.inputs.row(p).first(n));
      mean += net[p];
    }
    mean /= nv;
    double var = 0.0;
    for (double v : net) var += (v - mean) * (v - mean);
    var /= nv;
    if (!(var > 0.0))
      throw NetworkError("net control: hidden unit " + std::to_string(k) +
                         " has zero net variance over the data");

    const double scale = std::sqrt(kNetControlVariance / var);
    for (std::size_t i = 0; i < n; ++i) row[i] *= scale;
    row[n] = kNetControlMean - scale * mean;
  }
  return m;
}

namespace {

void check_dims(const Mlp& m, const Dataset& d) {
  if (m.n_inputs != d.n_inputs || m.n_outputs != d.n_outputs)
    throw NetworkError("network is " + std::to_string(m.n_inputs) + "->" +
                       std::to_string(m.n_outputs) + " but data is " + std::to_string(d.n_inputs) +
                       "->" + std::to_string(d.n_outputs));
}

}  // namespace

ForwardTrace forward(const Mlp& m, const Dataset& d) {
  check_dims(m, d);
  const std::size_t nv = d.n_patterns();
  ForwardTrace t{Matrix(nv, m.n_hidden), Matrix(nv, m.n_hidden), Matrix(nv, m.n_outputs)};
  for (std::size_t p = 0; p < nv; ++p) {
    auto x = d.inputs.row(p);
    auto net = t.net.row(p);
    auto activ = t.activ.row(p);
    for (std::size_t k = 0; k < m.n_hidden; ++k) {
      net[k] = dot(m.w.row(k), x);
      activ[k] = activate(m.activation, net[k]);
    }
    auto y = t.output.row(p);
    for (std::size_t i = 0; i < m.n_outputs; ++i) y[i] = dot(m.woi.row(i), x) + dot(m.woh.row(i), activ);
  }
  return t;
}

double mse(const Dataset& d, const ForwardTrace& trace) {
  double e = 0.0;
  for (std::size_t p = 0; p < d.n_patterns(); ++p) {
    double ep = 0.0;
    for (std::size_t i = 0; i < d.n_outputs; ++i) {
      const double r = d.targets(p, i) - trace.output(p, i);
      ep += r * r;
    }
    e += ep;
  }
  return e / static_cast<double>(d.n_patterns());
}

double mse(const Mlp& m, const Dataset& d) { return mse(d, forward(m, d)); }

namespace {

void write_matrix(std::FILE* f, const Matrix& a) {
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c)
      std::fprintf(f, c + 1 == a.cols() ? "%.17g\n" : "%.17g ", a(r, c));
}

void read_matrix(std::istream& in, Matrix& a, const char* name) {
  for (double& v : a.data())
    if (!(in >> v)) throw NetworkError(std::string("model file: truncated ") + name);
}

}  // namespace

void save_mlp(const Mlp& m, const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> f(std::fopen(path.string().c_str(), "w"),
                                                    &std::fclose);
  if (!f) throw NetworkError("cannot write " + path.string());
  std::fprintf(f.get(), "%zu %zu %zu %s\n", m.n_inputs, m.n_hidden, m.n_outputs,
               std::string(to_string(m.activation)).c_str());
  write_matrix(f.get(), m.w);
  write_matrix(f.get(), m.woh);
  write_matrix(f.get(), m.woi);
  if (std::ferror(f.get())) throw NetworkError("write failed: " + path.string());
}

Mlp load_mlp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NetworkError("cannot open " + path.string());
  std::size_t n, nh, m;
  std::string act;
  if (!(in >> n >> nh >> m >> act)) throw NetworkError("model file: bad header");
  Mlp net(n, nh, m, parse_activation(act));
  read_matrix(in, net.w, "W");
  read_matrix(in, net.woh, "Woh");
  read_matrix(in, net.woi, "Woi");
  return net;
}

}  // namespace amolf
