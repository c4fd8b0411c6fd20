#pragma once

// Output weight optimization: the output and bypass weights enter the outputs
// linearly, so minimizing the error over them is a linear least-squares
// problem in the basis X_p = [x_p; O_p] (inputs first, then activations).

#include "amolf/dataset.hpp"
#include "amolf/linalg.hpp"
#include "amolf/network.hpp"

namespace amolf {

struct Correlations {
  Matrix r;  // Nu x Nu, (1/Nv) sum X_p X_p^T
  Matrix c;  // Nu x M,  (1/Nv) sum X_p t_p^T
};

Correlations accumulate_correlations(const Dataset& d, const ForwardTrace& trace);

struct OutputWeights {
  Matrix wo;  // M x Nu, columns ordered as X_p
  bool rank_deficient = false;
};

OutputWeights solve_output_weights(const Correlations& c);

// Writes wo's columns back into woi (first N+1) and woh (last Nh).
void install_output_weights(Mlp& m, const Matrix& wo);
Matrix stack_output_weights(const Mlp& m);

// Re-solves the output weights of m for d in place. Returns the solve report's
// rank-deficiency flag.
bool optimize_output_weights(Mlp& m, const Dataset& d);

}  // namespace amolf
