#pragma once

#include <vector>

#include "glnn/dynamics.hpp"

namespace glnn {

/// B(i, t) = d log Pr(x) / d V_i^t for t in 0..T (column T stays zero).
/// Column 0 doubles as the startup-value derivative.
struct BackwardPass {
    Matrix B;

    Vector startup_grad() const { return B.col(0); }
};

/// Transition-weight derivatives, laid out like ModelParams::tau; rho holds
/// the RNN input-weight derivatives and is empty for gated models.
struct TransitionGrad {
    std::vector<Matrix> tau;
    Matrix rho;
};

/// Backpropagation through time for the tape's model; dispatches on kind.
BackwardPass backward(const ModelParams& params, const TrajectoryTape& tape,
                      const SymbolSequence& seq);

/// W_{iy} = sum_t chi_t a_i^t (1[x_t=y] - pi_t(y)), row 0 for the always-on
/// unit. Accumulated backward in t.
Matrix writing_grad(const TrajectoryTape& tape, const SymbolSequence& seq);

/// G_i^{(jy)} = sum_t 1[x_t=y] a_i^t B_j^{t+1} over sources {0} u in_edges(j);
/// for RNNs tau loses the symbol index and rho gains sum_t 1[x_t=y] B_j^{t+1}.
TransitionGrad transition_grad(const ModelParams& params, const TrajectoryTape& tape,
                               const BackwardPass& bp, const SymbolSequence& seq);

enum class ParamFamily { Writing, Transition, Input, Startup };

/// One scalar coordinate of a parameter set. For Transition, `slot` indexes
/// the incoming list of unit j (0 = always-on source); `symbol` is ignored
/// for RNN transitions and for Startup.
struct ParamCoord {
    ParamFamily family = ParamFamily::Writing;
    int unit = 0;    // i for Writing, j otherwise
    int slot = 0;    // Transition only
    int symbol = 0;  // Writing / Transition (gated) / Input
};

ModelParams perturbed(const ModelParams& params, const ParamCoord& coord, Scalar h);

/// Central difference of the masked log-likelihood along one coordinate.
Scalar finite_diff_loglik(const ModelParams& params, const SymbolSequence& seq,
                          const ParamCoord& coord, Scalar h);

/// Central difference of an arbitrary scalar function (test utility).
template <class F>
Scalar central_difference(F&& f, Scalar x0, Scalar h) {
    return (f(x0 + h) - f(x0 - h)) / (2.0 * h);
}

}  // namespace glnn
