#pragma once

#include <vector>

#include "glnn/backprop.hpp"
#include "glnn/dynamics.hpp"

namespace glnn {

enum class MetricKind { RUOP, RBPM };

/// Quasi-diagonal Hessian terms for the writing weights, Fisher form.
/// Columns index symbols; diag(i,y) = h_ii^y (dampened by eps_y),
/// row0(i,y) = h_0i^y with row0(0,y) kept equal to diag(0,y).
struct WritingMetricTerms {
    Matrix diag;
    Matrix row0;
    Vector eps;  // per-symbol dampening
};

/// eps_y = masked frequency of y plus the double-precision unit roundoff.
WritingMetricTerms writing_hessian_terms(const TrajectoryTape& tape, const SymbolSequence& seq,
                                         const SymbolStats& stats);

/// Quasi-diagonal inverse-Hessian step on the writing weights.
Matrix qd_writing_update(const Matrix& w, const Matrix& w_grad, const WritingMetricTerms& terms,
                         Scalar eta_w);

/// m(i, t) for t in 0..T with m(:, T) = 0.
struct ModulusField {
    Matrix m;
};

ModulusField ruop_modulus(const BackwardPass& bp);

/// Backpropagated modulus; the GLNN recursion carries the self-loop term
/// (1 + tau_ii s')^2, the non-leaky models fold the self-loop into the
/// ordinary cross terms.
ModulusField rbpm_modulus(const ModelParams& params, const TrajectoryTape& tape,
                          const SymbolSequence& seq);

ModulusField compute_modulus(MetricKind kind, const ModelParams& params,
                             const TrajectoryTape& tape, const SymbolSequence& seq,
                             const BackwardPass& bp);

/// Full per-(unit, symbol) metric blocks over sources {0} u in_edges(j),
/// dampened by eps on the diagonal. Gated models only.
struct MetricBlocks {
    std::vector<std::vector<Matrix>> block;  // [j][y]
};

MetricBlocks metric_block_accumulate(const ModelParams& params, const TrajectoryTape& tape,
                                     const ModulusField& modulus, const SymbolSequence& seq,
                                     Scalar eps);

/// Solve M x = g for symmetric positive-definite M via Cholesky; retries
/// once with 10x dampening before giving up.
Vector dampened_solve(const Matrix& m, const Vector& g, Scalar eps);

/// Exact solve of an arrow system (diagonal plus row/column 0); this is the
/// quasi-diagonal inverse shared by the writing update and the reduced
/// transition updates.
Vector qd_solve(const Vector& g, const Vector& diag, const Vector& row0);

/// Variance of dE under pi: the Fisher norm of the output change.
Scalar fisher_output_norm(const Vector& pi, const Vector& de);

/// Diagonal and row-0 accumulators of the per-(j,y) blocks, for the
/// quasi-diagonal reduced update on gated models. Dampened like the blocks.
struct QdBlocks {
    std::vector<Matrix> diag;  // [j] : (d_j+1) x A
    std::vector<Matrix> row0;  // [j] : (d_j+1) x A
};

QdBlocks qd_block_accumulate(const ModelParams& params, const TrajectoryTape& tape,
                             const ModulusField& modulus, const SymbolSequence& seq, Scalar eps);

/// RNN quasi-diagonal system per unit: transition slots followed by the
/// per-symbol input weights, slot 0 acting as the bias row.
struct RnnQdSystem {
    std::vector<Vector> diag;  // [j] : (d_j+1) + A
    std::vector<Vector> row0;
};

RnnQdSystem rnn_qd_accumulate(const ModelParams& params, const TrajectoryTape& tape,
                              const ModulusField& modulus, const SymbolSequence& seq, Scalar eps);

/// Definition-6 oracle: materializes the time-unfolded network with dummy
/// per-time parameters and sums per-time metrics. Test scale only
/// (N <= 5, T <= 10). For gated models `full` is indexed (y, slot) per
/// unit and `block[j][y]` extracts the diagonal blocks; for RNNs `full`
/// is indexed [tau slots, rho symbols].
struct UnfoldedMetric {
    std::vector<Matrix> full;                // [j]
    std::vector<std::vector<Matrix>> block;  // [j][y] (gated only)
};

UnfoldedMetric unfolding_oracle(const ModelParams& params, const SymbolSequence& seq,
                                MetricKind kind);

}  // namespace glnn
