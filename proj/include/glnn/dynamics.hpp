#pragma once

#include <functional>
#include <string>
#include <vector>

#include "glnn/seqdata.hpp"
#include "glnn/topology.hpp"
#include "glnn/types.hpp"

namespace glnn {

enum class ActivationKind { Tanh, Logistic };

struct ActivationFunction {
    ActivationKind kind = ActivationKind::Tanh;

    Scalar operator()(Scalar v) const;
    Scalar derivative(Scalar v) const;
    /// s'(v) expressed through a = s(v); avoids keeping V around.
    Scalar derivative_from_activity(Scalar a) const;
    Scalar inverse(Scalar a) const;
    Scalar sup_derivative() const { return kind == ActivationKind::Tanh ? 1.0 : 0.25; }

    static ActivationFunction tanh_fn() { return {ActivationKind::Tanh}; }
    static ActivationFunction logistic_fn() { return {ActivationKind::Logistic}; }
};

std::string to_string(ActivationKind kind);
ActivationKind activation_from_string(const std::string& s);

/// Parameters of one network. Writing weights w are (N+1) x A with row 0
/// the always-on unit. Transition weights live per target unit j:
/// for GNN/GLNN tau[j] is (d_j+1) x A with slot 0 the always-on source and
/// slot k>0 the k-th entry of in_edges(j); for RNN tau[j] is a (d_j+1)
/// vector and the per-symbol drive sits in rho (N x A).
struct ModelParams {
    ModelKind kind = ModelKind::GLNN;
    ActivationFunction activation;
    NetworkTopology topology;
    Matrix w;
    std::vector<Matrix> tau;
    Matrix rho;  // RNN only; empty otherwise
    Vector v0;   // startup pre-activations (trainable for GLNN)

    int units() const { return topology.units(); }
    int alphabet_size() const { return static_cast<int>(w.cols()); }

    /// Zero-weight skeleton consistent with a topology and alphabet size.
    static ModelParams zeros(ModelKind kind, ActivationFunction act, NetworkTopology topo,
                             int alphabet_size);
};

/// Per-timestep forward record. Activities exclude the always-on unit;
/// pre-activations are recoverable through the activation inverse and are
/// not stored.
struct TrajectoryTape {
    Matrix a;        // N x T
    Matrix pi;       // A x T
    Vector logloss;  // T, natural-log pi_t(x_t)
    Scalar masked_ll_nats = 0.0;

    Index length() const { return a.cols(); }
    Scalar masked_ll_bits() const { return nats_to_bits(masked_ll_nats); }
};

/// pi = softmax of E_y = sum_i a_i w_{iy} with the always-on unit included;
/// stabilized by max subtraction.
Vector softmax_output(const Vector& activities, const Matrix& w);

/// One GLNN transition: V'_j = V_j + tau_{0jx} + sum_{i->j} tau_{ijx} a_i.
Vector step_glnn(const Vector& v, const Vector& a, int symbol, const ModelParams& params);

/// One GNN transition: V'_j = tau_{0jx} + sum_{i->j} tau_{ijx} a_i.
Vector step_gnn(const Vector& a, int symbol, const ModelParams& params);

/// One RNN transition: V'_j = rho_{jx} + tau_{0j} + sum_{i->j} tau_{ij} a_i.
Vector step_rnn(const Vector& a, int symbol, const ModelParams& params);

/// Full forward pass; throws DivergentDynamics on non-finite activations.
TrajectoryTape forward(const ModelParams& params, const SymbolSequence& seq);

/// Masked log-likelihood only (nats); no tape storage.
Scalar forward_loglik(const ModelParams& params, const SymbolSequence& seq);

/// Streaming forward pass: the visitor sees (t, V, a, pi, log pi_t(x_t))
/// per step; returns the masked log-likelihood in nats.
using ForwardVisitor =
    std::function<void(Index, const Vector&, const Vector&, const Vector&, Scalar)>;
Scalar forward_visit(const ModelParams& params, const SymbolSequence& seq,
                     const ForwardVisitor& visitor);

/// Debug dump: t, V, a, pi_t(x_t), logloss rows.
void dump_forward_csv(const ModelParams& params, const SymbolSequence& seq,
                      const std::string& path);

}  // namespace glnn
