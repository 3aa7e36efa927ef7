#pragma once

#include <cstdint>

#include "glnn/dynamics.hpp"

namespace glnn {

/// Per-unit time-scale schedule for the leaky initialization. The schedule
/// counts units from 1; internal unit u is schedule unit u+1, so it
/// integrates the signal over a window of order u+2.
struct InitPlan {
    ActivationFunction activation;
    Scalar alpha = 0.5;  // 1 / (2 sup s')
    std::uint64_t seed = 0;
    bool noise = true;  // the epsilon-scaled reading rates; off = pure fixed point

    Scalar mu(int unit) const { return 1.0 / (unit + 2.0); }
    Scalar beta(int unit) const;
    Scalar noise_scale(int unit) const { return mu(unit) / 4.0; }
    Scalar fixed_point(int unit) const;  // V-bar

    static InitPlan for_activation(ActivationFunction act, std::uint64_t seed);
};

/// Startup weights so each unit's activity is a centered random linear
/// combination of recently read symbols; the output is the i.i.d. model
/// with the empirical masked frequencies.
ModelParams glnn_init(const NetworkTopology& topology, const Alphabet& alphabet,
                      const SymbolStats& stats, const InitPlan& plan);

/// Reference-RNN startup: tau_ii = 1 - 1/i, centered uniform input weights.
ModelParams rnn_init(const NetworkTopology& topology, const Alphabet& alphabet,
                     const SymbolStats& stats, ActivationFunction activation, std::uint64_t seed);

/// RNN startup carried over to the gated parametrization (the per-symbol
/// bias plays the input-weight role).
ModelParams gnn_init(const NetworkTopology& topology, const Alphabet& alphabet,
                     const SymbolStats& stats, ActivationFunction activation, std::uint64_t seed);

/// Initialization for any model kind with its customary scheme.
ModelParams init_params(ModelKind kind, const NetworkTopology& topology, const Alphabet& alphabet,
                        const SymbolStats& stats, ActivationFunction activation,
                        std::uint64_t seed);

/// Small-noise analytic prediction of a unit's V trajectory,
/// V_t = Vbar + eps * sum_{t'<t} (1-mu)^{t-t'} rho_{x_{t'}}; a test oracle
/// for the true dynamics near the fixed point.
Vector linearized_prediction(const InitPlan& plan, int unit, const Vector& rho_history);

}  // namespace glnn
