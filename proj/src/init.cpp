#include "glnn/init.hpp"

#include <cmath>

#include "glnn/rng.hpp"

namespace glnn {

InitPlan InitPlan::for_activation(ActivationFunction act, std::uint64_t seed) {
    InitPlan plan;
    plan.activation = act;
    plan.alpha = 1.0 / (2.0 * act.sup_derivative());
    plan.seed = seed;
    return plan;
}

Scalar InitPlan::beta(int unit) const {
    const Scalar m = mu(unit);
    if (activation.kind == ActivationKind::Tanh) return -std::sqrt(alpha * (alpha - m));
    // logistic: solve s'(Vbar) = mu/alpha for the low-activity branch,
    // a(1-a) = mu/alpha, beta = alpha * a
    const Scalar a = 0.5 * (1.0 - std::sqrt(1.0 - 4.0 * m / alpha));
    return alpha * a;
}

Scalar InitPlan::fixed_point(int unit) const { return activation.inverse(beta(unit) / alpha); }

namespace {

// log nu with absent symbols floored at 1/(2 sum chi) and renormalized
Vector safe_log_frequencies(const SymbolStats& stats) {
    Vector nu = stats.nu;
    bool floored = false;
    const Scalar floor = 1.0 / (2.0 * static_cast<Scalar>(stats.masked_count));
    for (Index y = 0; y < nu.size(); ++y)
        if (nu[y] <= 0.0) {
            nu[y] = floor;
            floored = true;
        }
    if (floored) nu /= nu.sum();
    return nu.array().log().matrix();
}

// u_{jy} draws with the nu-tilde-weighted mean removed, one row per unit
Matrix centered_uniform(Index n, const SymbolStats& stats, Rng& rng) {
    const Index A = stats.nu_tilde.size();
    Matrix u(n, A);
    for (Index j = 0; j < n; ++j)
        for (Index y = 0; y < A; ++y) u(j, y) = rng.uniform_real();
    const Vector mean = u * stats.nu_tilde;
    u.colwise() -= mean;
    return u;
}

}  // namespace

ModelParams glnn_init(const NetworkTopology& topology, const Alphabet& alphabet,
                      const SymbolStats& stats, const InitPlan& plan) {
    ModelParams p =
        ModelParams::zeros(ModelKind::GLNN, plan.activation, topology, alphabet.size());
    p.w.row(0) = safe_log_frequencies(stats).transpose();
    Rng rng(plan.seed);
    const Matrix u = centered_uniform(topology.units(), stats, rng);
    for (int j = 0; j < topology.units(); ++j) {
        Matrix& tj = p.tau[static_cast<std::size_t>(j)];
        tj.row(0).setConstant(plan.beta(j));
        if (plan.noise) tj.row(0) += plan.noise_scale(j) * u.row(j);
        tj.row(topology.self_slot(j) + 1).setConstant(-plan.alpha);
        p.v0[j] = plan.fixed_point(j);
    }
    return p;
}

ModelParams rnn_init(const NetworkTopology& topology, const Alphabet& alphabet,
                     const SymbolStats& stats, ActivationFunction activation, std::uint64_t seed) {
    ModelParams p = ModelParams::zeros(ModelKind::RNN, activation, topology, alphabet.size());
    p.w.row(0) = safe_log_frequencies(stats).transpose();
    Rng rng(seed);
    const Matrix u = centered_uniform(topology.units(), stats, rng);
    for (int j = 0; j < topology.units(); ++j)
        p.tau[static_cast<std::size_t>(j)](topology.self_slot(j) + 1, 0) = 1.0 - 1.0 / (j + 1.0);
    p.rho = 0.5 * u;
    return p;
}

ModelParams gnn_init(const NetworkTopology& topology, const Alphabet& alphabet,
                     const SymbolStats& stats, ActivationFunction activation, std::uint64_t seed) {
    ModelParams p = ModelParams::zeros(ModelKind::GNN, activation, topology, alphabet.size());
    p.w.row(0) = safe_log_frequencies(stats).transpose();
    Rng rng(seed);
    const Matrix u = centered_uniform(topology.units(), stats, rng);
    for (int j = 0; j < topology.units(); ++j) {
        Matrix& tj = p.tau[static_cast<std::size_t>(j)];
        tj.row(topology.self_slot(j) + 1).setConstant(1.0 - 1.0 / (j + 1.0));
        tj.row(0) = 0.5 * u.row(j);
    }
    return p;
}

ModelParams init_params(ModelKind kind, const NetworkTopology& topology, const Alphabet& alphabet,
                        const SymbolStats& stats, ActivationFunction activation,
                        std::uint64_t seed) {
    switch (kind) {
        case ModelKind::GLNN:
            return glnn_init(topology, alphabet, stats, InitPlan::for_activation(activation, seed));
        case ModelKind::GNN: return gnn_init(topology, alphabet, stats, activation, seed);
        case ModelKind::RNN: return rnn_init(topology, alphabet, stats, activation, seed);
    }
    throw std::logic_error("unreachable");
}

Vector linearized_prediction(const InitPlan& plan, int unit, const Vector& rho_history) {
    const Scalar vbar = plan.fixed_point(unit);
    const Scalar m = plan.mu(unit);
    const Scalar eps = plan.noise_scale(unit);
    const Index T = rho_history.size();
    Vector v(T + 1);
    v[0] = vbar;
    Scalar acc = 0.0;  // sum_{t'<t} (1-mu)^{t-t'} rho_{t'}
    for (Index t = 1; t <= T; ++t) {
        acc = (1.0 - m) * (acc + rho_history[t - 1]);
        v[t] = vbar + eps * acc;
    }
    return v;
}

}  // namespace glnn
