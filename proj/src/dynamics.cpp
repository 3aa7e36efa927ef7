#include "glnn/dynamics.hpp"

#include <cmath>
#include <fstream>

namespace glnn {

Scalar ActivationFunction::operator()(Scalar v) const {
    return kind == ActivationKind::Tanh ? std::tanh(v) : 1.0 / (1.0 + std::exp(-v));
}

Scalar ActivationFunction::derivative(Scalar v) const {
    return derivative_from_activity((*this)(v));
}

Scalar ActivationFunction::derivative_from_activity(Scalar a) const {
    return kind == ActivationKind::Tanh ? 1.0 - a * a : a * (1.0 - a);
}

Scalar ActivationFunction::inverse(Scalar a) const {
    return kind == ActivationKind::Tanh ? std::atanh(a) : std::log(a / (1.0 - a));
}

std::string to_string(ActivationKind kind) {
    return kind == ActivationKind::Tanh ? "tanh" : "logistic";
}

ActivationKind activation_from_string(const std::string& s) {
    if (s == "tanh") return ActivationKind::Tanh;
    if (s == "logistic") return ActivationKind::Logistic;
    throw std::invalid_argument("unknown activation: " + s);
}

ModelParams ModelParams::zeros(ModelKind kind, ActivationFunction act, NetworkTopology topo,
                               int alphabet_size) {
    ModelParams p;
    p.kind = kind;
    p.activation = act;
    const int n = topo.units();
    p.w = Matrix::Zero(n + 1, alphabet_size);
    p.tau.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        const int dj = topo.in_degree(j) + 1;
        p.tau.push_back(kind == ModelKind::RNN ? Matrix::Zero(dj, 1)
                                               : Matrix::Zero(dj, alphabet_size));
    }
    if (kind == ModelKind::RNN) p.rho = Matrix::Zero(n, alphabet_size);
    p.v0 = Vector::Zero(n);
    p.topology = std::move(topo);
    return p;
}

Vector softmax_output(const Vector& activities, const Matrix& w) {
    const Index n = w.rows() - 1;
    Vector e = w.row(0).transpose();
    e.noalias() += w.bottomRows(n).transpose() * activities;
    const Scalar m = e.maxCoeff();
    Vector pi = (e.array() - m).exp();
    pi /= pi.sum();
    return pi;
}

namespace {

// V'_j contribution common to the three models: bias slot plus in-edges.
Scalar gather_drive(const ModelParams& params, const Vector& a, int j, int symbol) {
    const auto& srcs = params.topology.in_edges(j);
    const Matrix& tj = params.tau[static_cast<std::size_t>(j)];
    const Index col = params.kind == ModelKind::RNN ? 0 : symbol;
    Scalar acc = tj(0, col);
    for (std::size_t k = 0; k < srcs.size(); ++k)
        acc += tj(static_cast<Index>(k) + 1, col) * a[srcs[k]];
    return acc;
}

}  // namespace

Vector step_glnn(const Vector& v, const Vector& a, int symbol, const ModelParams& params) {
    Vector out = v;
    for (int j = 0; j < params.units(); ++j) out[j] += gather_drive(params, a, j, symbol);
    return out;
}

Vector step_gnn(const Vector& a, int symbol, const ModelParams& params) {
    Vector out(params.units());
    for (int j = 0; j < params.units(); ++j) out[j] = gather_drive(params, a, j, symbol);
    return out;
}

Vector step_rnn(const Vector& a, int symbol, const ModelParams& params) {
    Vector out(params.units());
    for (int j = 0; j < params.units(); ++j)
        out[j] = params.rho(j, symbol) + gather_drive(params, a, j, symbol);
    return out;
}

namespace {

Vector advance(const ModelParams& params, const Vector& v, const Vector& a, int symbol) {
    switch (params.kind) {
        case ModelKind::GLNN: return step_glnn(v, a, symbol, params);
        case ModelKind::GNN: return step_gnn(a, symbol, params);
        case ModelKind::RNN: return step_rnn(a, symbol, params);
    }
    throw std::logic_error("unreachable");
}

Vector activate(const ActivationFunction& act, const Vector& v) {
    if (act.kind == ActivationKind::Tanh) return v.array().tanh();
    return 1.0 / (1.0 + (-v.array()).exp());
}

template <class PerStep>
Scalar run_forward(const ModelParams& params, const SymbolSequence& seq, PerStep&& per_step) {
    const Index T = seq.size();
    const Index n = params.units();
    const Index A = params.w.cols();
    Vector v = params.v0;
    Vector a(n), e(A), pi(A);
    Scalar ll = 0.0;
    for (Index t = 0; t < T; ++t) {
        a = activate(params.activation, v);
        if (!a.allFinite()) throw DivergentDynamics(t);
        e = params.w.row(0).transpose();
        e.noalias() += params.w.bottomRows(n).transpose() * a;
        const Scalar m = e.maxCoeff();
        if (!std::isfinite(m)) throw DivergentDynamics(t);
        pi = (e.array() - m).exp();
        const Scalar z = pi.sum();
        pi /= z;
        const int x = seq.tokens[static_cast<std::size_t>(t)];
        const Scalar logpi_x = e[x] - m - std::log(z);
        if (seq.mask[static_cast<std::size_t>(t)]) ll += logpi_x;
        per_step(t, v, a, pi, logpi_x);
        if (t + 1 < T) v = advance(params, v, a, x);
    }
    if (!std::isfinite(ll)) throw DivergentDynamics(T - 1);
    return ll;
}

}  // namespace

TrajectoryTape forward(const ModelParams& params, const SymbolSequence& seq) {
    if (seq.tokens.empty()) throw std::runtime_error("empty sequence");
    if (seq.tokens.size() != seq.mask.size()) throw std::runtime_error("mask length mismatch");
    for (int t : seq.tokens)
        if (t < 0 || t >= params.alphabet_size())
            throw std::runtime_error("token outside alphabet");
    TrajectoryTape tape;
    const Index T = seq.size();
    tape.a.resize(params.units(), T);
    tape.pi.resize(params.w.cols(), T);
    tape.logloss.resize(T);
    tape.masked_ll_nats = run_forward(
        params, seq, [&](Index t, const Vector&, const Vector& a, const Vector& pi, Scalar lp) {
            tape.a.col(t) = a;
            tape.pi.col(t) = pi;
            tape.logloss[t] = lp;
        });
    return tape;
}

Scalar forward_loglik(const ModelParams& params, const SymbolSequence& seq) {
    return run_forward(params, seq,
                       [](Index, const Vector&, const Vector&, const Vector&, Scalar) {});
}

Scalar forward_visit(const ModelParams& params, const SymbolSequence& seq,
                     const ForwardVisitor& visitor) {
    return run_forward(params, seq, visitor);
}

void dump_forward_csv(const ModelParams& params, const SymbolSequence& seq,
                      const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << "t";
    for (int j = 0; j < params.units(); ++j) out << ",V" << j;
    for (int j = 0; j < params.units(); ++j) out << ",a" << j;
    out << ",pi_xt,logloss\n";
    run_forward(params, seq,
                [&](Index t, const Vector& v, const Vector& a, const Vector& pi, Scalar lp) {
                    out << t;
                    for (int j = 0; j < params.units(); ++j) out << ',' << v[j];
                    for (int j = 0; j < params.units(); ++j) out << ',' << a[j];
                    out << ',' << pi[seq.tokens[static_cast<std::size_t>(t)]] << ',' << lp << '\n';
                });
}

}  // namespace glnn
