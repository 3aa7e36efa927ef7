#include "glnn/backprop.hpp"

namespace glnn {

BackwardPass backward(const ModelParams& params, const TrajectoryTape& tape,
                      const SymbolSequence& seq) {
    const Index T = tape.length();
    const Index n = params.units();
    const bool leaky = params.kind == ModelKind::GLNN;
    BackwardPass bp;
    bp.B = Matrix::Zero(n, T + 1);
    Vector cross(n), src(n), sp(n);
    for (Index t = T - 1; t >= 0; --t) {
        const int x = seq.tokens[static_cast<std::size_t>(t)];
        const auto a = tape.a.col(t);
        const auto b_next = bp.B.col(t + 1);

        // source term chi_t (w_{i x_t} - sum_y pi_t(y) w_{iy})
        if (seq.mask[static_cast<std::size_t>(t)]) {
            src = params.w.col(x).tail(n);
            src.noalias() -= params.w.bottomRows(n) * tape.pi.col(t);
        } else {
            src.setZero();
        }

        // cross term sum_j tau_{ij x_t} B_j^{t+1}, scattered target-side
        cross.setZero();
        for (Index j = 0; j < n; ++j) {
            const Scalar bj = b_next[j];
            if (bj == 0.0) continue;
            const auto& srcs = params.topology.in_edges(static_cast<int>(j));
            const Matrix& tj = params.tau[static_cast<std::size_t>(j)];
            const Index col = params.kind == ModelKind::RNN ? 0 : x;
            for (std::size_t k = 0; k < srcs.size(); ++k)
                cross[srcs[k]] += tj(static_cast<Index>(k) + 1, col) * bj;
        }

        for (Index i = 0; i < n; ++i)
            sp[i] = params.activation.derivative_from_activity(a[i]);
        if (leaky)
            bp.B.col(t) = b_next + (sp.array() * (src + cross).array()).matrix();
        else
            bp.B.col(t) = (sp.array() * (src + cross).array()).matrix();
    }
    return bp;
}

Matrix writing_grad(const TrajectoryTape& tape, const SymbolSequence& seq) {
    const Index T = tape.length();
    const Index n = tape.a.rows();
    const Index A = tape.pi.rows();
    Matrix w_grad = Matrix::Zero(n + 1, A);
    Vector abar(n + 1);
    for (Index t = T - 1; t >= 0; --t) {
        if (!seq.mask[static_cast<std::size_t>(t)]) continue;
        abar[0] = 1.0;
        abar.tail(n) = tape.a.col(t);
        w_grad.col(seq.tokens[static_cast<std::size_t>(t)]) += abar;
        w_grad.noalias() -= abar * tape.pi.col(t).transpose();
    }
    return w_grad;
}

TransitionGrad transition_grad(const ModelParams& params, const TrajectoryTape& tape,
                               const BackwardPass& bp, const SymbolSequence& seq) {
    const Index T = tape.length();
    const Index n = params.units();
    const bool rnn = params.kind == ModelKind::RNN;
    TransitionGrad g;
    g.tau.reserve(static_cast<std::size_t>(n));
    for (Index j = 0; j < n; ++j)
        g.tau.push_back(Matrix::Zero(params.tau[static_cast<std::size_t>(j)].rows(),
                                     params.tau[static_cast<std::size_t>(j)].cols()));
    if (rnn) g.rho = Matrix::Zero(n, params.alphabet_size());

    for (Index t = T - 1; t >= 0; --t) {
        const int x = seq.tokens[static_cast<std::size_t>(t)];
        const auto a = tape.a.col(t);
        const auto b_next = bp.B.col(t + 1);
        for (Index j = 0; j < n; ++j) {
            const Scalar bj = b_next[j];
            if (bj == 0.0) continue;
            const auto& srcs = params.topology.in_edges(static_cast<int>(j));
            Matrix& gj = g.tau[static_cast<std::size_t>(j)];
            const Index col = rnn ? 0 : x;
            gj(0, col) += bj;
            for (std::size_t k = 0; k < srcs.size(); ++k)
                gj(static_cast<Index>(k) + 1, col) += a[srcs[k]] * bj;
            if (rnn) g.rho(j, x) += bj;
        }
    }
    return g;
}

ModelParams perturbed(const ModelParams& params, const ParamCoord& coord, Scalar h) {
    ModelParams p = params;
    switch (coord.family) {
        case ParamFamily::Writing: p.w(coord.unit, coord.symbol) += h; break;
        case ParamFamily::Transition: {
            Matrix& tj = p.tau[static_cast<std::size_t>(coord.unit)];
            tj(coord.slot, p.kind == ModelKind::RNN ? 0 : coord.symbol) += h;
            break;
        }
        case ParamFamily::Input: p.rho(coord.unit, coord.symbol) += h; break;
        case ParamFamily::Startup: p.v0[coord.unit] += h; break;
    }
    return p;
}

Scalar finite_diff_loglik(const ModelParams& params, const SymbolSequence& seq,
                          const ParamCoord& coord, Scalar h) {
    const Scalar up = forward_loglik(perturbed(params, coord, h), seq);
    const Scalar dn = forward_loglik(perturbed(params, coord, -h), seq);
    return (up - dn) / (2.0 * h);
}

}  // namespace glnn
