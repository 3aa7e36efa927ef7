#include "glnn/metric.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>

namespace glnn {

namespace {

constexpr Scalar kUnitRoundoff = std::numeric_limits<Scalar>::epsilon() / 2.0;

Vector activity_with_bias(const TrajectoryTape& tape, Index t) {
    Vector abar(tape.a.rows() + 1);
    abar[0] = 1.0;
    abar.tail(tape.a.rows()) = tape.a.col(t);
    return abar;
}

Vector derivative_from_activities(const ActivationFunction& act, const Vector& a) {
    Vector sp(a.size());
    for (Index i = 0; i < a.size(); ++i) sp[i] = act.derivative_from_activity(a[i]);
    return sp;
}

}  // namespace

WritingMetricTerms writing_hessian_terms(const TrajectoryTape& tape, const SymbolSequence& seq,
                                         const SymbolStats& stats) {
    const Index T = tape.length();
    const Index n = tape.a.rows();
    const Index A = tape.pi.rows();
    WritingMetricTerms terms;
    terms.eps = stats.nu.array() + kUnitRoundoff;
    terms.diag = Matrix::Zero(n + 1, A);
    terms.row0 = Matrix::Zero(n + 1, A);
    Vector abar(n + 1), var(A);
    for (Index t = 0; t < T; ++t) {
        if (!seq.mask[static_cast<std::size_t>(t)]) continue;
        abar[0] = 1.0;
        abar.tail(n) = tape.a.col(t);
        var = tape.pi.col(t).array() * (1.0 - tape.pi.col(t).array());
        terms.diag.noalias() += (abar.array() * abar.array()).matrix() * var.transpose();
        terms.row0.noalias() += abar * var.transpose();
    }
    terms.diag.array().rowwise() += terms.eps.transpose().array();
    terms.row0.row(0) = terms.diag.row(0);
    return terms;
}

Vector qd_solve(const Vector& g, const Vector& diag, const Vector& row0) {
    const Index m = g.size();
    const Scalar h00 = diag[0];
    if (h00 <= 0.0) throw std::runtime_error("metric degenerate");
    Vector delta(m);
    Scalar bias = g[0] / h00;
    for (Index i = 1; i < m; ++i) {
        const Scalar denom = diag[i] - row0[i] * row0[i] / h00;
        if (denom <= 0.0) throw std::runtime_error("metric degenerate");
        delta[i] = (g[i] - g[0] * row0[i] / h00) / denom;
        bias -= row0[i] / h00 * delta[i];
    }
    delta[0] = bias;
    return delta;
}

Matrix qd_writing_update(const Matrix& w, const Matrix& w_grad, const WritingMetricTerms& terms,
                         Scalar eta_w) {
    Matrix out = w;
    for (Index y = 0; y < w.cols(); ++y)
        out.col(y) += eta_w * qd_solve(w_grad.col(y), terms.diag.col(y), terms.row0.col(y));
    return out;
}

ModulusField ruop_modulus(const BackwardPass& bp) {
    ModulusField mod;
    mod.m = bp.B.array().square().matrix();
    return mod;
}

ModulusField rbpm_modulus(const ModelParams& params, const TrajectoryTape& tape,
                          const SymbolSequence& seq) {
    const Index T = tape.length();
    const Index n = params.units();
    const bool leaky = params.kind == ModelKind::GLNN;
    const Matrix w_inner = params.w.bottomRows(n);
    const Matrix w_inner_sq = w_inner.array().square();
    ModulusField mod;
    mod.m = Matrix::Zero(n, T + 1);
    Vector cross(n), var(n), sp(n), mean_w(n), tau_self(n);
    for (Index t = T - 1; t >= 0; --t) {
        const auto a = tape.a.col(t);
        const auto m_next = mod.m.col(t + 1);
        const int x = seq.tokens[static_cast<std::size_t>(t)];
        const Index col = params.kind == ModelKind::RNN ? 0 : x;

        // source: pi_t-variance of the writing weights of each unit
        if (seq.mask[static_cast<std::size_t>(t)]) {
            mean_w.noalias() = w_inner * tape.pi.col(t);
            var.noalias() = w_inner_sq * tape.pi.col(t);
            var -= mean_w.cwiseProduct(mean_w);
        } else {
            var.setZero();
        }

        cross.setZero();
        for (Index j = 0; j < n; ++j) {
            const Scalar mj = m_next[j];
            if (mj == 0.0) continue;
            const auto& srcs = params.topology.in_edges(static_cast<int>(j));
            const Matrix& tj = params.tau[static_cast<std::size_t>(j)];
            for (std::size_t k = 0; k < srcs.size(); ++k) {
                const Index i = srcs[k];
                if (leaky && i == j) continue;  // self-loop handled by the carry
                const Scalar tv = tj(static_cast<Index>(k) + 1, col);
                cross[i] += tv * tv * mj;
            }
        }

        sp = derivative_from_activities(params.activation, a);
        mod.m.col(t) = (sp.array().square() * (var + cross).array()).matrix();
        if (leaky) {
            for (Index i = 0; i < n; ++i) {
                const Matrix& ti = params.tau[static_cast<std::size_t>(i)];
                tau_self[i] = ti(params.topology.self_slot(static_cast<int>(i)) + 1, col);
            }
            mod.m.col(t) +=
                ((1.0 + tau_self.array() * sp.array()).square() * m_next.array()).matrix();
        }
    }
    return mod;
}

ModulusField compute_modulus(MetricKind kind, const ModelParams& params,
                             const TrajectoryTape& tape, const SymbolSequence& seq,
                             const BackwardPass& bp) {
    return kind == MetricKind::RUOP ? ruop_modulus(bp) : rbpm_modulus(params, tape, seq);
}

MetricBlocks metric_block_accumulate(const ModelParams& params, const TrajectoryTape& tape,
                                     const ModulusField& modulus, const SymbolSequence& seq,
                                     Scalar eps) {
    if (params.kind == ModelKind::RNN)
        throw std::logic_error("full metric blocks are defined for gated models only");
    const Index T = tape.length();
    const Index n = params.units();
    const Index A = params.alphabet_size();
    MetricBlocks blocks;
    blocks.block.resize(static_cast<std::size_t>(n));
    for (Index j = 0; j < n; ++j) {
        const Index dj = params.topology.in_degree(static_cast<int>(j)) + 1;
        blocks.block[static_cast<std::size_t>(j)].assign(static_cast<std::size_t>(A),
                                                         Matrix::Zero(dj, dj));
    }
    for (Index t = 0; t < T; ++t) {
        const int x = seq.tokens[static_cast<std::size_t>(t)];
        const auto a = tape.a.col(t);
        for (Index j = 0; j < n; ++j) {
            const Scalar mj = modulus.m(j, t + 1);
            if (mj == 0.0) continue;
            const auto& srcs = params.topology.in_edges(static_cast<int>(j));
            Vector abar(static_cast<Index>(srcs.size()) + 1);
            abar[0] = 1.0;
            for (std::size_t k = 0; k < srcs.size(); ++k)
                abar[static_cast<Index>(k) + 1] = a[srcs[k]];
            blocks.block[static_cast<std::size_t>(j)][static_cast<std::size_t>(x)]
                .selfadjointView<Eigen::Lower>()
                .rankUpdate(abar, mj);
        }
    }
    for (Index j = 0; j < n; ++j)
        for (Index y = 0; y < A; ++y) {
            Matrix& m = blocks.block[static_cast<std::size_t>(j)][static_cast<std::size_t>(y)];
            m = m.selfadjointView<Eigen::Lower>();
            m.diagonal().array() += eps;
        }
    return blocks;
}

Vector dampened_solve(const Matrix& m, const Vector& g, Scalar eps) {
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() == Eigen::Success) return llt.solve(g);
    Matrix retry = m;
    retry.diagonal().array() += 10.0 * eps;
    Eigen::LLT<Matrix> llt2(retry);
    if (llt2.info() == Eigen::Success) return llt2.solve(g);
    throw std::runtime_error("metric not positive definite");
}

Scalar fisher_output_norm(const Vector& pi, const Vector& de) {
    const Scalar mean = pi.dot(de);
    return pi.dot(de.cwiseProduct(de)) - mean * mean;
}

QdBlocks qd_block_accumulate(const ModelParams& params, const TrajectoryTape& tape,
                             const ModulusField& modulus, const SymbolSequence& seq, Scalar eps) {
    if (params.kind == ModelKind::RNN)
        throw std::logic_error("per-symbol blocks are defined for gated models only");
    const Index T = tape.length();
    const Index n = params.units();
    const Index A = params.alphabet_size();
    QdBlocks out;
    out.diag.reserve(static_cast<std::size_t>(n));
    out.row0.reserve(static_cast<std::size_t>(n));
    for (Index j = 0; j < n; ++j) {
        const Index dj = params.topology.in_degree(static_cast<int>(j)) + 1;
        out.diag.push_back(Matrix::Zero(dj, A));
        out.row0.push_back(Matrix::Zero(dj, A));
    }
    for (Index t = 0; t < T; ++t) {
        const int x = seq.tokens[static_cast<std::size_t>(t)];
        const auto a = tape.a.col(t);
        for (Index j = 0; j < n; ++j) {
            const Scalar mj = modulus.m(j, t + 1);
            if (mj == 0.0) continue;
            const auto& srcs = params.topology.in_edges(static_cast<int>(j));
            Matrix& dj = out.diag[static_cast<std::size_t>(j)];
            Matrix& rj = out.row0[static_cast<std::size_t>(j)];
            dj(0, x) += mj;
            rj(0, x) += mj;
            for (std::size_t k = 0; k < srcs.size(); ++k) {
                const Scalar ai = a[srcs[k]];
                dj(static_cast<Index>(k) + 1, x) += mj * ai * ai;
                rj(static_cast<Index>(k) + 1, x) += mj * ai;
            }
        }
    }
    for (Index j = 0; j < n; ++j) {
        out.diag[static_cast<std::size_t>(j)].array() += eps;
        out.row0[static_cast<std::size_t>(j)].row(0) =
            out.diag[static_cast<std::size_t>(j)].row(0);
    }
    return out;
}

RnnQdSystem rnn_qd_accumulate(const ModelParams& params, const TrajectoryTape& tape,
                              const ModulusField& modulus, const SymbolSequence& seq, Scalar eps) {
    if (params.kind != ModelKind::RNN)
        throw std::logic_error("combined quasi-diagonal system is RNN-specific");
    const Index T = tape.length();
    const Index n = params.units();
    const Index A = params.alphabet_size();
    RnnQdSystem out;
    out.diag.reserve(static_cast<std::size_t>(n));
    out.row0.reserve(static_cast<std::size_t>(n));
    for (Index j = 0; j < n; ++j) {
        const Index dj = params.topology.in_degree(static_cast<int>(j)) + 1;
        out.diag.push_back(Vector::Zero(dj + A));
        out.row0.push_back(Vector::Zero(dj + A));
    }
    for (Index t = 0; t < T; ++t) {
        const int x = seq.tokens[static_cast<std::size_t>(t)];
        const auto a = tape.a.col(t);
        for (Index j = 0; j < n; ++j) {
            const Scalar mj = modulus.m(j, t + 1);
            if (mj == 0.0) continue;
            const auto& srcs = params.topology.in_edges(static_cast<int>(j));
            const Index dj = static_cast<Index>(srcs.size()) + 1;
            Vector& diag = out.diag[static_cast<std::size_t>(j)];
            Vector& row0 = out.row0[static_cast<std::size_t>(j)];
            diag[0] += mj;
            row0[0] += mj;
            for (std::size_t k = 0; k < srcs.size(); ++k) {
                const Scalar ai = a[srcs[k]];
                diag[static_cast<Index>(k) + 1] += mj * ai * ai;
                row0[static_cast<Index>(k) + 1] += mj * ai;
            }
            diag[dj + x] += mj;
            row0[dj + x] += mj;
        }
    }
    for (Index j = 0; j < n; ++j) {
        out.diag[static_cast<std::size_t>(j)].array() += eps;
        out.row0[static_cast<std::size_t>(j)][0] = out.diag[static_cast<std::size_t>(j)][0];
    }
    return out;
}

namespace {

// dV_j^{t+1} / dV_i^t as a dense (i, j) matrix, from the evolution equations.
Matrix dense_jacobian(const ModelParams& params, const Vector& a, int symbol) {
    const Index n = params.units();
    Matrix jac = Matrix::Zero(n, n);
    if (params.kind == ModelKind::GLNN) jac.setIdentity();
    for (Index j = 0; j < n; ++j) {
        const auto& srcs = params.topology.in_edges(static_cast<int>(j));
        const Matrix& tj = params.tau[static_cast<std::size_t>(j)];
        const Index col = params.kind == ModelKind::RNN ? 0 : symbol;
        for (std::size_t k = 0; k < srcs.size(); ++k) {
            const Index i = srcs[k];
            jac(i, j) += tj(static_cast<Index>(k) + 1, col) *
                         params.activation.derivative_from_activity(a[i]);
        }
    }
    return jac;
}

// B via forward-mode sensitivities through the unfolded network; an
// independent route to the same derivatives as the backward recursion.
Matrix forward_sensitivity_b(const ModelParams& params, const TrajectoryTape& tape,
                             const SymbolSequence& seq) {
    const Index T = tape.length();
    const Index n = params.units();
    const Matrix w_inner = params.w.bottomRows(n);
    Matrix b = Matrix::Zero(n, T + 1);
    for (Index t0 = 0; t0 < T; ++t0) {
        Matrix sens = Matrix::Identity(n, n);  // (i, c): dV_i^s / dV_c^{t0}
        for (Index s = t0; s < T; ++s) {
            const auto a = tape.a.col(s);
            Matrix da(n, n);
            for (Index i = 0; i < n; ++i)
                da.row(i) = params.activation.derivative_from_activity(a[i]) * sens.row(i);
            if (seq.mask[static_cast<std::size_t>(s)]) {
                const Matrix de = w_inner.transpose() * da;  // (y, c)
                const int x = seq.tokens[static_cast<std::size_t>(s)];
                b.col(t0) += (de.row(x) - tape.pi.col(s).transpose() * de).transpose();
            }
            if (s + 1 < T)
                sens = dense_jacobian(params, a, seq.tokens[static_cast<std::size_t>(s)])
                           .transpose() *
                       sens;
        }
    }
    return b;
}

Matrix unfolded_modulus(const ModelParams& params, const TrajectoryTape& tape,
                        const SymbolSequence& seq, MetricKind kind) {
    const Index T = tape.length();
    const Index n = params.units();
    if (kind == MetricKind::RUOP)
        return forward_sensitivity_b(params, tape, seq).array().square().matrix();
    Matrix mod = Matrix::Zero(n, T + 1);
    const Matrix w_inner = params.w.bottomRows(n);
    for (Index t = T - 1; t >= 0; --t) {
        const auto a = tape.a.col(t);
        Vector src = Vector::Zero(n);
        if (seq.mask[static_cast<std::size_t>(t)]) {
            for (Index i = 0; i < n; ++i) {
                const Vector de =
                    w_inner.row(i).transpose() * params.activation.derivative_from_activity(a[i]);
                src[i] = fisher_output_norm(tape.pi.col(t), de);
            }
        }
        const Matrix jac = dense_jacobian(params, a, seq.tokens[static_cast<std::size_t>(t)]);
        mod.col(t) = src + jac.array().square().matrix() * mod.col(t + 1);
    }
    return mod;
}

}  // namespace

UnfoldedMetric unfolding_oracle(const ModelParams& params, const SymbolSequence& seq,
                                MetricKind kind) {
    if (params.units() > 5 || seq.size() > 10)
        throw std::runtime_error("instance too large for the unfolding oracle");
    const TrajectoryTape tape = forward(params, seq);
    const Matrix mod = unfolded_modulus(params, tape, seq, kind);
    const Index T = tape.length();
    const Index n = params.units();
    const Index A = params.alphabet_size();
    const bool rnn = params.kind == ModelKind::RNN;

    UnfoldedMetric out;
    out.full.reserve(static_cast<std::size_t>(n));
    for (Index j = 0; j < n; ++j) {
        const Index dj = params.topology.in_degree(static_cast<int>(j)) + 1;
        const Index dim = rnn ? dj + A : dj * A;
        out.full.push_back(Matrix::Zero(dim, dim));
    }
    for (Index t = 0; t < T; ++t) {
        const int x = seq.tokens[static_cast<std::size_t>(t)];
        const Vector abar = activity_with_bias(tape, t);
        for (Index j = 0; j < n; ++j) {
            const Scalar mj = mod(j, t + 1);
            const auto& srcs = params.topology.in_edges(static_cast<int>(j));
            const Index dj = static_cast<Index>(srcs.size()) + 1;
            Vector u = Vector::Zero(out.full[static_cast<std::size_t>(j)].rows());
            const Index base = rnn ? 0 : static_cast<Index>(x) * dj;
            u[base] = 1.0;
            for (std::size_t k = 0; k < srcs.size(); ++k)
                u[base + static_cast<Index>(k) + 1] = abar[srcs[k] + 1];
            if (rnn) u[dj + x] = 1.0;
            out.full[static_cast<std::size_t>(j)].noalias() += mj * u * u.transpose();
        }
    }
    if (!rnn) {
        out.block.resize(static_cast<std::size_t>(n));
        for (Index j = 0; j < n; ++j) {
            const Index dj = params.topology.in_degree(static_cast<int>(j)) + 1;
            for (Index y = 0; y < A; ++y)
                out.block[static_cast<std::size_t>(j)].push_back(
                    out.full[static_cast<std::size_t>(j)].block(y * dj, y * dj, dj, dj));
        }
    }
    return out;
}

}  // namespace glnn
