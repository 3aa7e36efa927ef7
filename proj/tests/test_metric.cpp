#include "doctest.h"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "glnn/metric.hpp"
#include "test_support.hpp"

using namespace glnn;
using glnn::testing::map_tanh_to_logistic;
using glnn::testing::random_instance;
using glnn::testing::writing_fisher_matrix;

namespace {

SymbolStats stats_of(const SymbolSequence& seq, int alphabet_size) {
    SymbolStats s;
    s.nu = Vector::Zero(alphabet_size);
    s.nu_tilde = Vector::Zero(alphabet_size);
    for (std::size_t t = 0; t < seq.tokens.size(); ++t) {
        s.nu_tilde[seq.tokens[t]] += 1.0;
        if (seq.mask[t]) {
            s.nu[seq.tokens[t]] += 1.0;
            ++s.masked_count;
        }
    }
    s.total_count = seq.size();
    s.nu /= static_cast<Scalar>(s.masked_count);
    s.nu_tilde /= static_cast<Scalar>(s.total_count);
    return s;
}

}  // namespace

TEST_CASE("one-hot predictions reduce the writing Hessian terms to the dampening") {
    const auto inst = random_instance(ModelKind::GLNN, 60, 4, 8, 3);
    TrajectoryTape tape = forward(inst.params, inst.seq);
    for (Index t = 0; t < tape.length(); ++t) {
        tape.pi.col(t).setZero();
        tape.pi(inst.seq.tokens[static_cast<std::size_t>(t)], t) = 1.0;
    }
    const SymbolStats stats = stats_of(inst.seq, inst.params.alphabet_size());
    const WritingMetricTerms terms = writing_hessian_terms(tape, inst.seq, stats);
    for (Index y = 0; y < terms.diag.cols(); ++y) {
        for (Index i = 0; i < terms.diag.rows(); ++i)
            CHECK(terms.diag(i, y) == doctest::Approx(terms.eps[y]).epsilon(1e-15));
        for (Index i = 1; i < terms.row0.rows(); ++i) CHECK(terms.row0(i, y) == 0.0);
    }
}

TEST_CASE("writing Hessian terms match the explicit Fisher matrix") {
    for (std::uint64_t seed = 70; seed < 76; ++seed) {
        const auto inst = random_instance(ModelKind::GLNN, seed, 4, 8, 3);
        const TrajectoryTape tape = forward(inst.params, inst.seq);
        const SymbolStats stats = stats_of(inst.seq, inst.params.alphabet_size());
        const WritingMetricTerms terms = writing_hessian_terms(tape, inst.seq, stats);
        const Matrix fisher = writing_fisher_matrix(tape, inst.seq);
        const Index n = inst.params.units();
        for (Index y = 0; y < inst.params.alphabet_size(); ++y) {
            for (Index i = 0; i <= n; ++i) {
                const Index p = y * (n + 1) + i;
                CHECK(terms.diag(i, y) ==
                      doctest::Approx(fisher(p, p) + terms.eps[y]).epsilon(1e-10));
                if (i > 0)
                    CHECK(terms.row0(i, y) ==
                          doctest::Approx(fisher(y * (n + 1), p)).epsilon(1e-10));
            }
        }
    }
}

TEST_CASE("quasi-diagonal writing update is a no-op on zero gradients") {
    const auto inst = random_instance(ModelKind::GNN, 77, 4, 8, 3);
    const TrajectoryTape tape = forward(inst.params, inst.seq);
    const SymbolStats stats = stats_of(inst.seq, inst.params.alphabet_size());
    const WritingMetricTerms terms = writing_hessian_terms(tape, inst.seq, stats);
    const Matrix zero = Matrix::Zero(inst.params.w.rows(), inst.params.w.cols());
    const Matrix updated = qd_writing_update(inst.params.w, zero, terms, 0.5);
    CHECK((updated - inst.params.w).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("qd_solve is a Newton step when only the always-on unit exists") {
    Vector g(1), diag(1), row0(1);
    g << 3.0;
    diag << 2.0;
    row0 << 2.0;
    const Vector delta = qd_solve(g, diag, row0);
    CHECK(delta[0] == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("qd_solve equals the dense bordered inverse in the two-unit case") {
    Rng rng(5);
    for (int rep = 0; rep < 10; ++rep) {
        Vector diag(2), row0(2), g(2);
        diag << 1.0 + rng.uniform_real(), 1.0 + rng.uniform_real();
        row0 << diag[0], 0.5 * (2.0 * rng.uniform_real() - 1.0);
        g << 2.0 * rng.uniform_real() - 1.0, 2.0 * rng.uniform_real() - 1.0;
        Matrix bordered(2, 2);
        bordered << diag[0], row0[1], row0[1], diag[1];
        const Vector qd = qd_solve(g, diag, row0);
        const Vector dense = bordered.ldlt().solve(g);
        CHECK((qd - dense).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("qd_solve satisfies the bias row of larger arrow systems exactly") {
    Rng rng(6);
    for (int rep = 0; rep < 10; ++rep) {
        const Index m = 3 + static_cast<Index>(rng.uniform_u64(3));
        Vector diag(m), row0(m), g(m);
        for (Index i = 0; i < m; ++i) {
            diag[i] = 1.0 + rng.uniform_real();
            row0[i] = 0.5 * (2.0 * rng.uniform_real() - 1.0);
            g[i] = 2.0 * rng.uniform_real() - 1.0;
        }
        row0[0] = diag[0];
        const Vector delta = qd_solve(g, diag, row0);
        Scalar lhs = diag[0] * delta[0];
        for (Index i = 1; i < m; ++i) lhs += row0[i] * delta[i];
        CHECK(lhs == doctest::Approx(g[0]).epsilon(1e-12));
    }
}

TEST_CASE("qd_solve reduces to coordinate division for diagonal metrics") {
    Vector g(3), diag(3), row0(3);
    g << 1.0, 2.0, 3.0;
    diag << 2.0, 4.0, 5.0;
    row0 << 2.0, 0.0, 0.0;
    const Vector delta = qd_solve(g, diag, row0);
    CHECK(delta[0] == doctest::Approx(0.5));
    CHECK(delta[1] == doctest::Approx(0.5));
    CHECK(delta[2] == doctest::Approx(0.6));
}

TEST_CASE("ruop modulus is the squared backward value") {
    const auto inst = random_instance(ModelKind::GLNN, 80);
    const TrajectoryTape tape = forward(inst.params, inst.seq);
    BackwardPass bp;
    bp.B = Matrix::Zero(inst.params.units(), tape.length() + 1);
    CHECK(ruop_modulus(bp).m.cwiseAbs().maxCoeff() == 0.0);
    bp.B.setConstant(-2.0);
    CHECK(ruop_modulus(bp).m.minCoeff() == 4.0);
}

TEST_CASE("rbpm modulus vanishes without writing weights and transitions") {
    auto inst = random_instance(ModelKind::GLNN, 81);
    inst.params.w.setZero();
    for (auto& t : inst.params.tau) t.setZero();
    const TrajectoryTape tape = forward(inst.params, inst.seq);
    const ModulusField mod = rbpm_modulus(inst.params, tape, inst.seq);
    CHECK(mod.m.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single-step rbpm modulus is the output variance term") {
    const auto inst = random_instance(ModelKind::GLNN, 82);
    SymbolSequence seq;
    seq.tokens = {0};
    seq.mask = {1};
    const TrajectoryTape tape = forward(inst.params, seq);
    const ModulusField mod = rbpm_modulus(inst.params, tape, seq);
    for (Index i = 0; i < inst.params.units(); ++i) {
        const Scalar sp = inst.params.activation.derivative_from_activity(tape.a(i, 0));
        const Scalar var =
            fisher_output_norm(tape.pi.col(0), inst.params.w.row(i + 1).transpose());
        CHECK(mod.m(i, 0) == doctest::Approx(sp * sp * var).epsilon(1e-12));
    }
    CHECK(mod.m.col(1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("metric blocks with a zero modulus are pure dampening") {
    const auto inst = random_instance(ModelKind::GLNN, 83, 4, 8, 3);
    const TrajectoryTape tape = forward(inst.params, inst.seq);
    ModulusField mod;
    mod.m = Matrix::Zero(inst.params.units(), tape.length() + 1);
    const MetricBlocks blocks = metric_block_accumulate(inst.params, tape, mod, inst.seq, 1.0);
    for (const auto& per_unit : blocks.block)
        for (const auto& m : per_unit) {
            CHECK((m - Matrix::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff() == 0.0);
        }
}

TEST_CASE("dampened_solve recovers the right-hand side") {
    CHECK((dampened_solve(Matrix::Identity(3, 3), Vector::Ones(3), 1.0) - Vector::Ones(3))
              .cwiseAbs()
              .maxCoeff() <= 1e-14);
    Matrix two = 2.0 * Matrix::Identity(2, 2);
    Vector g(2);
    g << 4.0, 6.0;
    const Vector x = dampened_solve(two, g, 1.0);
    CHECK(x[0] == doctest::Approx(2.0));
    CHECK(x[1] == doctest::Approx(3.0));

    Rng rng(9);
    for (int rep = 0; rep < 10; ++rep) {
        Matrix a(5, 5);
        for (Index i = 0; i < 5; ++i)
            for (Index j = 0; j < 5; ++j) a(i, j) = 2.0 * rng.uniform_real() - 1.0;
        Matrix spd = a * a.transpose() + Matrix::Identity(5, 5);
        Vector rhs(5);
        for (Index i = 0; i < 5; ++i) rhs[i] = 2.0 * rng.uniform_real() - 1.0;
        const Vector x5 = dampened_solve(spd, rhs, 1.0);
        CHECK((spd * x5 - rhs).norm() <= 1e-10 * std::max(1.0, rhs.norm()));
    }
}

TEST_CASE("fisher_output_norm is the pi-variance of dE") {
    Vector pi(3);
    pi << 0.2, 0.5, 0.3;
    CHECK(std::abs(fisher_output_norm(pi, Vector::Constant(3, 4.2))) <= 1e-12);

    Vector unif(2), de(2);
    unif << 0.5, 0.5;
    de << 1.0, -1.0;
    CHECK(fisher_output_norm(unif, de) == doctest::Approx(1.0).epsilon(1e-14));

    // against the expectation of (delta log pi)^2 via the softmax Jacobian
    Rng rng(3);
    for (int rep = 0; rep < 10; ++rep) {
        Vector p(4), d(4);
        for (Index y = 0; y < 4; ++y) p[y] = 0.1 + rng.uniform_real();
        p /= p.sum();
        for (Index y = 0; y < 4; ++y) d[y] = 2.0 * rng.uniform_real() - 1.0;
        Scalar expect = 0.0;
        for (Index y = 0; y < 4; ++y) {
            Scalar dlog = 0.0;
            for (Index yp = 0; yp < 4; ++yp)
                dlog += ((y == yp ? 1.0 : 0.0) - p[yp]) * d[yp];
            expect += p[y] * dlog * dlog;
        }
        CHECK(fisher_output_norm(p, d) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("streaming metrics equal the time-unfolding oracle") {
    int checked = 0;
    for (std::uint64_t seed = 0; seed < 24; ++seed) {
        const auto inst = random_instance(ModelKind::GLNN, 400 + seed, 4, 8, 4);
        const TrajectoryTape tape = forward(inst.params, inst.seq);
        const BackwardPass bp = backward(inst.params, tape, inst.seq);
        for (const MetricKind kind : {MetricKind::RUOP, MetricKind::RBPM}) {
            const ModulusField mod = compute_modulus(kind, inst.params, tape, inst.seq, bp);
            const MetricBlocks streaming =
                metric_block_accumulate(inst.params, tape, mod, inst.seq, 0.0);
            const UnfoldedMetric oracle = unfolding_oracle(inst.params, inst.seq, kind);
            for (std::size_t j = 0; j < streaming.block.size(); ++j)
                for (std::size_t y = 0; y < streaming.block[j].size(); ++y) {
                    const Matrix diff = streaming.block[j][y] - oracle.block[j][y];
                    const Scalar scale =
                        std::max(1.0, oracle.block[j][y].cwiseAbs().maxCoeff());
                    CHECK(diff.cwiseAbs().maxCoeff() <= 1e-10 * scale);
                }
        }
        ++checked;
    }
    CHECK(checked >= 20);
}

TEST_CASE("unfolded metric has no cross-symbol terms for gated models") {
    for (const ModelKind kind : {ModelKind::GLNN, ModelKind::GNN}) {
        const auto inst = random_instance(kind, 91, 4, 8, 3);
        const UnfoldedMetric oracle = unfolding_oracle(inst.params, inst.seq, MetricKind::RBPM);
        const Index A = inst.params.alphabet_size();
        for (Index j = 0; j < inst.params.units(); ++j) {
            const Index dj = inst.params.topology.in_degree(static_cast<int>(j)) + 1;
            const Matrix& full = oracle.full[static_cast<std::size_t>(j)];
            for (Index y = 0; y < A; ++y)
                for (Index yp = 0; yp < A; ++yp) {
                    if (y == yp) continue;
                    CHECK(full.block(y * dj, yp * dj, dj, dj).cwiseAbs().maxCoeff() == 0.0);
                }
        }
    }
}

TEST_CASE("undampened metric blocks are positive semidefinite") {
    for (std::uint64_t seed = 430; seed < 436; ++seed) {
        const auto inst = random_instance(ModelKind::GLNN, seed, 4, 8, 3);
        const TrajectoryTape tape = forward(inst.params, inst.seq);
        const BackwardPass bp = backward(inst.params, tape, inst.seq);
        const ModulusField mod = rbpm_modulus(inst.params, tape, inst.seq);
        const MetricBlocks blocks = metric_block_accumulate(inst.params, tape, mod, inst.seq, 0.0);
        for (const auto& per_unit : blocks.block)
            for (const auto& m : per_unit) {
                Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
                CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
            }
        (void)bp;
    }
}

TEST_CASE("quasi-diagonal accumulators agree with the full blocks") {
    const auto inst = random_instance(ModelKind::GLNN, 92, 4, 8, 3);
    const TrajectoryTape tape = forward(inst.params, inst.seq);
    const BackwardPass bp = backward(inst.params, tape, inst.seq);
    const ModulusField mod = ruop_modulus(bp);
    const Scalar eps = 1.0;
    const MetricBlocks blocks = metric_block_accumulate(inst.params, tape, mod, inst.seq, eps);
    const QdBlocks qd = qd_block_accumulate(inst.params, tape, mod, inst.seq, eps);
    for (std::size_t j = 0; j < blocks.block.size(); ++j)
        for (std::size_t y = 0; y < blocks.block[j].size(); ++y) {
            const Matrix& full = blocks.block[j][y];
            for (Index k = 0; k < full.rows(); ++k) {
                CHECK(qd.diag[j](k, static_cast<Index>(y)) ==
                      doctest::Approx(full(k, k)).epsilon(1e-12));
                // row 0 of the full block is dampened only at its corner
                CHECK(qd.row0[j](k, static_cast<Index>(y)) ==
                      doctest::Approx(full(0, k)).epsilon(1e-12));
            }
        }
}

TEST_CASE("rnn quasi-diagonal system matches the rnn unfolding oracle") {
    const auto inst = random_instance(ModelKind::RNN, 93, 4, 8, 3);
    const TrajectoryTape tape = forward(inst.params, inst.seq);
    const BackwardPass bp = backward(inst.params, tape, inst.seq);
    const ModulusField mod = rbpm_modulus(inst.params, tape, inst.seq);
    const RnnQdSystem sys = rnn_qd_accumulate(inst.params, tape, mod, inst.seq, 0.0);
    const UnfoldedMetric oracle = unfolding_oracle(inst.params, inst.seq, MetricKind::RBPM);
    for (Index j = 0; j < inst.params.units(); ++j) {
        const Matrix& full = oracle.full[static_cast<std::size_t>(j)];
        const Vector& diag = sys.diag[static_cast<std::size_t>(j)];
        const Vector& row0 = sys.row0[static_cast<std::size_t>(j)];
        for (Index k = 0; k < full.rows(); ++k) {
            CHECK(std::abs(diag[k] - full(k, k)) <= 1e-10 * std::max(1.0, full(k, k)));
            CHECK(std::abs(row0[k] - full(0, k)) <=
                  1e-10 * std::max(1.0, std::abs(full(0, k))));
        }
    }
    (void)bp;
}

TEST_CASE("oracle rejects instances beyond test scale") {
    const auto inst = random_instance(ModelKind::GLNN, 94);
    SymbolSequence longseq;
    longseq.tokens.assign(11, 0);
    longseq.mask.assign(11, 1);
    CHECK_THROWS(unfolding_oracle(inst.params, longseq, MetricKind::RUOP));
}

TEST_CASE("full writing Fisher matrix equals the finite-difference Hessian") {
    for (std::uint64_t seed = 500; seed < 510; ++seed) {
        const auto inst = random_instance(ModelKind::GLNN, seed, 3, 6, 3);
        const TrajectoryTape tape = forward(inst.params, inst.seq);
        const Matrix fisher = writing_fisher_matrix(tape, inst.seq);
        const Index n = inst.params.units();
        const Index A = inst.params.alphabet_size();
        const Scalar h = 1e-4;
        const Scalar fscale = fisher.cwiseAbs().maxCoeff();
        for (Index p = 0; p < fisher.rows(); ++p)
            for (Index q = p; q < fisher.cols(); ++q) {
                const ParamCoord cp{ParamFamily::Writing, static_cast<int>(p % (n + 1)), 0,
                                    static_cast<int>(p / (n + 1))};
                const ParamCoord cq{ParamFamily::Writing, static_cast<int>(q % (n + 1)), 0,
                                    static_cast<int>(q / (n + 1))};
                // d^2 L / dw_p dw_q by nested central differences
                const ModelParams pp = perturbed(inst.params, cp, h);
                const ModelParams pm = perturbed(inst.params, cp, -h);
                const Scalar hpq = (finite_diff_loglik(pp, inst.seq, cq, h) -
                                    finite_diff_loglik(pm, inst.seq, cq, h)) /
                                   (2.0 * h);
                const Scalar expect = -hpq;  // Fisher = negative Hessian
                const Scalar tol =
                    std::max(1e-4 * std::max(std::abs(expect), std::abs(fisher(p, q))),
                             2e-5 * std::max(1.0, fscale));
                CHECK(std::abs(fisher(p, q) - expect) <= tol);
            }
    }
}

TEST_CASE("undampened metric updates are invariant under tanh-logistic maps") {
    for (const MetricKind kind : {MetricKind::RUOP, MetricKind::RBPM}) {
        // a longer sequence keeps every block comfortably full-rank
        auto inst = random_instance(ModelKind::GLNN, 95, 3, 8, 2);
        Rng rng(77);
        inst.seq.tokens.clear();
        inst.seq.mask.clear();
        for (int t = 0; t < 60; ++t) {
            inst.seq.tokens.push_back(static_cast<int>(rng.uniform_u64(2)));
            inst.seq.mask.push_back(1);
        }
        const ModelParams& tanh_p = inst.params;
        const ModelParams logi_p = map_tanh_to_logistic(tanh_p);

        const Scalar eta = 0.05;
        const auto one_update = [&](const ModelParams& p) {
            const TrajectoryTape tape = forward(p, inst.seq);
            const BackwardPass bp = backward(p, tape, inst.seq);
            const TransitionGrad grad = transition_grad(p, tape, bp, inst.seq);
            const ModulusField mod = compute_modulus(kind, p, tape, inst.seq, bp);
            const MetricBlocks blocks =
                metric_block_accumulate(p, tape, mod, inst.seq, 0.0);
            ModelParams next = p;
            for (std::size_t j = 0; j < grad.tau.size(); ++j)
                for (Index y = 0; y < grad.tau[j].cols(); ++y)
                    next.tau[j].col(y) +=
                        eta * blocks.block[j][static_cast<std::size_t>(y)].ldlt().solve(
                                  grad.tau[j].col(y));
            next.v0 += eta * (bp.B.col(0).array() / mod.m.col(0).array()).matrix();
            return next;
        };

        const ModelParams tanh_next = one_update(tanh_p);
        const ModelParams logi_next = one_update(logi_p);
        const ModelParams mapped = map_tanh_to_logistic(tanh_next);

        const auto rel = [](Scalar a, Scalar b) {
            return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
        };
        for (std::size_t j = 0; j < mapped.tau.size(); ++j)
            for (Index k = 0; k < mapped.tau[j].rows(); ++k)
                for (Index y = 0; y < mapped.tau[j].cols(); ++y)
                    CHECK(rel(mapped.tau[j](k, y), logi_next.tau[j](k, y)) <= 1e-8);
        for (Index j = 0; j < mapped.v0.size(); ++j)
            CHECK(rel(mapped.v0[j], logi_next.v0[j]) <= 1e-8);
    }
}
