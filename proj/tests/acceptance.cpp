// Acceptance suite: one line per criterion, [PASS]/[FAIL], nonzero exit on
// any failure. Criteria 7-10 train at task scale with wall-clock caps and
// stop early once their target is met; pass specific criterion numbers as
// arguments to run a subset.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <set>
#include <string>
#include <vector>

#include "glnn/backprop.hpp"
#include "glnn/datagen.hpp"
#include "glnn/eval.hpp"
#include "glnn/init.hpp"
#include "glnn/metric.hpp"
#include "glnn/sweep.hpp"
#include "glnn/trainer.hpp"
#include "../tests/test_support.hpp"

using namespace glnn;
using glnn::testing::all_coords;
using glnn::testing::map_tanh_to_logistic;
using glnn::testing::random_instance;
using glnn::testing::writing_fisher_matrix;

int g_acceptance_failures = 0;

void acceptance_report(int criterion, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_acceptance_failures;
}

namespace {

void report(int criterion, bool pass, const std::string& detail) {
    acceptance_report(criterion, pass, detail);
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --- criterion 1: gradient oracle suite --------------------------------

void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    long coords_checked = 0;
    double worst = 0.0;
    bool pass = true;
    for (const ModelKind kind : {ModelKind::RNN, ModelKind::GNN, ModelKind::GLNN}) {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const auto inst = random_instance(kind, 1000 + seed * 7 +
                                                        static_cast<std::uint64_t>(kind) * 131);
            const TrajectoryTape tape = forward(inst.params, inst.seq);
            const BackwardPass bp = backward(inst.params, tape, inst.seq);
            const Matrix w_grad = writing_grad(tape, inst.seq);
            const TransitionGrad t_grad = transition_grad(inst.params, tape, bp, inst.seq);
            for (const ParamCoord& coord : all_coords(inst.params)) {
                Scalar analytic = 0.0;
                switch (coord.family) {
                    case ParamFamily::Writing:
                        analytic = w_grad(coord.unit, coord.symbol);
                        break;
                    case ParamFamily::Transition:
                        analytic = t_grad.tau[static_cast<std::size_t>(coord.unit)](
                            coord.slot, kind == ModelKind::RNN ? 0 : coord.symbol);
                        break;
                    case ParamFamily::Input:
                        analytic = t_grad.rho(coord.unit, coord.symbol);
                        break;
                    case ParamFamily::Startup:
                        analytic = bp.B(coord.unit, 0);
                        break;
                }
                const Scalar fd = finite_diff_loglik(inst.params, inst.seq, coord, 1e-5);
                const Scalar tol =
                    std::max(1e-6 * std::max(std::abs(fd), std::abs(analytic)), 1e-8);
                const Scalar err = std::abs(analytic - fd);
                worst = std::max(worst, err / tol);
                pass = pass && err <= tol;
                ++coords_checked;
            }
        }
    }
    const double secs = seconds_since(t0);
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "gradient oracle: %ld coordinates over 3 kinds x 20 instances, rel tol 1e-6 "
                  "(floor 1e-8), worst %.3g of tolerance, %.2f s (< 10 s)",
                  coords_checked, worst, secs);
    report(1, pass && secs < 10.0, buf);
}

// --- criterion 2: metric oracle suite ----------------------------------

void criterion_2() {
    const auto t0 = std::chrono::steady_clock::now();
    bool pass = true;
    double worst = 0.0;
    int instances = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto inst = random_instance(ModelKind::GLNN, 2000 + seed, 4, 8, 4);
        const TrajectoryTape tape = forward(inst.params, inst.seq);
        const BackwardPass bp = backward(inst.params, tape, inst.seq);
        for (const MetricKind kind : {MetricKind::RUOP, MetricKind::RBPM}) {
            const ModulusField mod = compute_modulus(kind, inst.params, tape, inst.seq, bp);
            const MetricBlocks streaming =
                metric_block_accumulate(inst.params, tape, mod, inst.seq, 0.0);
            const UnfoldedMetric oracle = unfolding_oracle(inst.params, inst.seq, kind);
            for (std::size_t j = 0; j < streaming.block.size(); ++j)
                for (std::size_t y = 0; y < streaming.block[j].size(); ++y) {
                    const Scalar scale =
                        std::max(1.0, oracle.block[j][y].cwiseAbs().maxCoeff());
                    const Scalar err =
                        (streaming.block[j][y] - oracle.block[j][y]).cwiseAbs().maxCoeff() /
                        scale;
                    worst = std::max(worst, err);
                    pass = pass && err <= 1e-10;
                }
        }
        ++instances;
    }
    // symbol-block orthogonality, exact, for both gated kinds
    bool ortho = true;
    for (const ModelKind kind : {ModelKind::GNN, ModelKind::GLNN}) {
        for (std::uint64_t seed = 0; seed < 4; ++seed) {
            const auto inst = random_instance(kind, 2500 + seed, 4, 8, 3);
            const UnfoldedMetric oracle =
                unfolding_oracle(inst.params, inst.seq, MetricKind::RBPM);
            const Index A = inst.params.alphabet_size();
            for (Index j = 0; j < inst.params.units(); ++j) {
                const Index dj = inst.params.topology.in_degree(static_cast<int>(j)) + 1;
                for (Index y = 0; y < A; ++y)
                    for (Index yp = 0; yp < A; ++yp)
                        if (y != yp)
                            ortho = ortho && oracle.full[static_cast<std::size_t>(j)]
                                                     .block(y * dj, yp * dj, dj, dj)
                                                     .cwiseAbs()
                                                     .maxCoeff() == 0.0;
            }
        }
    }
    const double secs = seconds_since(t0);
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "metric oracle: RUOP+RBPM vs unfolding on %d GLNN instances within 1e-10 "
                  "(worst %.3g), symbol-block orthogonality exact: %s, %.2f s (< 30 s)",
                  instances, worst, ortho ? "yes" : "NO", secs);
    report(2, pass && ortho && secs < 30.0, buf);
}

// --- criterion 3: writing-metric Hessian identity -----------------------

void criterion_3() {
    bool pass = true;
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto inst = random_instance(ModelKind::GLNN, 3000 + seed, 3, 6, 3);
        const TrajectoryTape tape = forward(inst.params, inst.seq);
        const Matrix fisher = writing_fisher_matrix(tape, inst.seq);
        const Index n = inst.params.units();
        const Scalar h = 1e-4;
        const Scalar fscale = std::max(1.0, fisher.cwiseAbs().maxCoeff());
        for (Index p = 0; p < fisher.rows(); ++p)
            for (Index q = p; q < fisher.cols(); ++q) {
                const ParamCoord cp{ParamFamily::Writing, static_cast<int>(p % (n + 1)), 0,
                                    static_cast<int>(p / (n + 1))};
                const ParamCoord cq{ParamFamily::Writing, static_cast<int>(q % (n + 1)), 0,
                                    static_cast<int>(q / (n + 1))};
                const Scalar hess = (finite_diff_loglik(perturbed(inst.params, cp, h),
                                                        inst.seq, cq, h) -
                                     finite_diff_loglik(perturbed(inst.params, cp, -h),
                                                        inst.seq, cq, h)) /
                                    (2.0 * h);
                const Scalar expect = -hess;
                const Scalar tol = std::max(
                    1e-4 * std::max(std::abs(expect), std::abs(fisher(p, q))), 2e-5 * fscale);
                const Scalar err = std::abs(fisher(p, q) - expect);
                worst = std::max(worst, err / tol);
                pass = pass && err <= tol;
            }
    }
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "Fisher matrix equals the finite-difference negative Hessian of the masked "
                  "log-likelihood (10 instances, rel tol 1e-4, worst %.3g of tolerance)",
                  worst);
    report(3, pass, buf);
}

// --- criterion 4: affine invariance -------------------------------------

void criterion_4() {
    bool pass = true;
    double worst = 0.0;
    for (const MetricKind kind : {MetricKind::RUOP, MetricKind::RBPM}) {
        auto inst = random_instance(ModelKind::GLNN, 4000 + (kind == MetricKind::RBPM), 3, 8, 2);
        Rng rng(4100);
        inst.seq.tokens.clear();
        inst.seq.mask.clear();
        for (int t = 0; t < 60; ++t) {
            inst.seq.tokens.push_back(static_cast<int>(rng.uniform_u64(2)));
            inst.seq.mask.push_back(1);
        }
        const ModelParams logi = map_tanh_to_logistic(inst.params);
        const Scalar eta = 0.05;
        const auto one_update = [&](const ModelParams& p) {
            const TrajectoryTape tape = forward(p, inst.seq);
            const BackwardPass bp = backward(p, tape, inst.seq);
            const TransitionGrad grad = transition_grad(p, tape, bp, inst.seq);
            const ModulusField mod = compute_modulus(kind, p, tape, inst.seq, bp);
            const MetricBlocks blocks = metric_block_accumulate(p, tape, mod, inst.seq, 0.0);
            ModelParams next = p;
            for (std::size_t j = 0; j < grad.tau.size(); ++j)
                for (Index y = 0; y < grad.tau[j].cols(); ++y)
                    next.tau[j].col(y) += eta * blocks.block[j][static_cast<std::size_t>(y)]
                                                     .ldlt()
                                                     .solve(grad.tau[j].col(y));
            next.v0 += eta * (bp.B.col(0).array() / mod.m.col(0).array()).matrix();
            return next;
        };
        const ModelParams mapped = map_tanh_to_logistic(one_update(inst.params));
        const ModelParams direct = one_update(logi);
        const auto rel = [](Scalar a, Scalar b) {
            return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
        };
        for (std::size_t j = 0; j < mapped.tau.size(); ++j)
            for (Index k = 0; k < mapped.tau[j].rows(); ++k)
                for (Index y = 0; y < mapped.tau[j].cols(); ++y) {
                    const Scalar err = rel(mapped.tau[j](k, y), direct.tau[j](k, y));
                    worst = std::max(worst, err);
                    pass = pass && err <= 1e-8;
                }
        for (Index j = 0; j < mapped.v0.size(); ++j) {
            const Scalar err = rel(mapped.v0[j], direct.v0[j]);
            worst = std::max(worst, err);
            pass = pass && err <= 1e-8;
        }
    }
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "undampened RUOP and RBPM updates agree across the tanh-logistic affine "
                  "correspondence within 1e-8 relative (worst %.3g)",
                  worst);
    report(4, pass, buf);
}

// --- criterion 5: monotone training --------------------------------------

bool log_is_monotone(const std::vector<StepLog>& log) {
    Scalar last = -std::numeric_limits<Scalar>::infinity();
    for (const StepLog& e : log) {
        if (e.phase == 'v' || e.stalled) continue;
        if (e.train_bits < last - 1e-9) return false;
        last = e.train_bits;
    }
    return true;
}

void criterion_5() {
    // 200 alternating steps on a 50-line alphabet-task corpus
    const GeneratedCorpus corpus = gen_alphabet(50, 17);
    const SymbolStats stats = compute_stats(corpus.train, corpus.alphabet);
    const ModelParams initial =
        glnn_init(build_random_graph(16, 3, 17), corpus.alphabet, stats,
                  InitPlan::for_activation(ActivationFunction::tanh_fn(), 17));
    TrainerConfig config;
    config.rule_tau = TransitionRule::RBPM;
    config.max_steps = 200;
    const TrainState state = train(config, initial, corpus.train, corpus.valid);
    const bool pass = state.steps_done == 200 && log_is_monotone(state.log);
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "training log-likelihood non-decreasing across %ld accepted steps "
                  "(stalls: %ld)",
                  state.steps_done, state.stall_events);
    report(5, pass, buf);
}

// --- criterion 6: Appendix A regime --------------------------------------

void criterion_6() {
    const Alphabet ab = build_alphabet("abcd");
    SymbolSequence seq;
    Rng rng(6001);
    for (int t = 0; t < 200; ++t) {
        seq.tokens.push_back(static_cast<int>(rng.uniform_u64(4)));
        seq.mask.push_back(1);
    }
    const SymbolStats stats = compute_stats(seq, ab);
    const InitPlan plan = InitPlan::for_activation(ActivationFunction::tanh_fn(), 61);
    const int unit = 7;  // schedule unit 8

    // noisy init vs the linearized prediction
    const ModelParams noisy = glnn_init(build_random_graph(8, 1, 13), ab, stats, plan);
    Vector rho_hist(200);
    for (int t = 0; t < 200; ++t)
        rho_hist[t] =
            (noisy.tau[unit](0, seq.tokens[static_cast<std::size_t>(t)]) - plan.beta(unit)) /
            plan.noise_scale(unit);
    const Vector predicted = linearized_prediction(plan, unit, rho_hist);
    const TrajectoryTape tape = forward(noisy, seq);
    Scalar max_dev = 0.0;
    for (Index t = 0; t < 200; ++t)
        max_dev = std::max(max_dev,
                           std::abs(std::atanh(tape.a(unit, t)) - predicted[t]));
    const Scalar eps = plan.noise_scale(unit);
    const bool linear_ok = max_dev <= 8.0 * eps * eps;

    // noise off: exact fixed point for every unit
    InitPlan frozen = plan;
    frozen.noise = false;
    const ModelParams still = glnn_init(build_random_graph(8, 1, 13), ab, stats, frozen);
    const TrajectoryTape tape2 = forward(still, seq);
    Scalar drift = 0.0;
    for (int j = 0; j < 8; ++j) {
        const Scalar abar = frozen.beta(j) / frozen.alpha;
        for (Index t = 0; t < tape2.length(); ++t)
            drift = std::max(drift, std::abs(tape2.a(j, t) - abar));
    }
    const bool fixed_ok = drift <= 1e-12;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "linearized regime at schedule unit 8: max deviation %.3g <= 8 eps^2 = %.3g "
                  "over 200 steps; zero-noise drift %.3g (<= 1e-12)",
                  max_dev, 8.0 * eps * eps, drift);
    report(6, linear_ok && fixed_ok, buf);
}

// --- criterion 11: oracle self-consistency --------------------------------

void criterion_11() {
    const GeneratedCorpus corpora[] = {
        gen_alphabet(200, 11),
        gen_music(300, 11),
        gen_xor(100, 40, 11),
        gen_anbn(10, 1024, 2048, 11),
    };
    bool rescored = true;
    for (const auto& corpus : corpora)
        rescored = rescored &&
                   rescore_bits(corpus.valid, corpus.valid_prob) == corpus.oracle_bits_valid &&
                   rescore_bits(corpus.train, corpus.train_prob) == corpus.oracle_bits_train;
    const Scalar anbn_expect = -10.0 * std::log2(1025.0);
    const Scalar anbn_got = corpora[3].oracle_bits_valid;
    const bool anbn_ok = std::abs(anbn_got - anbn_expect) <= 1e-6;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "per-position re-scoring reproduces recorded oracles exactly on all four "
                  "generators; a^n b^n oracle %.4f = 10 log2(1025) = %.4f bits",
                  -anbn_got, -anbn_expect);
    report(11, rescored && anbn_ok, buf);
}

}  // namespace

// training criteria 7-10 are appended below
void criterion_7();
void criterion_8();
void criterion_9();
void criterion_10();

int main(int argc, char** argv) {
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
    const auto enabled = [&](int c) { return wanted.empty() || wanted.count(c) > 0; };

    if (enabled(1)) criterion_1();
    if (enabled(2)) criterion_2();
    if (enabled(3)) criterion_3();
    if (enabled(4)) criterion_4();
    if (enabled(5)) criterion_5();
    if (enabled(6)) criterion_6();
    if (enabled(7)) criterion_7();
    if (enabled(8)) criterion_8();
    if (enabled(9)) criterion_9();
    if (enabled(10)) criterion_10();
    if (enabled(11)) criterion_11();

    std::printf("%s\n", g_acceptance_failures == 0 ? "all acceptance criteria passed"
                                                  : "ACCEPTANCE FAILURES PRESENT");
    return g_acceptance_failures == 0 ? 0 : 1;
}
