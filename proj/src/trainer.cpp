#include "glnn/trainer.hpp"

#include <chrono>
#include <cmath>

#include "glnn/eval.hpp"

namespace glnn {

std::string to_string(WritingRule r) { return r == WritingRule::QDH ? "qdh" : "dh"; }

std::string to_string(TransitionRule r) {
    switch (r) {
        case TransitionRule::RUOP: return "ruop";
        case TransitionRule::RBPM: return "rbpm";
        case TransitionRule::QDRUOP: return "qdruop";
        case TransitionRule::QDRBPM: return "qdrbpm";
        case TransitionRule::FB: return "fb";
        case TransitionRule::RMS: return "rms";
    }
    return "?";
}

WritingRule writing_rule_from_string(const std::string& s) {
    if (s == "qdh") return WritingRule::QDH;
    if (s == "dh") return WritingRule::DH;
    throw std::invalid_argument("unknown writing rule: " + s);
}

TransitionRule transition_rule_from_string(const std::string& s) {
    if (s == "ruop") return TransitionRule::RUOP;
    if (s == "rbpm") return TransitionRule::RBPM;
    if (s == "qdruop") return TransitionRule::QDRUOP;
    if (s == "qdrbpm") return TransitionRule::QDRBPM;
    if (s == "fb") return TransitionRule::FB;
    if (s == "rms") return TransitionRule::RMS;
    throw std::invalid_argument("unknown transition rule: " + s);
}

namespace {

constexpr Scalar kNegInf = -std::numeric_limits<Scalar>::infinity();

double ms_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

Scalar safe_loglik(const ModelParams& params, const SymbolSequence& seq) {
    try {
        return forward_loglik(params, seq);
    } catch (const DivergentDynamics&) {
        return kNegInf;
    }
}

MetricKind metric_kind_of(TransitionRule r) {
    return (r == TransitionRule::RUOP || r == TransitionRule::QDRUOP) ? MetricKind::RUOP
                                                                      : MetricKind::RBPM;
}

}  // namespace

LineSearchOutcome line_search_accept(Scalar base_ll, Scalar eta, int max_halvings,
                                     const std::function<Scalar(Scalar)>& eval) {
    LineSearchOutcome out;
    out.eta = eta;
    for (int k = 0; k <= max_halvings; ++k) {
        const Scalar ll = eval(out.eta);
        if (ll >= base_ll) {
            out.accepted = true;
            out.halvings = k;
            out.ll = ll;
            out.eta *= 1.1;
            return out;
        }
        if (k < max_halvings) out.eta /= 2.0;
    }
    out.accepted = false;
    out.halvings = max_halvings;
    out.ll = base_ll;
    return out;
}

TauDirection fb_direction(const ModelParams& params, const TransitionGrad& grad,
                          const Vector& nu_tilde) {
    TauDirection dir;
    dir.tau = grad.tau;
    if (params.kind == ModelKind::RNN) {
        dir.rho = grad.rho;
        for (Index y = 0; y < dir.rho.cols(); ++y)
            if (nu_tilde[y] > 0.0) dir.rho.col(y) /= nu_tilde[y];
    } else {
        for (auto& g : dir.tau)
            for (Index y = 0; y < g.cols(); ++y)
                if (nu_tilde[y] > 0.0) g.col(y) /= nu_tilde[y];
    }
    return dir;
}

TauDirection rms_direction(const ModelParams& params, const TransitionGrad& grad,
                           TrainState& state, Scalar decay, Scalar floor) {
    if (state.rms_tau.empty()) {
        for (const auto& g : grad.tau) state.rms_tau.push_back(Matrix::Zero(g.rows(), g.cols()));
        if (params.kind == ModelKind::RNN)
            state.rms_rho = Matrix::Zero(grad.rho.rows(), grad.rho.cols());
    }
    TauDirection dir;
    dir.tau.reserve(grad.tau.size());
    for (std::size_t j = 0; j < grad.tau.size(); ++j) {
        Matrix& r = state.rms_tau[j];
        r = decay * r + (1.0 - decay) * grad.tau[j].array().square().matrix();
        dir.tau.push_back(
            (grad.tau[j].array() / (r.array().sqrt() + floor)).matrix());
    }
    if (params.kind == ModelKind::RNN) {
        state.rms_rho =
            decay * state.rms_rho + (1.0 - decay) * grad.rho.array().square().matrix();
        dir.rho = (grad.rho.array() / (state.rms_rho.array().sqrt() + floor)).matrix();
    }
    return dir;
}

void w_phase(const TrainerConfig& config, TrainState& state, const SymbolSequence& seq,
             const SymbolStats& stats) {
    const auto t0 = std::chrono::steady_clock::now();
    const TrajectoryTape tape = forward(state.params, seq);
    const Matrix w_grad = writing_grad(tape, seq);
    const WritingMetricTerms terms = writing_hessian_terms(tape, seq, stats);

    Matrix direction(w_grad.rows(), w_grad.cols());
    if (config.rule_w == WritingRule::QDH) {
        for (Index y = 0; y < w_grad.cols(); ++y)
            direction.col(y) = qd_solve(w_grad.col(y), terms.diag.col(y), terms.row0.col(y));
    } else {
        direction = (w_grad.array() / terms.diag.array()).matrix();
    }

    ModelParams candidate = state.params;
    const auto outcome = line_search_accept(
        tape.masked_ll_nats, state.eta_w, config.max_halvings, [&](Scalar eta) {
            candidate.w = state.params.w + eta * direction;
            return safe_loglik(candidate, seq);
        });

    StepLog entry;
    entry.step = state.steps_done + 1;
    entry.phase = 'w';
    entry.halvings = outcome.halvings;
    entry.stalled = !outcome.accepted;
    state.eta_w = outcome.eta;
    if (outcome.accepted) {
        state.params.w = std::move(candidate.w);  // exactly the evaluated candidate
        entry.train_bits = nats_to_bits(outcome.ll);
    } else {
        ++state.stall_events;
        entry.train_bits = nats_to_bits(tape.masked_ll_nats);
    }
    entry.eta_w = state.eta_w;
    entry.eta_tau = state.eta_tau;
    entry.wall_ms = ms_since(t0);
    state.log.push_back(entry);
}

void tau_phase(const TrainerConfig& config, TrainState& state, const SymbolSequence& seq,
               const SymbolStats& stats) {
    const auto t0 = std::chrono::steady_clock::now();
    ModelParams& params = state.params;
    const bool gated = params.kind != ModelKind::RNN;
    const bool leaky = params.kind == ModelKind::GLNN;

    const TrajectoryTape tape = forward(params, seq);
    const BackwardPass bp = backward(params, tape, seq);
    const TransitionGrad grad = transition_grad(params, tape, bp, seq);

    TauDirection dir;
    switch (config.rule_tau) {
        case TransitionRule::RUOP:
        case TransitionRule::RBPM: {
            if (!gated)
                throw std::invalid_argument(
                    "full-block metrics are quadratic in the alphabet for RNNs; use the "
                    "quasi-diagonal reductions");
            const ModulusField mod =
                compute_modulus(metric_kind_of(config.rule_tau), params, tape, seq, bp);
            const MetricBlocks blocks =
                metric_block_accumulate(params, tape, mod, seq, config.block_eps);
            dir.tau.reserve(grad.tau.size());
            for (std::size_t j = 0; j < grad.tau.size(); ++j) {
                Matrix d(grad.tau[j].rows(), grad.tau[j].cols());
                for (Index y = 0; y < d.cols(); ++y)
                    d.col(y) = dampened_solve(blocks.block[j][static_cast<std::size_t>(y)],
                                              grad.tau[j].col(y), config.block_eps);
                dir.tau.push_back(std::move(d));
            }
            if (leaky)
                dir.v0 = (bp.B.col(0).array() /
                          (mod.m.col(0).array() + config.block_eps))
                             .matrix();
            break;
        }
        case TransitionRule::QDRUOP:
        case TransitionRule::QDRBPM: {
            const ModulusField mod =
                compute_modulus(metric_kind_of(config.rule_tau), params, tape, seq, bp);
            if (gated) {
                const QdBlocks qd = qd_block_accumulate(params, tape, mod, seq, config.block_eps);
                dir.tau.reserve(grad.tau.size());
                for (std::size_t j = 0; j < grad.tau.size(); ++j) {
                    Matrix d(grad.tau[j].rows(), grad.tau[j].cols());
                    for (Index y = 0; y < d.cols(); ++y)
                        d.col(y) = qd_solve(grad.tau[j].col(y), qd.diag[j].col(y),
                                            qd.row0[j].col(y));
                    dir.tau.push_back(std::move(d));
                }
                if (leaky)
                    dir.v0 = (bp.B.col(0).array() /
                              (mod.m.col(0).array() + config.block_eps))
                                 .matrix();
            } else {
                const RnnQdSystem sys = rnn_qd_accumulate(params, tape, mod, seq, config.block_eps);
                dir.rho = Matrix::Zero(grad.rho.rows(), grad.rho.cols());
                dir.tau.reserve(grad.tau.size());
                for (std::size_t j = 0; j < grad.tau.size(); ++j) {
                    const Index dj = grad.tau[j].rows();
                    Vector g(dj + grad.rho.cols());
                    g.head(dj) = grad.tau[j].col(0);
                    g.tail(grad.rho.cols()) = grad.rho.row(static_cast<Index>(j)).transpose();
                    const Vector sol = qd_solve(g, sys.diag[j], sys.row0[j]);
                    Matrix d(dj, 1);
                    d.col(0) = sol.head(dj);
                    dir.tau.push_back(std::move(d));
                    dir.rho.row(static_cast<Index>(j)) = sol.tail(grad.rho.cols()).transpose();
                }
            }
            break;
        }
        case TransitionRule::FB:
            dir = fb_direction(params, grad, stats.nu_tilde);
            if (leaky) dir.v0 = bp.B.col(0);
            break;
        case TransitionRule::RMS:
            dir = rms_direction(params, grad, state, config.rms_decay, config.rms_floor);
            if (leaky) dir.v0 = bp.B.col(0);
            break;
    }

    ModelParams candidate = params;
    const auto apply = [&](ModelParams& target, Scalar eta) {
        for (std::size_t j = 0; j < params.tau.size(); ++j)
            target.tau[j] = params.tau[j] + eta * dir.tau[j];
        if (dir.rho.size() > 0) target.rho = params.rho + eta * dir.rho;
        if (dir.v0.size() > 0) target.v0 = params.v0 + eta * dir.v0;
    };
    const auto outcome = line_search_accept(tape.masked_ll_nats, state.eta_tau,
                                            config.max_halvings, [&](Scalar eta) {
                                                apply(candidate, eta);
                                                return safe_loglik(candidate, seq);
                                            });

    StepLog entry;
    entry.step = state.steps_done + 1;
    entry.phase = 't';
    entry.halvings = outcome.halvings;
    entry.stalled = !outcome.accepted;
    state.eta_tau = outcome.eta;
    if (outcome.accepted) {
        params = std::move(candidate);  // exactly the evaluated candidate
        entry.train_bits = nats_to_bits(outcome.ll);
    } else {
        ++state.stall_events;
        entry.train_bits = nats_to_bits(tape.masked_ll_nats);
    }
    entry.eta_w = state.eta_w;
    entry.eta_tau = state.eta_tau;
    entry.wall_ms = ms_since(t0);
    state.log.push_back(entry);
}

TrainState train(const TrainerConfig& config, const ModelParams& initial,
                 const SymbolSequence& train_seq, const SymbolSequence& valid_seq,
                 const std::function<bool(const TrainState&)>& should_stop) {
    if (config.max_steps < 0 && config.budget_sec <= 0.0)
        throw std::invalid_argument("set a time or step budget");
    const auto t0 = std::chrono::steady_clock::now();
    TrainState state;
    state.params = initial;
    const Scalar eta0 = 1.0 / static_cast<Scalar>(initial.units());
    state.eta_w = config.eta_w0 > 0.0 ? config.eta_w0 : eta0;
    state.eta_tau = config.eta_tau0 > 0.0 ? config.eta_tau0 : eta0;
    const SymbolStats stats = [&] {
        SymbolStats s;
        s.nu = Vector::Zero(initial.alphabet_size());
        s.nu_tilde = Vector::Zero(initial.alphabet_size());
        for (Index t = 0; t < train_seq.size(); ++t) {
            s.nu_tilde[train_seq.tokens[static_cast<std::size_t>(t)]] += 1.0;
            if (train_seq.mask[static_cast<std::size_t>(t)]) {
                s.nu[train_seq.tokens[static_cast<std::size_t>(t)]] += 1.0;
                ++s.masked_count;
            }
        }
        s.total_count = train_seq.size();
        s.nu /= static_cast<Scalar>(s.masked_count);
        s.nu_tilde /= static_cast<Scalar>(s.total_count);
        return s;
    }();

    const auto score_validation = [&](long step) {
        const Scalar bits = regularized_validation_ll(state.params, valid_seq);
        if (bits > state.best_valid_bits) {
            state.best_valid_bits = bits;
            state.best_params = state.params;
            state.best_step = step;
        }
        return bits;
    };

    StepLog initial_entry;
    initial_entry.step = 0;
    initial_entry.phase = 'v';
    initial_entry.eta_w = state.eta_w;
    initial_entry.eta_tau = state.eta_tau;
    initial_entry.train_bits = nats_to_bits(safe_loglik(state.params, train_seq));
    initial_entry.valid_bits = score_validation(0);
    state.log.push_back(initial_entry);

    while (true) {
        if (config.max_steps >= 0 && state.steps_done >= config.max_steps) break;
        state.wall_sec = ms_since(t0) / 1000.0;
        if (config.budget_sec > 0.0 && state.wall_sec >= config.budget_sec) break;

        w_phase(config, state, train_seq, stats);
        tau_phase(config, state, train_seq, stats);
        ++state.steps_done;
        state.log.back().valid_bits = score_validation(state.steps_done);
        if (should_stop && should_stop(state)) break;
    }
    state.wall_sec = ms_since(t0) / 1000.0;
    return state;
}

}  // namespace glnn
