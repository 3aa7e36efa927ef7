#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "glnn/backprop.hpp"
#include "glnn/metric.hpp"

namespace glnn {

enum class WritingRule { QDH, DH };
enum class TransitionRule { RUOP, RBPM, QDRUOP, QDRBPM, FB, RMS };

std::string to_string(WritingRule r);
std::string to_string(TransitionRule r);
WritingRule writing_rule_from_string(const std::string& s);
TransitionRule transition_rule_from_string(const std::string& s);

struct TrainerConfig {
    WritingRule rule_w = WritingRule::QDH;
    TransitionRule rule_tau = TransitionRule::RBPM;
    Scalar eta_w0 = 0.0;    // 0 -> 1/N
    Scalar eta_tau0 = 0.0;  // 0 -> 1/N
    Scalar block_eps = 1.0;
    int max_halvings = 30;
    Scalar budget_sec = 0.0;  // <= 0: no time budget
    long max_steps = -1;      // < 0: no step budget; 0: score the initialization only
    Scalar rms_decay = 0.9;
    Scalar rms_floor = 1e-8;
};

struct StepLog {
    long step = 0;
    char phase = '?';  // 'v' initial validation, 'w', 't'
    Scalar eta_w = 0.0, eta_tau = 0.0;
    Scalar train_bits = 0.0;
    Scalar valid_bits = std::numeric_limits<Scalar>::quiet_NaN();
    double wall_ms = 0.0;
    bool stalled = false;
    int halvings = 0;
};

struct TrainState {
    ModelParams params;
    ModelParams best_params;
    Scalar best_valid_bits = -std::numeric_limits<Scalar>::infinity();
    long best_step = -1;
    Scalar eta_w = 0.0, eta_tau = 0.0;
    long steps_done = 0;
    long stall_events = 0;
    double wall_sec = 0.0;
    std::vector<StepLog> log;

    // running RMS of the transition gradients (RMS rule only)
    std::vector<Matrix> rms_tau;
    Matrix rms_rho;
};

/// Joint update direction of one transition phase.
struct TauDirection {
    std::vector<Matrix> tau;
    Matrix rho;
    Vector v0;
};

struct LineSearchOutcome {
    bool accepted = false;
    int halvings = 0;
    Scalar eta = 0.0;  // rate after the 1.1 growth (or after the last halving on stall)
    Scalar ll = 0.0;   // accepted candidate log-likelihood (nats); base_ll on stall
};

/// The halve-and-retry rule: candidates are the same direction rescaled.
/// `eval(eta)` returns the candidate's training log-likelihood (-inf for a
/// divergent candidate). Accepts the first non-decreasing candidate and
/// grows the rate by 1.1; gives up after max_halvings.
LineSearchOutcome line_search_accept(Scalar base_ll, Scalar eta, int max_halvings,
                                     const std::function<Scalar(Scalar)>& eval);

/// Non-invariant baseline: per-symbol gradients rescaled by 1/frequency.
TauDirection fb_direction(const ModelParams& params, const TransitionGrad& grad,
                          const Vector& nu_tilde);

/// Non-invariant baseline: gradients over the running root-mean-square.
/// Updates the EMA state in place.
TauDirection rms_direction(const ModelParams& params, const TransitionGrad& grad,
                           TrainState& state, Scalar decay, Scalar floor);

/// One writing-weight step with line-search acceptance.
void w_phase(const TrainerConfig& config, TrainState& state, const SymbolSequence& seq,
             const SymbolStats& stats);

/// One transition-weight (and startup-value) step with line-search acceptance.
void tau_phase(const TrainerConfig& config, TrainState& state, const SymbolSequence& seq,
               const SymbolStats& stats);

/// Alternating gradient ascent starting with a w step; validation is scored
/// with the regularized mixture after each full step and the best snapshot
/// kept. `should_stop` (optional) is polled after each full step.
TrainState train(const TrainerConfig& config, const ModelParams& initial,
                 const SymbolSequence& train_seq, const SymbolSequence& valid_seq,
                 const std::function<bool(const TrainState&)>& should_stop = {});

}  // namespace glnn
