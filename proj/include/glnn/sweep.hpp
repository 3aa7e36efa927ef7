#pragma once

#include <optional>
#include <string>
#include <vector>

#include "glnn/datagen.hpp"
#include "glnn/trainer.hpp"

namespace glnn {

/// Everything that pins one reproducible run.
struct ExperimentManifest {
    std::string task = "anbn";       // alphabet | music | xor | anbn
    TaskParams gen;                  // zero fields fall back to task defaults
    std::uint64_t data_seed = 1;
    ModelKind model = ModelKind::GLNN;
    ActivationKind activation = ActivationKind::Tanh;
    WritingRule rule_w = WritingRule::QDH;
    TransitionRule rule_tau = TransitionRule::RBPM;
    int units = 16;
    std::string connectivity = "sparse";  // sparse | semi | full
    std::uint64_t graph_seed = 1;
    std::uint64_t init_seed = 1;
    Scalar budget_sec = 0.0;
    long max_steps = -1;
    Scalar block_eps = 1.0;
    int max_halvings = 30;
    Scalar rms_decay = 0.9;
    Scalar rms_floor = 1e-8;

    int resolved_connectivity(int alphabet_size) const;
    TrainerConfig trainer_config() const;
    std::string to_json() const;
    std::string hash() const;  // content hash of the canonical json
};

struct RunResult {
    ExperimentManifest manifest;
    std::string manifest_hash;
    bool failed = false;
    std::string error;
    Scalar best_valid_bits = 0.0;
    long best_step = -1;
    Scalar oracle_bits = 0.0;
    Scalar regret_bits = 0.0;
    Scalar classification_error = -1.0;  // xor task only
    long steps = 0;
    double wall_sec = 0.0;
    std::vector<StepLog> log;
};

/// Train one manifest on a pre-generated corpus; optionally writes
/// manifest.json, curve.csv, result.json and best_model.json to out_dir.
RunResult run_experiment(const ExperimentManifest& manifest, const GeneratedCorpus& corpus,
                         const std::string& out_dir = "",
                         const std::function<bool(const TrainState&)>& should_stop = {});

struct SweepSpec {
    std::string task = "anbn";
    TaskParams gen;
    std::uint64_t data_seed = 1;
    std::vector<ModelKind> models = {ModelKind::GLNN};
    std::vector<std::pair<WritingRule, TransitionRule>> rules = {
        {WritingRule::QDH, TransitionRule::RBPM}};
    int max_units = 64;
    std::vector<std::string> connectivities = {"sparse", "semi"};
    Scalar budget_sec = 60.0;
    long max_steps = -1;
    std::uint64_t run_seed = 1;
    int workers = 1;
};

/// Network sizes 4 * sqrt(2)^k rounded, up to max_units.
std::vector<int> size_schedule(int max_units);

/// Runs every (size, connectivity, model, rule) combination on one shared
/// corpus, each with the same budget; failures are recorded, the sweep
/// continues. Results come back sorted by manifest hash.
std::vector<RunResult> run_sweep(const SweepSpec& spec, const std::string& out_dir = "");

void write_sweep_csv(const std::vector<RunResult>& results, const std::string& path);
void write_curve_csv(const std::vector<StepLog>& log, const std::string& path);

}  // namespace glnn
