#include "glnn/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "json.hpp"

#include "glnn/eval.hpp"
#include "glnn/init.hpp"
#include "glnn/model_io.hpp"

namespace glnn {

int ExperimentManifest::resolved_connectivity(int alphabet_size) const {
    int d;
    if (connectivity == "sparse")
        d = 3;
    else if (connectivity == "semi")
        d = semi_sparse_connectivity(model, alphabet_size);
    else if (connectivity == "full")
        d = units;
    else
        throw std::invalid_argument("unknown connectivity: " + connectivity);
    return std::clamp(d, 1, units);
}

TrainerConfig ExperimentManifest::trainer_config() const {
    TrainerConfig config;
    config.rule_w = rule_w;
    config.rule_tau = rule_tau;
    config.block_eps = block_eps;
    config.max_halvings = max_halvings;
    config.budget_sec = budget_sec;
    config.max_steps = max_steps;
    config.rms_decay = rms_decay;
    config.rms_floor = rms_floor;
    return config;
}

std::string ExperimentManifest::to_json() const {
    nlohmann::json j;
    j["task"] = task;
    j["gen"] = {{"lines", gen.lines},   {"bars", gen.bars},   {"blocks", gen.blocks},
                {"xor_T", gen.xor_T},   {"n_min", gen.n_min}, {"n_max", gen.n_max}};
    j["data_seed"] = data_seed;
    j["model"] = glnn::to_string(model);
    j["activation"] = glnn::to_string(activation);
    j["rule_w"] = glnn::to_string(rule_w);
    j["rule_tau"] = glnn::to_string(rule_tau);
    j["units"] = units;
    j["connectivity"] = connectivity;
    j["graph_seed"] = graph_seed;
    j["init_seed"] = init_seed;
    j["budget_sec"] = budget_sec;
    j["max_steps"] = max_steps;
    j["block_eps"] = block_eps;
    j["max_halvings"] = max_halvings;
    j["rms_decay"] = rms_decay;
    j["rms_floor"] = rms_floor;
    return j.dump();
}

std::string ExperimentManifest::hash() const {
    // FNV-1a over the canonical json: a content address for the run
    const std::string text = to_json();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunResult run_experiment(const ExperimentManifest& manifest, const GeneratedCorpus& corpus,
                         const std::string& out_dir,
                         const std::function<bool(const TrainState&)>& should_stop) {
    RunResult result;
    result.manifest = manifest;
    result.manifest_hash = manifest.hash();
    result.oracle_bits = corpus.oracle_bits_valid;
    try {
        const int d = manifest.resolved_connectivity(corpus.alphabet.size());
        const NetworkTopology topology =
            build_random_graph(manifest.units, d, manifest.graph_seed);
        const SymbolStats stats = compute_stats(corpus.train, corpus.alphabet);
        ActivationFunction act{manifest.activation};
        const ModelParams initial =
            init_params(manifest.model, topology, corpus.alphabet, stats, act,
                        manifest.init_seed);
        const TrainState state = train(manifest.trainer_config(), initial, corpus.train,
                                       corpus.valid, should_stop);
        result.best_valid_bits = state.best_valid_bits;
        result.best_step = state.best_step;
        result.regret_bits = cumulative_regret(state.best_valid_bits, corpus.oracle_bits_valid);
        if (manifest.task == "xor")
            result.classification_error = xor_classification_error(state.best_params, corpus.valid);
        result.steps = state.steps_done;
        result.wall_sec = state.wall_sec;
        result.log = state.log;

        if (!out_dir.empty()) {
            std::filesystem::create_directories(out_dir);
            write_text_file(out_dir + "/manifest.json", manifest.to_json() + "\n");
            write_curve_csv(state.log, out_dir + "/curve.csv");
            SavedModel saved;
            saved.params = state.best_params;
            saved.alphabet = corpus.alphabet;
            saved.mask = manifest.task == "xor" ? "xor" : "none";
            save_model(saved, out_dir + "/best_model.json");
            nlohmann::json j;
            j["manifest_hash"] = result.manifest_hash;
            j["best_valid_bits"] = result.best_valid_bits;
            j["best_step"] = result.best_step;
            j["oracle_bits"] = result.oracle_bits;
            j["regret_bits"] = result.regret_bits;
            if (result.classification_error >= 0.0)
                j["classification_error"] = result.classification_error;
            j["steps"] = result.steps;
            j["wall_sec"] = result.wall_sec;
            write_text_file(out_dir + "/result.json", j.dump(1, '\t') + "\n");
        }
    } catch (const std::exception& e) {
        result.failed = true;
        result.error = e.what();
    }
    return result;
}

std::vector<int> size_schedule(int max_units) {
    std::vector<int> sizes;
    for (int k = 0;; ++k) {
        const int n = static_cast<int>(std::lround(4.0 * std::pow(std::sqrt(2.0), k)));
        if (n > max_units) break;
        if (sizes.empty() || sizes.back() != n) sizes.push_back(n);
    }
    return sizes;
}

std::vector<RunResult> run_sweep(const SweepSpec& spec, const std::string& out_dir) {
    TaskParams gen = spec.gen;
    {
        const TaskParams defaults = default_task_params(spec.task);
        if (gen.lines == 0) gen.lines = defaults.lines;
        if (gen.bars == 0) gen.bars = defaults.bars;
        if (gen.blocks == 0) gen.blocks = defaults.blocks;
        if (gen.xor_T == 0) gen.xor_T = defaults.xor_T;
        if (gen.n_min == 0) gen.n_min = defaults.n_min;
        if (gen.n_max == 0) gen.n_max = defaults.n_max;
    }
    const GeneratedCorpus corpus = generate_task(spec.task, gen, spec.data_seed);

    std::vector<ExperimentManifest> manifests;
    for (int units : size_schedule(spec.max_units))
        for (const auto& conn : spec.connectivities)
            for (ModelKind model : spec.models)
                for (const auto& [rw, rt] : spec.rules) {
                    ExperimentManifest m;
                    m.task = spec.task;
                    m.gen = gen;
                    m.data_seed = spec.data_seed;
                    m.model = model;
                    m.rule_w = rw;
                    m.rule_tau = rt;
                    m.units = units;
                    m.connectivity = conn;
                    m.graph_seed = spec.run_seed;
                    m.init_seed = spec.run_seed;
                    m.budget_sec = spec.budget_sec;
                    m.max_steps = spec.max_steps;
                    manifests.push_back(std::move(m));
                }

    std::vector<RunResult> results(manifests.size());
    std::mutex next_mutex;
    std::size_t next = 0;
    const int workers = std::max(1, spec.workers);
    auto work = [&] {
        while (true) {
            std::size_t idx;
            {
                std::lock_guard<std::mutex> lock(next_mutex);
                if (next >= manifests.size()) return;
                idx = next++;
            }
            const std::string run_dir =
                out_dir.empty() ? "" : out_dir + "/run_" + manifests[idx].hash();
            results[idx] = run_experiment(manifests[idx], corpus, run_dir);
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < workers; ++i) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }

    std::sort(results.begin(), results.end(),
              [](const RunResult& a, const RunResult& b) { return a.manifest_hash < b.manifest_hash; });
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        write_sweep_csv(results, out_dir + "/sweep.csv");
    }
    return results;
}

void write_sweep_csv(const std::vector<RunResult>& results, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << "manifest_hash,task,model,rule_w,rule_tau,units,connectivity,best_valid_bits,"
           "oracle_bits,regret_bits,classification_error,steps,wall_sec,failed,error\n";
    for (const auto& r : results) {
        out << r.manifest_hash << ',' << r.manifest.task << ',' << to_string(r.manifest.model)
            << ',' << to_string(r.manifest.rule_w) << ',' << to_string(r.manifest.rule_tau) << ','
            << r.manifest.units << ',' << r.manifest.connectivity << ',' << r.best_valid_bits
            << ',' << r.oracle_bits << ',' << r.regret_bits << ',' << r.classification_error
            << ',' << r.steps << ',' << r.wall_sec << ',' << (r.failed ? 1 : 0) << ','
            << r.error << '\n';
    }
}

void write_curve_csv(const std::vector<StepLog>& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << "step,phase,eta_w,eta_tau,train_bits,valid_bits,wall_ms,stalled,halvings\n";
    for (const auto& e : log) {
        out << e.step << ',' << e.phase << ',' << e.eta_w << ',' << e.eta_tau << ','
            << e.train_bits << ',';
        if (std::isfinite(e.valid_bits)) out << e.valid_bits;
        out << ',' << e.wall_ms << ',' << (e.stalled ? 1 : 0) << ',' << e.halvings << '\n';
    }
}

}  // namespace glnn
