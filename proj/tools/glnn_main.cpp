#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "glnn/datagen.hpp"
#include "glnn/eval.hpp"
#include "glnn/model_io.hpp"
#include "glnn/sweep.hpp"

namespace {

using namespace glnn;

void write_corpus(const GeneratedCorpus& corpus, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    save_sequence(corpus.train, corpus.alphabet, out_dir + "/train.txt");
    save_sequence(corpus.valid, corpus.alphabet, out_dir + "/valid.txt");
    nlohmann::json meta;
    meta["task"] = corpus.task;
    meta["seed"] = corpus.seed;
    meta["oracle_bits_valid"] = corpus.oracle_bits_valid;
    meta["oracle_bits_train"] = corpus.oracle_bits_train;
    if (corpus.info_bits != 0.0) meta["geometric_bound_bits"] = corpus.info_bits;
    meta["alphabet_size"] = corpus.alphabet.size();
    meta["params"] = {{"lines", corpus.params.lines},   {"bars", corpus.params.bars},
                      {"blocks", corpus.params.blocks}, {"xor_T", corpus.params.xor_T},
                      {"n_min", corpus.params.n_min},   {"n_max", corpus.params.n_max}};
    write_text_file(out_dir + "/corpus.json", meta.dump(1, '\t') + "\n");
}

TaskParams merge_defaults(const std::string& task, TaskParams params) {
    const TaskParams defaults = default_task_params(task);
    if (params.lines == 0) params.lines = defaults.lines;
    if (params.bars == 0) params.bars = defaults.bars;
    if (params.blocks == 0) params.blocks = defaults.blocks;
    if (params.xor_T == 0) params.xor_T = defaults.xor_T;
    if (params.n_min == 0) params.n_min = defaults.n_min;
    if (params.n_max == 0) params.n_max = defaults.n_max;
    return params;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Riemannian training of gated leaky networks on symbolic sequences"};
    app.require_subcommand(1);

    // ---- gen ----
    std::string gen_task, gen_out = "corpus";
    TaskParams gen_params;
    std::uint64_t gen_seed = 1;
    auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic corpus");
    gen_cmd->add_option("task", gen_task, "alphabet | music | xor | anbn")->required();
    gen_cmd->add_option("--lines", gen_params.lines, "lines (alphabet, xor)");
    gen_cmd->add_option("--bars", gen_params.bars, "bars (music)");
    gen_cmd->add_option("--blocks", gen_params.blocks, "blocks (anbn)");
    gen_cmd->add_option("--T", gen_params.xor_T, "nominal line length (xor)");
    gen_cmd->add_option("--nmin", gen_params.n_min, "minimum block length (anbn)");
    gen_cmd->add_option("--nmax", gen_params.n_max, "maximum block length (anbn)");
    gen_cmd->add_option("--seed", gen_seed, "generator seed");
    gen_cmd->add_option("--out", gen_out, "output directory");

    // ---- train ----
    ExperimentManifest train_manifest;
    std::string train_task, train_file, valid_file, train_mask = "none", train_out = "run";
    std::uint64_t train_seed = 1;
    auto* train_cmd = app.add_subcommand("train", "train one model");
    train_cmd->add_option("--task", train_task, "generate this task internally");
    train_cmd->add_option("--train-file", train_file, "training text file");
    train_cmd->add_option("--valid-file", valid_file, "validation text file");
    train_cmd->add_option("--mask", train_mask, "none | xor (file-based runs)")
        ->check(CLI::IsMember({"none", "xor"}));
    std::string train_model = "glnn", train_rule_w = "qdh", train_rule_tau = "rbpm";
    train_cmd->add_option("--model", train_model)->check(CLI::IsMember({"rnn", "gnn", "glnn"}));
    train_cmd->add_option("--rule-w", train_rule_w)->check(CLI::IsMember({"qdh", "dh"}));
    train_cmd->add_option("--rule-tau", train_rule_tau)
        ->check(CLI::IsMember({"ruop", "rbpm", "qdruop", "qdrbpm", "fb", "rms"}));
    train_cmd->add_option("--units", train_manifest.units, "network size N");
    train_cmd->add_option("--conn", train_manifest.connectivity, "sparse | semi | full")
        ->check(CLI::IsMember({"sparse", "semi", "full"}));
    train_cmd->add_option("--budget-sec", train_manifest.budget_sec, "wall-clock budget");
    train_cmd->add_option("--max-steps", train_manifest.max_steps, "step budget");
    train_cmd->add_option("--seed", train_seed, "graph/init/data seed");
    train_cmd->add_option("--lines", train_manifest.gen.lines);
    train_cmd->add_option("--bars", train_manifest.gen.bars);
    train_cmd->add_option("--blocks", train_manifest.gen.blocks);
    train_cmd->add_option("--T", train_manifest.gen.xor_T);
    train_cmd->add_option("--nmin", train_manifest.gen.n_min);
    train_cmd->add_option("--nmax", train_manifest.gen.n_max);
    train_cmd->add_option("--out", train_out, "output directory");

    // ---- sweep ----
    SweepSpec sweep_spec;
    std::string sweep_task = "anbn", sweep_out = "sweep";
    std::vector<std::string> sweep_models = {"glnn"};
    std::vector<std::string> sweep_rules = {"qdh+rbpm"};
    auto* sweep_cmd = app.add_subcommand("sweep", "hyperparameter sweep over network sizes");
    sweep_cmd->add_option("--task", sweep_task)->required();
    sweep_cmd->add_option("--budget-sec", sweep_spec.budget_sec, "budget per configuration");
    sweep_cmd->add_option("--max-steps", sweep_spec.max_steps);
    sweep_cmd->add_option("--max-units", sweep_spec.max_units);
    sweep_cmd->add_option("--models", sweep_models, "model kinds");
    sweep_cmd->add_option("--rules", sweep_rules, "rule pairs like qdh+rbpm dh+fb");
    sweep_cmd->add_option("--conn", sweep_spec.connectivities, "connectivity settings");
    sweep_cmd->add_option("--seed", sweep_spec.run_seed, "graph/init seed");
    sweep_cmd->add_option("--data-seed", sweep_spec.data_seed);
    sweep_cmd->add_option("--workers", sweep_spec.workers, "concurrent runs");
    sweep_cmd->add_option("--lines", sweep_spec.gen.lines);
    sweep_cmd->add_option("--bars", sweep_spec.gen.bars);
    sweep_cmd->add_option("--blocks", sweep_spec.gen.blocks);
    sweep_cmd->add_option("--T", sweep_spec.gen.xor_T);
    sweep_cmd->add_option("--nmin", sweep_spec.gen.n_min);
    sweep_cmd->add_option("--nmax", sweep_spec.gen.n_max);
    sweep_cmd->add_option("--out", sweep_out, "output directory");

    // ---- sample ----
    std::string sample_model_file;
    long sample_length = 500;
    std::uint64_t sample_seed = 1;
    auto* sample_cmd = app.add_subcommand("sample", "generate text from a trained model");
    sample_cmd->add_option("--model-file", sample_model_file)->required();
    sample_cmd->add_option("--length", sample_length);
    sample_cmd->add_option("--seed", sample_seed);

    // ---- score ----
    std::string score_model_file, score_valid_file;
    auto* score_cmd = app.add_subcommand("score", "regularized validation score of a model");
    score_cmd->add_option("--model-file", score_model_file)->required();
    score_cmd->add_option("--valid-file", score_valid_file)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen_cmd) {
            const GeneratedCorpus corpus =
                generate_task(gen_task, merge_defaults(gen_task, gen_params), gen_seed);
            write_corpus(corpus, gen_out);
            std::cout << "task " << corpus.task << ": train " << corpus.train.size()
                      << " symbols, valid " << corpus.valid.size() << " symbols, oracle "
                      << corpus.oracle_bits_valid << " bits -> " << gen_out << "\n";
        } else if (*train_cmd) {
            train_manifest.model = model_kind_from_string(train_model);
            train_manifest.rule_w = writing_rule_from_string(train_rule_w);
            train_manifest.rule_tau = transition_rule_from_string(train_rule_tau);
            train_manifest.graph_seed = train_seed;
            train_manifest.init_seed = train_seed;
            train_manifest.data_seed = train_seed;

            GeneratedCorpus corpus;
            if (!train_task.empty()) {
                train_manifest.task = train_task;
                train_manifest.gen = merge_defaults(train_task, train_manifest.gen);
                corpus = generate_task(train_task, train_manifest.gen, train_seed);
            } else {
                if (train_file.empty() || valid_file.empty())
                    throw std::runtime_error("need --task or both --train-file and --valid-file");
                train_manifest.task = train_mask == "xor" ? "xor" : "custom";
                const std::string text = read_text_file(train_file);
                corpus.task = train_manifest.task;
                corpus.alphabet = build_alphabet(text);
                corpus.train = encode(text, corpus.alphabet);
                corpus.valid = load_sequence(valid_file, corpus.alphabet);
                if (train_mask == "xor") {
                    corpus.train = xor_mask(corpus.train, corpus.alphabet);
                    corpus.valid = xor_mask(corpus.valid, corpus.alphabet);
                }
                corpus.oracle_bits_valid = 0.0;  // unknown for external corpora
            }
            const RunResult result = run_experiment(train_manifest, corpus, train_out);
            if (result.failed) {
                std::cerr << "run failed: " << result.error << "\n";
                return 1;
            }
            std::cout << "best validation " << result.best_valid_bits << " bits (step "
                      << result.best_step << ", " << result.steps << " steps, " << result.wall_sec
                      << " s)";
            if (!train_task.empty()) std::cout << ", regret " << result.regret_bits << " bits";
            if (result.classification_error >= 0.0)
                std::cout << ", classification error " << result.classification_error;
            std::cout << " -> " << train_out << "\n";
        } else if (*sweep_cmd) {
            sweep_spec.task = sweep_task;
            sweep_spec.models.clear();
            for (const auto& m : sweep_models) sweep_spec.models.push_back(model_kind_from_string(m));
            sweep_spec.rules.clear();
            for (const auto& r : sweep_rules) {
                const auto plus = r.find('+');
                if (plus == std::string::npos)
                    throw std::runtime_error("rule pair must look like qdh+rbpm: " + r);
                sweep_spec.rules.emplace_back(writing_rule_from_string(r.substr(0, plus)),
                                              transition_rule_from_string(r.substr(plus + 1)));
            }
            const auto results = run_sweep(sweep_spec, sweep_out);
            std::cout << "sweep: " << results.size() << " runs -> " << sweep_out << "/sweep.csv\n";
            for (const auto& r : results)
                if (!r.failed)
                    std::cout << "  " << to_string(r.manifest.model) << " "
                              << to_string(r.manifest.rule_w) << "+"
                              << to_string(r.manifest.rule_tau) << " N=" << r.manifest.units
                              << " " << r.manifest.connectivity << ": regret " << r.regret_bits
                              << " bits\n";
                else
                    std::cout << "  [failed] " << r.manifest_hash << ": " << r.error << "\n";
        } else if (*sample_cmd) {
            const SavedModel model = load_model(sample_model_file);
            const SampleResult out =
                sample(model.params, model.alphabet, sample_length, sample_seed);
            std::cout << out.text;
            if (out.truncated) std::cerr << "\n[truncated: divergent dynamics]\n";
        } else if (*score_cmd) {
            const SavedModel model = load_model(score_model_file);
            SymbolSequence seq = load_sequence(score_valid_file, model.alphabet);
            if (model.mask == "xor") seq = xor_mask(seq, model.alphabet);
            std::cout << "regularized validation: "
                      << regularized_validation_ll(model.params, seq) << " bits\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
