#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "glnn/seqdata.hpp"

namespace glnn {

struct TaskParams {
    int lines = 0;
    int bars = 0;
    int blocks = 0;
    int xor_T = 0;
    int n_min = 0;
    int n_max = 0;
};

/// Train/validation pair drawn independently from one synthetic law, plus
/// the true model's conditional probability of every emitted character
/// (conditioned on the generator's latent choices where the char model is
/// not observable, which only happens at unmasked positions). The oracle
/// is the masked sum of log2 of those probabilities over the validation
/// sequence.
struct GeneratedCorpus {
    std::string task;
    Alphabet alphabet;
    SymbolSequence train;
    SymbolSequence valid;
    std::vector<Scalar> train_prob;
    std::vector<Scalar> valid_prob;
    Scalar oracle_bits_valid = 0.0;
    Scalar oracle_bits_train = 0.0;
    Scalar info_bits = 0.0;  // a^n b^n: geometric-law entropy bound, informational only
    TaskParams params;
    std::uint64_t seed = 0;
};

/// Masked sum of log2(prob); the oracle re-scoring route.
Scalar rescore_bits(const SymbolSequence& seq, const std::vector<Scalar>& probs);

/// Lowercase alphabet lines with probability-1/26 digit sub-blocks, whose
/// digits carry probability-1/5 bracketed blocks of nine random capitals.
GeneratedCorpus gen_alphabet(int lines, std::uint64_t seed);

/// Waltz-like bars: an 8-bar I-IV-I-V-I-IV-V-I harmonic cycle, pitches
/// uniform in the bar's chord, rhythm uniform over five patterns.
GeneratedCorpus gen_music(int bars, std::uint64_t seed);

/// Distant-XOR lines of T' in [T, 1.1T] random bits, two X-marked, answer
/// after '='; the mask selects only the answer bits.
GeneratedCorpus gen_xor(int lines, int T, std::uint64_t seed);

/// Alternating a-blocks and b-blocks of equal random length in
/// [n_min, n_max].
GeneratedCorpus gen_anbn(int blocks, int n_min, int n_max, std::uint64_t seed);

GeneratedCorpus generate_task(const std::string& task, const TaskParams& params,
                              std::uint64_t seed);

/// Fill in paper-scale parameter defaults for a named task.
TaskParams default_task_params(const std::string& task);

}  // namespace glnn
