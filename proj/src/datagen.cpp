#include "glnn/datagen.hpp"

#include <array>
#include <cmath>

#include "glnn/rng.hpp"

namespace glnn {

namespace {

struct Emitter {
    std::string text;
    std::vector<Scalar> prob;

    void emit(char c, Scalar p) {
        text.push_back(c);
        prob.push_back(p);
    }
};

void emit_alphabet_line(Emitter& em, Rng& rng) {
    em.emit('a', 1.0);
    for (int li = 0; li < 26; ++li) {
        const char next_main = li < 25 ? static_cast<char>('a' + li + 1) : '\n';
        if (rng.bernoulli(1.0 / 26.0)) {
            em.emit('(', 1.0 / 26.0);
            em.emit('0', 1.0);
            for (int di = 0; di < 10; ++di) {
                const char next_digit = di < 9 ? static_cast<char>('0' + di + 1) : ')';
                if (rng.bernoulli(1.0 / 5.0)) {
                    em.emit('[', 1.0 / 5.0);
                    for (int k = 0; k < 9; ++k)
                        em.emit(static_cast<char>('A' + rng.uniform_u64(26)), 1.0 / 26.0);
                    em.emit(']', 1.0);
                    em.emit(next_digit, 1.0);
                } else {
                    em.emit(next_digit, 4.0 / 5.0);
                }
            }
            em.emit(next_main, 1.0);
        } else {
            em.emit(next_main, 25.0 / 26.0);
        }
    }
}

Emitter emit_alphabet(int lines, Rng rng) {
    Emitter em;
    for (int l = 0; l < lines; ++l) emit_alphabet_line(em, rng);
    return em;
}

// --- music -----------------------------------------------------------

const std::array<std::vector<std::string>, 5> kRhythms = {{
    {"4", "4", "4"},
    {"2", "4"},
    {"4.", "8", "4"},
    {"2."},
    {"4", "4", "8", "8"},
}};

const std::array<std::array<char, 3>, 3> kChords = {{
    {'c', 'e', 'g'},  // I
    {'c', 'f', 'a'},  // IV
    {'g', 'b', 'd'},  // V
}};

const std::array<int, 8> kHarmonyCycle = {0, 1, 0, 2, 0, 1, 2, 0};  // I-IV-I-V-I-IV-V-I

// bar rendering with pitch placeholders: P<value> joined by ' ', then " |\n"
std::string skeleton(const std::vector<std::string>& rhythm) {
    std::string s;
    for (const auto& value : rhythm) {
        s.push_back('P');
        s += value;
        s.push_back(' ');
    }
    s += "|\n";
    return s;
}

// conditional probability of `c` at position `pos` given the still-consistent
// rhythm patterns, marginalizing the uniform pattern choice
Scalar music_char_prob(const std::vector<int>& consistent, std::size_t pos, char c,
                       const std::array<char, 3>& chord,
                       const std::array<std::string, 5>& skeletons) {
    Scalar numer = 0.0;
    for (int q : consistent) {
        const char slot = skeletons[static_cast<std::size_t>(q)][pos];
        if (slot == 'P') {
            if (c == chord[0] || c == chord[1] || c == chord[2]) numer += 1.0 / 3.0;
        } else if (slot == c) {
            numer += 1.0;
        }
    }
    return numer / static_cast<Scalar>(consistent.size());
}

void emit_music_bar(Emitter& em, Rng& rng, int bar_index,
                    const std::array<std::string, 5>& skeletons) {
    const auto& chord = kChords[static_cast<std::size_t>(
        kHarmonyCycle[static_cast<std::size_t>(bar_index % 8)])];
    const int pattern = static_cast<int>(rng.uniform_u64(5));
    const std::string& skel = skeletons[static_cast<std::size_t>(pattern)];
    std::vector<int> consistent = {0, 1, 2, 3, 4};
    for (std::size_t pos = 0; pos < skel.size(); ++pos) {
        char c = skel[pos];
        if (c == 'P') c = chord[rng.uniform_u64(3)];
        em.emit(c, music_char_prob(consistent, pos, c, chord, skeletons));
        std::vector<int> next;
        for (int q : consistent) {
            const std::string& qs = skeletons[static_cast<std::size_t>(q)];
            if (pos >= qs.size()) continue;
            const char slot = qs[pos];
            if (slot == 'P' ? (c == chord[0] || c == chord[1] || c == chord[2]) : slot == c)
                next.push_back(q);
        }
        consistent = std::move(next);
    }
}

Emitter emit_music(int bars, Rng rng) {
    std::array<std::string, 5> skeletons;
    for (std::size_t q = 0; q < 5; ++q) skeletons[q] = skeleton(kRhythms[q]);
    Emitter em;
    for (int b = 0; b < bars; ++b) emit_music_bar(em, rng, b, skeletons);
    return em;
}

// --- distant XOR ------------------------------------------------------

void emit_xor_line(Emitter& em, Rng& rng, int T) {
    const int t_max = static_cast<int>(std::floor(1.1 * T));
    const int len = static_cast<int>(rng.uniform_int(T, t_max));
    // first marker in [0, len/10), second in [len/10, len/2), real-valued bounds
    const int p1_hi = (len + 9) / 10 - 1;
    const int p2_lo = (len + 9) / 10;
    const int p2_hi = (len - 1) / 2;
    const int pos1 = static_cast<int>(rng.uniform_int(0, p1_hi));
    const int pos2 = static_cast<int>(rng.uniform_int(p2_lo, p2_hi));
    int marked1 = 0, marked2 = 0;
    for (int k = 0; k < len; ++k) {
        const bool marked = k == pos1 || k == pos2;
        em.emit(marked ? 'X' : ' ', 1.0);  // conditioned on the latent plan
        const int bit = static_cast<int>(rng.uniform_u64(2));
        if (k == pos1) marked1 = bit;
        if (k == pos2) marked2 = bit;
        em.emit(static_cast<char>('0' + bit), 0.5);
    }
    em.emit('=', 1.0);
    em.emit(static_cast<char>('0' + (marked1 ^ marked2)), 1.0);
    em.emit('\n', 1.0);
}

Emitter emit_xor(int lines, int T, Rng rng) {
    Emitter em;
    for (int l = 0; l < lines; ++l) emit_xor_line(em, rng, T);
    return em;
}

// --- a^n b^n ----------------------------------------------------------

void emit_anbn_block(Emitter& em, Rng& rng, int n_min, int n_max) {
    const int n = static_cast<int>(rng.uniform_int(n_min, n_max));
    for (int k = 1; k <= n; ++k) {
        // after k-1 a's: survival odds of the uniform block length
        const Scalar p = k <= n_min
                             ? 1.0
                             : static_cast<Scalar>(n_max - (k - 1)) /
                                   static_cast<Scalar>(n_max - (k - 1) + 1);
        em.emit('a', p);
    }
    em.emit('\n', 1.0 / static_cast<Scalar>(n_max - n + 1));  // = 1 when n hit n_max
    for (int k = 0; k < n; ++k) em.emit('b', 1.0);
    em.emit('\n', 1.0);
}

Emitter emit_anbn(int blocks, int n_min, int n_max, Rng rng) {
    Emitter em;
    for (int b = 0; b < blocks; ++b) emit_anbn_block(em, rng, n_min, n_max);
    return em;
}

// --- assembly ---------------------------------------------------------

Alphabet fixed_alphabet(const std::string& task) {
    std::string chars;
    if (task == "alphabet") {
        chars = "\n()[]";
        for (char c = '0'; c <= '9'; ++c) chars.push_back(c);
        for (char c = 'A'; c <= 'Z'; ++c) chars.push_back(c);
        for (char c = 'a'; c <= 'z'; ++c) chars.push_back(c);
    } else if (task == "music") {
        chars = "\n .248|abcdefg";
    } else if (task == "xor") {
        chars = "\n 01=X";
    } else if (task == "anbn") {
        chars = "\nab";
    } else {
        throw std::invalid_argument("unknown task: " + task);
    }
    return build_alphabet(chars);
}

GeneratedCorpus assemble(const std::string& task, Emitter train, Emitter valid,
                         std::uint64_t seed, const TaskParams& params) {
    GeneratedCorpus corpus;
    corpus.task = task;
    corpus.seed = seed;
    corpus.params = params;
    corpus.alphabet = fixed_alphabet(task);
    corpus.train = encode(train.text, corpus.alphabet);
    corpus.valid = encode(valid.text, corpus.alphabet);
    if (task == "xor") {
        corpus.train = xor_mask(corpus.train, corpus.alphabet);
        corpus.valid = xor_mask(corpus.valid, corpus.alphabet);
    }
    corpus.train_prob = std::move(train.prob);
    corpus.valid_prob = std::move(valid.prob);
    corpus.oracle_bits_train = rescore_bits(corpus.train, corpus.train_prob);
    corpus.oracle_bits_valid = rescore_bits(corpus.valid, corpus.valid_prob);
    return corpus;
}

}  // namespace

Scalar rescore_bits(const SymbolSequence& seq, const std::vector<Scalar>& probs) {
    if (probs.size() != seq.tokens.size()) throw std::invalid_argument("probability list mismatch");
    Scalar bits = 0.0;
    for (std::size_t t = 0; t < probs.size(); ++t)
        if (seq.mask[t]) bits += std::log2(probs[t]);
    return bits;
}

GeneratedCorpus gen_alphabet(int lines, std::uint64_t seed) {
    if (lines < 1) throw std::invalid_argument("need at least one line");
    TaskParams params;
    params.lines = lines;
    return assemble("alphabet", emit_alphabet(lines, Rng::stream(seed, 0)),
                    emit_alphabet(lines, Rng::stream(seed, 1)), seed, params);
}

GeneratedCorpus gen_music(int bars, std::uint64_t seed) {
    if (bars < 1) throw std::invalid_argument("need at least one bar");
    TaskParams params;
    params.bars = bars;
    return assemble("music", emit_music(bars, Rng::stream(seed, 0)),
                    emit_music(bars, Rng::stream(seed, 1)), seed, params);
}

GeneratedCorpus gen_xor(int lines, int T, std::uint64_t seed) {
    if (lines < 1) throw std::invalid_argument("need at least one line");
    if (T < 10) throw std::invalid_argument("xor line length must be at least 10");
    TaskParams params;
    params.lines = lines;
    params.xor_T = T;
    return assemble("xor", emit_xor(lines, T, Rng::stream(seed, 0)),
                    emit_xor(lines, T, Rng::stream(seed, 1)), seed, params);
}

GeneratedCorpus gen_anbn(int blocks, int n_min, int n_max, std::uint64_t seed) {
    if (blocks < 1) throw std::invalid_argument("need at least one block");
    if (n_min < 1 || n_min > n_max) throw std::invalid_argument("need 1 <= n_min <= n_max");
    TaskParams params;
    params.blocks = blocks;
    params.n_min = n_min;
    params.n_max = n_max;
    GeneratedCorpus corpus =
        assemble("anbn", emit_anbn(blocks, n_min, n_max, Rng::stream(seed, 0)),
                 emit_anbn(blocks, n_min, n_max, Rng::stream(seed, 1)), seed, params);
    // entropy of the geometric law matching the mean block length; what a
    // learner could plausibly reach from few samples
    const Scalar mean = 0.5 * (n_min + n_max);
    const Scalar p = 1.0 / mean;
    const Scalar h = (-(1.0 - p) * std::log2(1.0 - p) - p * std::log2(p)) / p;
    corpus.info_bits = -static_cast<Scalar>(blocks) * h;
    return corpus;
}

GeneratedCorpus generate_task(const std::string& task, const TaskParams& params,
                              std::uint64_t seed) {
    if (task == "alphabet") return gen_alphabet(params.lines, seed);
    if (task == "music") return gen_music(params.bars, seed);
    if (task == "xor") return gen_xor(params.lines, params.xor_T, seed);
    if (task == "anbn") return gen_anbn(params.blocks, params.n_min, params.n_max, seed);
    throw std::invalid_argument("unknown task: " + task);
}

TaskParams default_task_params(const std::string& task) {
    TaskParams p;
    if (task == "alphabet") {
        p.lines = 1000;
    } else if (task == "music") {
        p.bars = 2700;
    } else if (task == "xor") {
        p.lines = 10000;
        p.xor_T = 100;
    } else if (task == "anbn") {
        p.blocks = 10;
        p.n_min = 1024;
        p.n_max = 2048;
    } else {
        throw std::invalid_argument("unknown task: " + task);
    }
    return p;
}

}  // namespace glnn
