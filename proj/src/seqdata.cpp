#include "glnn/seqdata.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace glnn {

Alphabet::Alphabet(std::vector<char> symbols) : symbols_(std::move(symbols)) {
    index_.fill(-1);
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
        const auto c = static_cast<unsigned char>(symbols_[i]);
        if (index_[c] >= 0) throw std::invalid_argument("duplicate alphabet symbol");
        index_[c] = static_cast<int>(i);
    }
}

Index SymbolSequence::masked_count() const {
    Index n = 0;
    for (auto m : mask) n += m;
    return n;
}

Alphabet build_alphabet(const std::string& text) {
    if (text.empty()) throw std::runtime_error("empty sequence");
    std::set<unsigned char> distinct(text.begin(), text.end());
    std::vector<char> symbols(distinct.begin(), distinct.end());
    return Alphabet(std::move(symbols));
}

SymbolSequence encode(const std::string& text, const Alphabet& alphabet) {
    if (text.empty()) throw std::runtime_error("empty sequence");
    SymbolSequence seq;
    seq.tokens.reserve(text.size());
    for (char c : text) {
        const int idx = alphabet.index(c);
        if (idx < 0)
            throw std::runtime_error(std::string("symbol absent from alphabet: code ") +
                                     std::to_string(static_cast<unsigned char>(c)));
        seq.tokens.push_back(idx);
    }
    seq.mask.assign(text.size(), 1);
    return seq;
}

std::string decode(const SymbolSequence& seq, const Alphabet& alphabet) {
    std::string out;
    out.reserve(seq.tokens.size());
    for (int t : seq.tokens) out.push_back(alphabet.symbol(t));
    return out;
}

void validate(const SymbolSequence& seq, const Alphabet& alphabet) {
    if (seq.tokens.empty()) throw std::runtime_error("empty sequence");
    if (seq.tokens.size() != seq.mask.size()) throw std::runtime_error("mask length mismatch");
    for (int t : seq.tokens)
        if (t < 0 || t >= alphabet.size()) throw std::runtime_error("token outside alphabet");
    bool any = false;
    for (auto m : seq.mask) {
        if (m > 1) throw std::runtime_error("mask entry outside {0,1}");
        any = any || m == 1;
    }
    if (!any) throw std::runtime_error("no predicted positions");
}

SymbolStats compute_stats(const SymbolSequence& seq, const Alphabet& alphabet) {
    validate(seq, alphabet);
    const int A = alphabet.size();
    SymbolStats stats;
    stats.nu = Vector::Zero(A);
    stats.nu_tilde = Vector::Zero(A);
    stats.total_count = seq.size();
    for (Index t = 0; t < seq.size(); ++t) {
        stats.nu_tilde[seq.tokens[t]] += 1.0;
        if (seq.mask[t]) {
            stats.nu[seq.tokens[t]] += 1.0;
            ++stats.masked_count;
        }
    }
    stats.nu /= static_cast<Scalar>(stats.masked_count);
    stats.nu_tilde /= static_cast<Scalar>(stats.total_count);
    return stats;
}

SymbolSequence xor_mask(const SymbolSequence& seq, const Alphabet& alphabet) {
    const int eq = alphabet.index('=');
    if (eq < 0) throw std::runtime_error("'=' absent from alphabet");
    SymbolSequence out = seq;
    out.mask.assign(seq.tokens.size(), 0);
    for (std::size_t t = 1; t < seq.tokens.size(); ++t)
        if (seq.tokens[t - 1] == eq) out.mask[t] = 1;
    if (std::find(out.mask.begin(), out.mask.end(), 1) == out.mask.end())
        throw std::runtime_error("no predicted positions");
    return out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << text;
}

void save_sequence(const SymbolSequence& seq, const Alphabet& alphabet, const std::string& path) {
    write_text_file(path, decode(seq, alphabet));
}

SymbolSequence load_sequence(const std::string& path, const Alphabet& alphabet) {
    return encode(read_text_file(path), alphabet);
}

}  // namespace glnn
