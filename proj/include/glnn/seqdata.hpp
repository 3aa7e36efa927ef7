#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "glnn/types.hpp"

namespace glnn {

/// Ordered finite alphabet; one symbol = one character (newline and space
/// are ordinary symbols). Index order is code-point order.
class Alphabet {
  public:
    Alphabet() = default;
    explicit Alphabet(std::vector<char> symbols);

    int size() const { return static_cast<int>(symbols_.size()); }
    char symbol(int idx) const { return symbols_.at(static_cast<std::size_t>(idx)); }

    bool contains(char c) const { return index_[static_cast<unsigned char>(c)] >= 0; }

    /// Index of a symbol; negative if absent.
    int index(char c) const { return index_[static_cast<unsigned char>(c)]; }

    const std::vector<char>& symbols() const { return symbols_; }

    bool operator==(const Alphabet& o) const { return symbols_ == o.symbols_; }

  private:
    std::vector<char> symbols_;
    std::array<int, 256> index_{};
};

/// Token stream over an alphabet with a per-position prediction mask.
struct SymbolSequence {
    std::vector<int> tokens;
    std::vector<std::uint8_t> mask;  // chi_t in {0,1}

    Index size() const { return static_cast<Index>(tokens.size()); }
    Index masked_count() const;
};

struct SymbolStats {
    Vector nu;        // frequency among masked positions
    Vector nu_tilde;  // frequency over all positions
    Index masked_count = 0;
    Index total_count = 0;
};

/// Distinct characters of `text`, sorted by code point.
Alphabet build_alphabet(const std::string& text);

/// Encode text over a known alphabet, all-ones mask. Throws on symbols
/// absent from the alphabet.
SymbolSequence encode(const std::string& text, const Alphabet& alphabet);

std::string decode(const SymbolSequence& seq, const Alphabet& alphabet);

/// Sanity-check tokens and mask against an alphabet.
void validate(const SymbolSequence& seq, const Alphabet& alphabet);

SymbolStats compute_stats(const SymbolSequence& seq, const Alphabet& alphabet);

/// chi_t = 1 iff the previous symbol is '='. Throws if '=' is not in the
/// alphabet or no position ends up predicted.
SymbolSequence xor_mask(const SymbolSequence& seq, const Alphabet& alphabet);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

void save_sequence(const SymbolSequence& seq, const Alphabet& alphabet, const std::string& path);
SymbolSequence load_sequence(const std::string& path, const Alphabet& alphabet);

}  // namespace glnn
