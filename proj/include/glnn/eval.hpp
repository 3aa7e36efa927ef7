#pragma once

#include <cstdint>
#include <string>

#include "glnn/dynamics.hpp"

namespace glnn {

/// Validation log-likelihood in bits with the prediction mixed toward the
/// uniform distribution, pi <- (1 - 1/(t+2)) pi + 1/(t+2) unif; keeps the
/// score finite when the model assigns probability 0.
Scalar regularized_validation_ll(const ModelParams& params, const SymbolSequence& seq);

/// Raw masked log-likelihood in bits (no mixture).
Scalar raw_validation_ll(const ModelParams& params, const SymbolSequence& seq);

/// oracle - score, both masked log-likelihoods in bits; positive when the
/// model is worse than the generator.
inline Scalar cumulative_regret(Scalar score_bits, Scalar oracle_bits) {
    return oracle_bits - score_bits;
}

/// Fraction of masked positions whose correct symbol gets probability
/// <= 1/2 (ties count as errors).
Scalar xor_classification_error(const ModelParams& params, const SymbolSequence& seq);

struct SampleResult {
    std::string text;
    bool truncated = false;  // divergent dynamics cut the stream short
};

/// Generate text by drawing each symbol from pi_t and feeding it back.
SampleResult sample(const ModelParams& params, const Alphabet& alphabet, Index length,
                    std::uint64_t seed);

}  // namespace glnn
