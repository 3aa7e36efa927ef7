#include "glnn/eval.hpp"

#include <cmath>

#include "glnn/rng.hpp"

namespace glnn {

Scalar regularized_validation_ll(const ModelParams& params, const SymbolSequence& seq) {
    const Scalar unif = 1.0 / static_cast<Scalar>(params.alphabet_size());
    Scalar bits = 0.0;
    forward_visit(params, seq,
                  [&](Index t, const Vector&, const Vector&, const Vector& pi, Scalar) {
                      if (!seq.mask[static_cast<std::size_t>(t)]) return;
                      const Scalar lambda = 1.0 / static_cast<Scalar>(t + 2);
                      const Scalar p =
                          (1.0 - lambda) * pi[seq.tokens[static_cast<std::size_t>(t)]] +
                          lambda * unif;
                      bits += std::log2(p);
                  });
    return bits;
}

Scalar raw_validation_ll(const ModelParams& params, const SymbolSequence& seq) {
    return nats_to_bits(forward_loglik(params, seq));
}

Scalar xor_classification_error(const ModelParams& params, const SymbolSequence& seq) {
    Index masked = 0, errors = 0;
    forward_visit(params, seq,
                  [&](Index t, const Vector&, const Vector&, const Vector& pi, Scalar) {
                      if (!seq.mask[static_cast<std::size_t>(t)]) return;
                      ++masked;
                      if (pi[seq.tokens[static_cast<std::size_t>(t)]] <= 0.5) ++errors;
                  });
    if (masked == 0) throw std::runtime_error("no predicted positions");
    return static_cast<Scalar>(errors) / static_cast<Scalar>(masked);
}

SampleResult sample(const ModelParams& params, const Alphabet& alphabet, Index length,
                    std::uint64_t seed) {
    Rng rng(seed);
    SampleResult out;
    out.text.reserve(static_cast<std::size_t>(length));
    Vector v = params.v0;
    Vector a(params.units());
    for (Index t = 0; t < length; ++t) {
        for (Index i = 0; i < params.units(); ++i) a[i] = params.activation(v[i]);
        if (!a.allFinite()) {
            out.truncated = true;
            break;
        }
        const Vector pi = softmax_output(a, params.w);
        const Scalar u = rng.uniform_real();
        Scalar cum = 0.0;
        int x = params.alphabet_size() - 1;
        for (Index y = 0; y < pi.size(); ++y) {
            cum += pi[y];
            if (u < cum) {
                x = static_cast<int>(y);
                break;
            }
        }
        out.text.push_back(alphabet.symbol(x));
        switch (params.kind) {
            case ModelKind::GLNN: v = step_glnn(v, a, x, params); break;
            case ModelKind::GNN: v = step_gnn(a, x, params); break;
            case ModelKind::RNN: v = step_rnn(a, x, params); break;
        }
    }
    return out;
}

}  // namespace glnn
