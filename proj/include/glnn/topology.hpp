#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "glnn/types.hpp"

namespace glnn {

enum class ModelKind { RNN, GNN, GLNN };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

/// Sparse directed graph over ordinary units 0..N-1 plus the implicit
/// always-on unit (never listed; it feeds every unit). Every unit keeps a
/// self-loop.
class NetworkTopology {
  public:
    NetworkTopology() = default;
    NetworkTopology(int n_units, std::vector<std::vector<int>> in_edges);

    int units() const { return n_units_; }

    /// Source units feeding unit j, self-loop included.
    const std::vector<int>& in_edges(int j) const { return in_edges_[static_cast<std::size_t>(j)]; }

    /// Position of the self-loop within in_edges(j).
    int self_slot(int j) const { return self_slot_[static_cast<std::size_t>(j)]; }

    int in_degree(int j) const { return static_cast<int>(in_edges(j).size()); }
    int max_in_degree() const;
    std::int64_t edge_count() const;

    std::string to_json() const;
    static NetworkTopology from_json(const std::string& text);

  private:
    int n_units_ = 0;
    std::vector<std::vector<int>> in_edges_;
    std::vector<int> self_slot_;
};

/// Random graph with exactly d distinct out-edges per unit, the self-loop
/// always among them; stored as in-edge lists. Deterministic given seed.
NetworkTopology build_random_graph(int n_units, int out_degree, std::uint64_t seed);

/// d = round(sqrt(2A)) for gated models, d = A for RNNs (clamped at use site).
int semi_sparse_connectivity(ModelKind kind, int alphabet_size);

}  // namespace glnn
