#include "glnn/topology.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

#include "glnn/rng.hpp"

namespace glnn {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::RNN: return "rnn";
        case ModelKind::GNN: return "gnn";
        case ModelKind::GLNN: return "glnn";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "rnn") return ModelKind::RNN;
    if (s == "gnn") return ModelKind::GNN;
    if (s == "glnn") return ModelKind::GLNN;
    throw std::invalid_argument("unknown model kind: " + s);
}

NetworkTopology::NetworkTopology(int n_units, std::vector<std::vector<int>> in_edges)
    : n_units_(n_units), in_edges_(std::move(in_edges)) {
    if (static_cast<int>(in_edges_.size()) != n_units_)
        throw std::invalid_argument("in_edges size mismatch");
    self_slot_.assign(static_cast<std::size_t>(n_units_), -1);
    for (int j = 0; j < n_units_; ++j) {
        const auto& srcs = in_edges_[static_cast<std::size_t>(j)];
        std::vector<bool> seen(static_cast<std::size_t>(n_units_), false);
        for (std::size_t k = 0; k < srcs.size(); ++k) {
            const int i = srcs[k];
            if (i < 0 || i >= n_units_) throw std::invalid_argument("edge source out of range");
            if (seen[static_cast<std::size_t>(i)])
                throw std::invalid_argument("duplicate edge source");
            seen[static_cast<std::size_t>(i)] = true;
            if (i == j) self_slot_[static_cast<std::size_t>(j)] = static_cast<int>(k);
        }
        if (self_slot_[static_cast<std::size_t>(j)] < 0)
            throw std::invalid_argument("missing self-loop");
    }
}

int NetworkTopology::max_in_degree() const {
    int d = 0;
    for (int j = 0; j < n_units_; ++j) d = std::max(d, in_degree(j));
    return d;
}

std::int64_t NetworkTopology::edge_count() const {
    std::int64_t n = 0;
    for (int j = 0; j < n_units_; ++j) n += in_degree(j);
    return n;
}

std::string NetworkTopology::to_json() const {
    nlohmann::json j;
    j["units"] = n_units_;
    j["in_edges"] = in_edges_;
    return j.dump();
}

NetworkTopology NetworkTopology::from_json(const std::string& text) {
    auto j = nlohmann::json::parse(text);
    return NetworkTopology(j.at("units").get<int>(),
                           j.at("in_edges").get<std::vector<std::vector<int>>>());
}

NetworkTopology build_random_graph(int n_units, int out_degree, std::uint64_t seed) {
    if (n_units < 1) throw std::invalid_argument("need at least one unit");
    if (out_degree < 1 || out_degree > n_units)
        throw std::invalid_argument("out-degree must be in [1, N]");
    std::vector<std::vector<int>> in_edges(static_cast<std::size_t>(n_units));
    Rng rng(seed);
    std::vector<int> others(static_cast<std::size_t>(n_units) - 1);
    for (int i = 0; i < n_units; ++i) {
        in_edges[static_cast<std::size_t>(i)].push_back(i);  // self-loop
        int k = 0;
        for (int u = 0; u < n_units; ++u)
            if (u != i) others[static_cast<std::size_t>(k++)] = u;
        // partial Fisher-Yates: first d-1 entries become the extra targets
        for (int pick = 0; pick < out_degree - 1; ++pick) {
            const auto swap_with =
                pick + static_cast<int>(rng.uniform_u64(static_cast<std::uint64_t>(n_units - 1 - pick)));
            std::swap(others[static_cast<std::size_t>(pick)],
                      others[static_cast<std::size_t>(swap_with)]);
            in_edges[static_cast<std::size_t>(others[static_cast<std::size_t>(pick)])].push_back(i);
        }
    }
    return NetworkTopology(n_units, std::move(in_edges));
}

int semi_sparse_connectivity(ModelKind kind, int alphabet_size) {
    if (alphabet_size < 2) throw std::invalid_argument("alphabet too small");
    if (kind == ModelKind::RNN) return alphabet_size;
    return static_cast<int>(std::lround(std::sqrt(2.0 * alphabet_size)));
}

}  // namespace glnn
