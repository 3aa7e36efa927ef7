#include "glnn/model_io.hpp"

#include <fstream>

#include "json.hpp"

namespace glnn {

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const nlohmann::json& rows) {
    const Index r = static_cast<Index>(rows.size());
    const Index c = r > 0 ? static_cast<Index>(rows.at(0).size()) : 0;
    Matrix m(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j)
            m(i, j) = rows.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(j));
    return m;
}

}  // namespace

void save_model(const SavedModel& model, const std::string& path) {
    const ModelParams& p = model.params;
    nlohmann::json j;
    j["kind"] = to_string(p.kind);
    j["activation"] = to_string(p.activation.kind);
    j["alphabet"] = std::string(model.alphabet.symbols().begin(), model.alphabet.symbols().end());
    j["mask"] = model.mask;
    j["units"] = p.units();
    {
        nlohmann::json edges = nlohmann::json::array();
        for (int u = 0; u < p.units(); ++u) edges.push_back(p.topology.in_edges(u));
        j["in_edges"] = std::move(edges);
    }
    j["w"] = matrix_to_json(p.w);
    {
        nlohmann::json taus = nlohmann::json::array();
        for (const auto& t : p.tau) taus.push_back(matrix_to_json(t));
        j["tau"] = std::move(taus);
    }
    if (p.kind == ModelKind::RNN) j["rho"] = matrix_to_json(p.rho);
    j["v0"] = std::vector<Scalar>(p.v0.begin(), p.v0.end());

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << j.dump(1, '\t') << '\n';
}

SavedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    nlohmann::json j;
    in >> j;

    SavedModel model;
    const std::string alpha_text = j.at("alphabet").get<std::string>();
    model.alphabet = Alphabet(std::vector<char>(alpha_text.begin(), alpha_text.end()));
    model.mask = j.value("mask", std::string("none"));

    ModelParams p;
    p.kind = model_kind_from_string(j.at("kind").get<std::string>());
    p.activation.kind = activation_from_string(j.at("activation").get<std::string>());
    p.topology = NetworkTopology(j.at("units").get<int>(),
                                 j.at("in_edges").get<std::vector<std::vector<int>>>());
    p.w = matrix_from_json(j.at("w"));
    for (const auto& t : j.at("tau")) p.tau.push_back(matrix_from_json(t));
    if (p.kind == ModelKind::RNN) p.rho = matrix_from_json(j.at("rho"));
    const auto v0 = j.at("v0").get<std::vector<Scalar>>();
    p.v0 = Eigen::Map<const Vector>(v0.data(), static_cast<Index>(v0.size()));
    model.params = std::move(p);
    return model;
}

}  // namespace glnn
