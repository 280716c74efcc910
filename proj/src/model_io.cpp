#include "imd2/model_io.hpp"

#include <fstream>

#include "imd2/config.hpp"
#include "imd2/error.hpp"

namespace imd2 {

namespace {

json matrix_json(const RowMatrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

RowMatrix matrix_from_json(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty() || !j.front().is_array()) throw ConfigError(field + ": expected a nested array");
    const auto rows = j.size(), cols = j.front().size();
    RowMatrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols) throw ConfigError(field + ": ragged matrix");
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = json_number(j[r][c], field);
    }
    return m;
}

std::vector<std::size_t> delays_from_json(const json& j) {
    if (!j.contains("delays") || !j.at("delays").is_array()) throw ConfigError("model.delays: missing");
    return j.at("delays").get<std::vector<std::size_t>>();
}

double scale_from_json(const json& j) {
    if (!j.contains("input_scale")) throw ConfigError("model.input_scale: missing");
    return json_number(j.at("input_scale"), "model.input_scale");
}

} // namespace

json model_to_json(const AnyModel& model) {
    if (const auto* c = std::get_if<ChebyshevModel>(&model)) {
        const auto d = c->delays().values();
        return {{"type", "chebyshev"},
                {"delays", std::vector<std::size_t>(d.begin(), d.end())},
                {"order", c->order()},
                {"input_scale", c->input_scale()},
                {"theta", matrix_json(c->theta())}};
    }
    const auto& n = std::get<NNModel>(model);
    const auto d = n.delays().values();
    json weights = json::array();
    for (const auto& w : n.weights()) weights.push_back(matrix_json(w));
    return {{"type", "nn"},
            {"delays", std::vector<std::size_t>(d.begin(), d.end())},
            {"widths", n.shape().widths},
            {"activation", to_string(n.activation())},
            {"input_scale", n.input_scale()},
            {"weights", std::move(weights)}};
}

AnyModel model_from_json(const json& j) {
    try {
        if (!j.is_object() || !j.contains("type")) throw ConfigError("model: missing type");
        const auto type = j.at("type").get<std::string>();
        DelaySet delays(delays_from_json(j));
        const double scale = scale_from_json(j);
        if (type == "chebyshev") {
            RowMatrix theta = matrix_from_json(j.at("theta"), "model.theta");
            const auto order = j.at("order").get<std::size_t>();
            return ChebyshevModel(delays, order, std::move(theta), scale);
        }
        if (type == "nn") {
            std::vector<RowMatrix> weights;
            for (const auto& w : j.at("weights")) weights.push_back(matrix_from_json(w, "model.weights"));
            NNModel m(delays, std::move(weights), activation_from_string(j.at("activation").get<std::string>()),
                      scale);
            if (j.contains("widths") && j.at("widths").get<std::vector<std::size_t>>() != m.shape().widths)
                throw ConfigError("model.widths: does not match the weight shapes");
            return m;
        }
        throw ConfigError("model.type: unknown '" + type + "'");
    } catch (const json::exception& e) {
        throw ConfigError(std::string("model: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const AnyModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << model_to_json(model).dump(2) << '\n';
}

AnyModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read model " + path.string());
    try {
        return model_from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

} // namespace imd2
