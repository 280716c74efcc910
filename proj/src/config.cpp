#include "imd2/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "imd2/error.hpp"

namespace imd2 {

// ---------------------------------------------------------------------------
// TOML subset
// ---------------------------------------------------------------------------

namespace {

class TomlParser {
public:
    explicit TomlParser(std::string_view text) : s_(text) {}

    json parse() {
        json root = json::object();
        json* table = &root;
        while (true) {
            skip_ws_comments_newlines();
            if (eof()) break;
            if (peek() == '[') {
                table = &open_table(root);
            } else {
                parse_keyval(*table);
            }
            expect_line_end();
        }
        return root;
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;

    bool eof() const { return pos_ >= s_.size(); }
    char peek() const { return eof() ? '\0' : s_[pos_]; }
    char get() {
        const char c = s_[pos_++];
        if (c == '\n') ++line_;
        return c;
    }
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_); }

    void skip_ws() {
        while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
    }
    void skip_comment() {
        if (peek() == '#')
            while (!eof() && peek() != '\n') ++pos_;
    }
    void skip_ws_comments_newlines() {
        while (!eof()) {
            skip_ws();
            skip_comment();
            if (peek() == '\n' || peek() == '\r')
                get();
            else
                break;
        }
    }
    void expect_line_end() {
        skip_ws();
        skip_comment();
        if (eof()) return;
        if (peek() == '\r') get();
        if (peek() != '\n') fail("expected end of line");
        get();
    }

    std::string parse_key() {
        skip_ws();
        if (peek() == '"') return parse_string();
        std::string key;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-'))
            key += get();
        if (key.empty()) fail("expected a key");
        return key;
    }

    std::vector<std::string> parse_dotted_key() {
        std::vector<std::string> parts{parse_key()};
        skip_ws();
        while (peek() == '.') {
            get();
            parts.push_back(parse_key());
            skip_ws();
        }
        return parts;
    }

    json& open_table(json& root) {
        get(); // [
        if (peek() == '[') fail("arrays of tables are not supported");
        const auto parts = parse_dotted_key();
        if (peek() != ']') fail("expected ']'");
        get();
        json* t = &root;
        for (const auto& p : parts) {
            json& next = (*t)[p];
            if (next.is_null()) next = json::object();
            if (!next.is_object()) fail("'" + p + "' is not a table");
            t = &next;
        }
        return *t;
    }

    void parse_keyval(json& table) {
        const auto parts = parse_dotted_key();
        if (peek() != '=') fail("expected '='");
        get();
        skip_ws();
        json* t = &table;
        for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
            json& next = (*t)[parts[i]];
            if (next.is_null()) next = json::object();
            t = &next;
        }
        if (t->contains(parts.back())) fail("duplicate key '" + parts.back() + "'");
        (*t)[parts.back()] = parse_value();
    }

    std::string parse_string() {
        get(); // "
        std::string out;
        while (true) {
            if (eof() || peek() == '\n') fail("unterminated string");
            char c = get();
            if (c == '"') break;
            if (c == '\\') {
                if (eof()) fail("unterminated escape");
                const char e = get();
                switch (e) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                default: fail(std::string("unsupported escape \\") + e);
                }
                continue;
            }
            out += c;
        }
        return out;
    }

    json parse_array() {
        get(); // [
        json arr = json::array();
        while (true) {
            skip_ws_comments_newlines();
            if (peek() == ']') {
                get();
                return arr;
            }
            arr.push_back(parse_value());
            skip_ws_comments_newlines();
            if (peek() == ',') {
                get();
                continue;
            }
            if (peek() == ']') {
                get();
                return arr;
            }
            fail("expected ',' or ']' in array");
        }
    }

    json parse_value() {
        skip_ws();
        const char c = peek();
        if (c == '"') return parse_string();
        if (c == '[') return parse_array();
        std::string tok;
        while (!eof() && peek() != ',' && peek() != ']' && peek() != '#' && peek() != '\n' && peek() != '\r' &&
               peek() != ' ' && peek() != '\t')
            tok += get();
        if (tok.empty()) fail("expected a value");
        if (tok == "true") return true;
        if (tok == "false") return false;
        if (tok == "inf" || tok == "+inf") return "inf";
        if (tok == "-inf") return "-inf";
        if (tok == "nan" || tok == "+nan" || tok == "-nan") return "nan";
        std::string clean;
        for (char ch : tok)
            if (ch != '_') clean += ch;
        std::string_view v = clean;
        if (!v.empty() && v.front() == '+') v.remove_prefix(1);
        const bool is_float = v.find_first_of(".eE") != std::string_view::npos;
        if (!is_float) {
            long long i = 0;
            auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), i);
            if (ec == std::errc{} && p == v.data() + v.size()) {
                if (i >= 0) return static_cast<std::uint64_t>(i);
                return static_cast<std::int64_t>(i);
            }
        }
        double d = 0.0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
        if (ec != std::errc{} || p != v.data() + v.size()) fail("cannot parse value '" + tok + "'");
        return d;
    }
};

// ---------------------------------------------------------------------------
// JSON -> structs
// ---------------------------------------------------------------------------

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected a table/object");
    const std::set<std::string> names(known.begin(), known.end());
    for (const auto& [k, v] : j.items())
        if (!names.count(k)) throw ConfigError(where + "." + k + ": unknown field");
}

std::uint64_t json_uint(const json& v, const std::string& field) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (d >= 0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
    }
    throw ConfigError(field + ": expected a non-negative integer");
}

std::vector<std::size_t> json_uint_list(const json& v, const std::string& field) {
    if (!v.is_array()) throw ConfigError(field + ": expected an array of integers");
    std::vector<std::size_t> out;
    for (const auto& e : v) out.push_back(static_cast<std::size_t>(json_uint(e, field)));
    return out;
}

template <typename T, typename F>
void read(const json& j, const char* key, const std::string& where, T& dst, F conv) {
    if (j.contains(key)) dst = conv(j.at(key), where + "." + key);
}

} // namespace

json parse_toml(std::string_view text) { return TomlParser(text).parse(); }

json load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    try {
        if (path.extension() == ".json") return json::parse(text);
        return parse_toml(text);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    } catch (const ParseError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

double json_number(const json& v, const std::string& field) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "inf" || s == "+inf") return INFINITY;
        if (s == "-inf") return -INFINITY;
        if (s == "nan") return NAN;
    }
    throw ConfigError(field + ": expected a number");
}

json number_json(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

OfdmConfig ofdm_config_from_json(const json& j) {
    const std::string w = "ofdm";
    reject_unknown(j, {"n_subcarriers", "n_symbols", "cp_len", "bandwidth_hz", "sample_rate_hz", "seed"}, w);
    OfdmConfig c;
    auto u = [](const json& v, const std::string& f) { return static_cast<std::size_t>(json_uint(v, f)); };
    read(j, "n_subcarriers", w, c.n_subcarriers, u);
    read(j, "n_symbols", w, c.n_symbols, u);
    read(j, "cp_len", w, c.cp_len, u);
    read(j, "bandwidth_hz", w, c.bandwidth_hz, json_number);
    read(j, "sample_rate_hz", w, c.sample_rate_hz, json_number);
    read(j, "seed", w, c.seed, json_uint);
    c.validate();
    return c;
}

ChainConfig chain_config_from_json(const json& j) {
    const std::string w = "chain";
    reject_unknown(j,
                   {"tx_power_dbm", "pa_gain_db", "pa_p1db_dbm", "duplexer_attenuation_db", "lna_gain_db",
                    "imd2_coeff", "memory_fir", "noise_floor_db", "seed"},
                   w);
    ChainConfig c;
    read(j, "tx_power_dbm", w, c.tx_power_dbm, json_number);
    read(j, "pa_gain_db", w, c.pa_gain_db, json_number);
    read(j, "pa_p1db_dbm", w, c.pa_p1db_dbm, json_number);
    read(j, "duplexer_attenuation_db", w, c.duplexer_attenuation_db, json_number);
    read(j, "lna_gain_db", w, c.lna_gain_db, json_number);
    read(j, "imd2_coeff", w, c.imd2_coeff, json_number);
    if (j.contains("noise_floor_db")) {
        // null also means noiseless, since JSON has no -inf.
        const auto& v = j.at("noise_floor_db");
        c.noise_floor_db = v.is_null() ? -INFINITY : json_number(v, w + ".noise_floor_db");
    }
    read(j, "seed", w, c.seed, json_uint);
    if (j.contains("memory_fir")) {
        const auto& v = j.at("memory_fir");
        if (!v.is_array()) throw ConfigError("chain.memory_fir: expected an array of numbers");
        c.memory_fir.clear();
        for (const auto& e : v) c.memory_fir.push_back(json_number(e, "chain.memory_fir"));
    }
    c.validate();
    return c;
}

ModelSpec model_spec_from_json(const json& j) {
    const std::string w = "model";
    reject_unknown(j, {"type", "delays", "order", "widths", "activation"}, w);
    ModelSpec m;
    if (j.contains("type")) {
        if (!j.at("type").is_string()) throw ConfigError("model.type: expected a string");
        m.kind = model_kind_from_string(j.at("type").get<std::string>());
    }
    read(j, "delays", w, m.delays, json_uint_list);
    read(j, "order", w, m.order, [](const json& v, const std::string& f) { return static_cast<std::size_t>(json_uint(v, f)); });
    read(j, "widths", w, m.widths, json_uint_list);
    if (j.contains("activation")) {
        if (!j.at("activation").is_string()) throw ConfigError("model.activation: expected a string");
        m.activation = activation_from_string(j.at("activation").get<std::string>());
    }
    try {
        DelaySet check(m.delays);
        if (m.kind == ModelKind::chebyshev && m.order == 0) throw ConfigError("model.order: must be positive");
        if (m.kind == ModelKind::nn) NNShape{m.delays.size(), m.widths}.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
    return m;
}

OptimConfig optim_config_from_json(const json& j) {
    const std::string w = "optimizer";
    reject_unknown(j,
                   {"method", "max_iters", "lr", "beta1", "beta2", "eps", "lbfgs_memory", "grad_tol", "log_every",
                    "seed", "lambda"},
                   w);
    OptimConfig c;
    if (j.contains("method")) {
        if (!j.at("method").is_string()) throw ConfigError("optimizer.method: expected a string");
        c.method = method_from_string(j.at("method").get<std::string>());
    }
    auto u = [](const json& v, const std::string& f) { return static_cast<std::size_t>(json_uint(v, f)); };
    read(j, "max_iters", w, c.max_iters, u);
    read(j, "lr", w, c.lr, json_number);
    read(j, "beta1", w, c.beta1, json_number);
    read(j, "beta2", w, c.beta2, json_number);
    read(j, "eps", w, c.eps, json_number);
    read(j, "lbfgs_memory", w, c.lbfgs_memory, u);
    read(j, "grad_tol", w, c.grad_tol, json_number);
    read(j, "log_every", w, c.log_every, u);
    read(j, "seed", w, c.seed, json_uint);
    read(j, "lambda", w, c.lambda, json_number);
    c.validate();
    return c;
}

json to_json(const OfdmConfig& c) {
    return {{"n_subcarriers", c.n_subcarriers}, {"n_symbols", c.n_symbols},   {"cp_len", c.cp_len},
            {"bandwidth_hz", c.bandwidth_hz},   {"sample_rate_hz", c.sample_rate_hz}, {"seed", c.seed}};
}

json to_json(const ChainConfig& c) {
    return {{"tx_power_dbm", c.tx_power_dbm},
            {"pa_gain_db", c.pa_gain_db},
            {"pa_p1db_dbm", number_json(c.pa_p1db_dbm)},
            {"duplexer_attenuation_db", c.duplexer_attenuation_db},
            {"lna_gain_db", c.lna_gain_db},
            {"imd2_coeff", c.imd2_coeff},
            {"memory_fir", c.memory_fir},
            {"noise_floor_db", number_json(c.noise_floor_db)},
            {"seed", c.seed}};
}

json to_json(const ModelSpec& m) {
    json j{{"type", to_string(m.kind)}, {"delays", m.delays}};
    if (m.kind == ModelKind::chebyshev) {
        j["order"] = m.order;
    } else {
        j["widths"] = m.widths;
        j["activation"] = to_string(m.activation);
    }
    return j;
}

json to_json(const OptimConfig& c) {
    return {{"method", to_string(c.method)}, {"max_iters", c.max_iters},     {"lr", c.lr},
            {"beta1", c.beta1},              {"beta2", c.beta2},             {"eps", c.eps},
            {"lbfgs_memory", c.lbfgs_memory}, {"grad_tol", c.grad_tol},      {"log_every", c.log_every},
            {"seed", c.seed},                {"lambda", c.lambda}};
}

std::string config_hash(const json& j) {
    const std::string s = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<std::size_t> parse_checkpoints(std::string_view csv) {
    std::vector<std::size_t> out;
    while (!csv.empty()) {
        const auto comma = csv.find(',');
        std::string_view tok = csv.substr(0, comma);
        while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
        while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
        std::size_t v = 0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{} || p != tok.data() + tok.size() || v == 0)
            throw ConfigError("checkpoints: '" + std::string(tok) + "' is not a positive integer");
        if (!out.empty() && v <= out.back()) throw ConfigError("checkpoints: must be strictly increasing");
        out.push_back(v);
        if (comma == std::string_view::npos) break;
        csv.remove_prefix(comma + 1);
    }
    if (out.empty()) throw ConfigError("checkpoints: empty list");
    return out;
}

} // namespace imd2
