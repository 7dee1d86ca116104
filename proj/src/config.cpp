#include "zq/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace zq {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::string& where,
                         const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

json require(const json& obj, const std::string& where, const std::string& key) {
    if (!obj.contains(key))
        throw ConfigError("missing key '" + key + "' in " + where);
    return obj.at(key);
}

Eigen::MatrixXd parse_matrix(const json& j, const std::string& where, int n) {
    if (!j.is_array() || static_cast<int>(j.size()) != n)
        throw ConfigError(where + " must be an " + std::to_string(n) + "x" +
                          std::to_string(n) + " array of rows");
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i) {
        const json& row = j.at(i);
        if (!row.is_array() || static_cast<int>(row.size()) != n)
            throw ConfigError(where + " row " + std::to_string(i) +
                              " must have " + std::to_string(n) + " entries");
        for (int k = 0; k < n; ++k) {
            if (!row.at(k).is_number())
                throw ConfigError(where + " entries must be numbers");
            m(i, k) = row.at(k).get<double>();
        }
    }
    return m;
}

NoiseSpec parse_noise(const json& j, const std::string& where, int n) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    const std::string type = require(j, where, "type").get<std::string>();
    if (type == "scaled_bg") {
        reject_unknown_keys(j, where, {"type", "scale", "delta"});
        const double scale = require(j, where, "scale").get<double>();
        const double delta = require(j, where, "delta").get<double>();
        try {
            return NoiseSpec::scaled_bg(scale, delta, n);
        } catch (const std::exception& ex) {
            throw ConfigError(where + ": " + ex.what());
        }
    }
    if (type == "gaussian") {
        reject_unknown_keys(j, where, {"type", "Sigma"});
        try {
            return NoiseSpec::gaussian(
                parse_matrix(require(j, where, "Sigma"), where + ".Sigma", n));
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& ex) {
            throw ConfigError(where + ": " + ex.what());
        }
    }
    if (type == "zero") {
        reject_unknown_keys(j, where, {"type"});
        return NoiseSpec::zero(n);
    }
    throw ConfigError(where + ": unknown noise type '" + type +
                      "' (expected scaled_bg | gaussian | zero)");
}

InitSpec parse_init(const json& j, const std::string& where, int n) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    const std::string type = require(j, where, "type").get<std::string>();
    if (type == "point") {
        reject_unknown_keys(j, where, {"type", "x"});
        const json& xj = require(j, where, "x");
        if (!xj.is_array() || static_cast<int>(xj.size()) != n)
            throw ConfigError(where + ".x must have n entries");
        std::vector<double> x(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = xj.at(i).get<double>();
        return InitSpec::point(std::move(x));
    }
    if (type == "draw") {
        reject_unknown_keys(j, where, {"type", "law"});
        return InitSpec::draw(parse_noise(require(j, where, "law"),
                                          where + ".law", n));
    }
    throw ConfigError(where + ": unknown init type '" + type +
                      "' (expected point | draw)");
}

std::vector<int> parse_n_list(const json& j, const std::string& where) {
    std::vector<int> out;
    if (j.is_array()) {
        for (const auto& v : j) {
            if (!v.is_number_integer())
                throw ConfigError(where + " entries must be integers");
            out.push_back(v.get<int>());
        }
    } else if (j.is_object()) {
        reject_unknown_keys(j, where, {"first", "last", "step"});
        const int first = require(j, where, "first").get<int>();
        const int last = require(j, where, "last").get<int>();
        const int step = j.value("step", 2);
        if (step <= 0 || last < first)
            throw ConfigError(where + ": need first <= last and step > 0");
        for (int n = first; n <= last; n += step) out.push_back(n);
    } else {
        throw ConfigError(where + " must be an array or {first,last,step}");
    }
    for (int n : out)
        if (n < 2 || n % 2 != 0)
            throw ConfigError(where + ": every N must be even and >= 2");
    return out;
}

int parse_even(const json& j, const std::string& where) {
    if (!j.is_number_integer())
        throw ConfigError(where + " must be an integer");
    const int v = j.get<int>();
    if (v < 2 || v % 2 != 0)
        throw ConfigError(where + " must be even (and >= 2)");
    return v;
}

} // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("JSON parse error: ") + ex.what());
    }
    if (!doc.is_object()) throw ConfigError("config root must be an object");
    reject_unknown_keys(doc, "config", {"model", "scheme", "run", "output"});

    const json jm = require(doc, "config", "model");
    reject_unknown_keys(jm, "model", {"n", "A", "B", "Q", "noise", "init"});
    const int n = require(jm, "model", "n").get<int>();
    if (n < 1) throw ConfigError("model.n must be a positive integer");
    const Eigen::MatrixXd A = parse_matrix(require(jm, "model", "A"), "model.A", n);
    const Eigen::MatrixXd B = parse_matrix(require(jm, "model", "B"), "model.B", n);
    const Eigen::MatrixXd Q = parse_matrix(require(jm, "model", "Q"), "model.Q", n);
    NoiseSpec noise = parse_noise(require(jm, "model", "noise"), "model.noise", n);
    InitSpec init = jm.contains("init")
                        ? parse_init(jm.at("init"), "model.init", n)
                        : InitSpec::point(std::vector<double>(
                              static_cast<std::size_t>(n), 0.0));

    const json js = require(doc, "config", "scheme");
    reject_unknown_keys(js, "scheme",
                        {"K", "g", "p", "q_exp", "L", "delta0_exp", "beta", "eps"});
    const int K = parse_even(require(js, "scheme", "K"), "scheme.K");
    if (!require(js, "scheme", "g").is_string())
        throw ConfigError(
            "scheme.g must be an exact rational string like \"4/3\"");
    Rational g;
    try {
        g = parse_rational(js.at("g").get<std::string>());
    } catch (const std::exception& ex) {
        throw ConfigError(std::string("scheme.g: ") + ex.what());
    }
    const int p = require(js, "scheme", "p").get<int>();
    const int q_exp = require(js, "scheme", "q_exp").get<int>();
    const double L = require(js, "scheme", "L").get<double>();
    const int m0 = js.value("delta0_exp", 0);
    const double beta = require(js, "scheme", "beta").get<double>();
    const double eps = require(js, "scheme", "eps").get<double>();

    const json jr = require(doc, "config", "run");
    reject_unknown_keys(jr, "run",
                        {"N", "N_list", "seeds_per_N", "seed", "stop_eps",
                         "settle_T", "max_T", "burn_in"});
    RunConfig run;
    if (jr.contains("N")) run.N = parse_even(jr.at("N"), "run.N");
    if (jr.contains("N_list")) run.N_list = parse_n_list(jr.at("N_list"), "run.N_list");
    run.seeds_per_N = jr.value("seeds_per_N", 1);
    if (run.seeds_per_N < 1) throw ConfigError("run.seeds_per_N must be >= 1");
    run.seed = jr.value("seed", std::uint64_t{1});
    run.stop_eps = jr.value("stop_eps", 1e-4);
    if (!(run.stop_eps > 0)) throw ConfigError("run.stop_eps must be positive");
    run.settle_T = jr.value("settle_T", std::uint64_t{10000});
    if (run.settle_T < 1) throw ConfigError("run.settle_T must be >= 1");
    run.max_T = jr.value("max_T", std::uint64_t{50000000});
    run.burn_in = jr.value("burn_in", std::uint64_t{0});
    if (run.max_T < run.settle_T)
        throw ConfigError("run.max_T must be >= run.settle_T");

    OutputConfig output;
    if (doc.contains("output")) {
        const json jo = doc.at("output");
        reject_unknown_keys(jo, "output",
                            {"out_dir", "dump_trajectory", "ring_capacity"});
        output.out_dir = jo.value("out_dir", std::string("out"));
        output.dump_trajectory = jo.value("dump_trajectory", false);
        output.ring_capacity = jo.value("ring_capacity", std::uint64_t{4096});
    }

    SchemeParams scheme;
    try {
        scheme = SchemeParams(K, run.N, g, p, q_exp, L, m0, beta, eps);
    } catch (const std::exception& ex) {
        throw ConfigError(std::string("scheme: ") + ex.what());
    }
    try {
        SystemModel model(A, B, Q, std::move(noise), std::move(init));
        return ExperimentConfig{std::move(model), scheme, run, output};
    } catch (const std::exception& ex) {
        throw ConfigError(std::string("model: ") + ex.what());
    }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
    json doc;
    json jm;
    const int n = cfg.model.n();
    jm["n"] = n;
    auto matrix_json = [n](const Eigen::MatrixXd& m) {
        json rows = json::array();
        for (int i = 0; i < n; ++i) {
            json row = json::array();
            for (int j = 0; j < n; ++j) row.push_back(m(i, j));
            rows.push_back(row);
        }
        return rows;
    };
    jm["A"] = matrix_json(cfg.model.A());
    jm["B"] = matrix_json(cfg.model.B());
    jm["Q"] = matrix_json(cfg.model.Q());
    const NoiseSpec& noise = cfg.model.noise();
    switch (noise.kind) {
        case NoiseSpec::Kind::ScaledBG:
            jm["noise"] = {{"type", "scaled_bg"},
                           {"scale", noise.bg_scale},
                           {"delta", noise.bg_delta}};
            break;
        case NoiseSpec::Kind::Gaussian:
            jm["noise"] = {{"type", "gaussian"}, {"Sigma", matrix_json(noise.sigma)}};
            break;
        case NoiseSpec::Kind::Zero:
            jm["noise"] = {{"type", "zero"}};
            break;
        case NoiseSpec::Kind::ScalarCustom:
            throw ConfigError("custom noise specs cannot be serialized");
    }
    const InitSpec& init = cfg.model.init();
    if (init.kind == InitSpec::Kind::Point) {
        jm["init"] = {{"type", "point"}, {"x", init.x0}};
    } else {
        json law;
        if (init.law.kind == NoiseSpec::Kind::ScaledBG)
            law = {{"type", "scaled_bg"},
                   {"scale", init.law.bg_scale},
                   {"delta", init.law.bg_delta}};
        else if (init.law.kind == NoiseSpec::Kind::Gaussian)
            law = {{"type", "gaussian"}, {"Sigma", matrix_json(init.law.sigma)}};
        else
            law = {{"type", "zero"}};
        jm["init"] = {{"type", "draw"}, {"law", law}};
    }
    doc["model"] = jm;

    doc["scheme"] = {{"K", cfg.scheme.K},        {"g", cfg.scheme.g.str()},
                     {"p", cfg.scheme.p},        {"q_exp", cfg.scheme.q_exp},
                     {"L", cfg.scheme.L},        {"delta0_exp", cfg.scheme.delta0_exp},
                     {"beta", cfg.scheme.beta},  {"eps", cfg.scheme.eps}};

    json jr;
    jr["N"] = cfg.run.N;
    if (!cfg.run.N_list.empty()) jr["N_list"] = cfg.run.N_list;
    jr["seeds_per_N"] = cfg.run.seeds_per_N;
    jr["seed"] = cfg.run.seed;
    jr["stop_eps"] = cfg.run.stop_eps;
    jr["settle_T"] = cfg.run.settle_T;
    jr["max_T"] = cfg.run.max_T;
    jr["burn_in"] = cfg.run.burn_in;
    doc["run"] = jr;

    doc["output"] = {{"out_dir", cfg.output.out_dir},
                     {"dump_trajectory", cfg.output.dump_trajectory},
                     {"ring_capacity", cfg.output.ring_capacity}};
    return doc.dump(2) + "\n";
}

std::string preset_config_text(const std::string& name) {
    if (name == "reproduce-paper") {
        return R"({
  "model": {
    "n": 1,
    "A": [[1.2]],
    "B": [[1.0]],
    "Q": [[1.0]],
    "noise": {"type": "scaled_bg", "scale": 4.0, "delta": 2.0},
    "init": {"type": "point", "x": [0.0]}
  },
  "scheme": {"K": 2, "g": "4/3", "p": 1, "q_exp": 3, "L": 9.0, "delta0_exp": 0, "beta": 3.95, "eps": 0.95},
  "run": {"N": 100, "N_list": {"first": 10, "last": 1000, "step": 2}, "seeds_per_N": 1, "seed": 20240801, "stop_eps": 1e-4, "settle_T": 10000, "max_T": 50000000, "burn_in": 0},
  "output": {"out_dir": "out", "dump_trajectory": false, "ring_capacity": 4096}
}
)";
    }
    if (name == "smoke") {
        return R"({
  "model": {
    "n": 1,
    "A": [[1.2]],
    "B": [[1.0]],
    "Q": [[1.0]],
    "noise": {"type": "scaled_bg", "scale": 4.0, "delta": 2.0},
    "init": {"type": "point", "x": [0.0]}
  },
  "scheme": {"K": 2, "g": "4/3", "p": 1, "q_exp": 3, "L": 9.0, "delta0_exp": 0, "beta": 3.95, "eps": 0.95},
  "run": {"N": 8, "N_list": [4, 8], "seeds_per_N": 1, "seed": 7, "stop_eps": 1e-4, "settle_T": 10000, "max_T": 2000000, "burn_in": 0},
  "output": {"out_dir": "out", "dump_trajectory": false, "ring_capacity": 1024}
}
)";
    }
    throw ConfigError("unknown preset '" + name +
                      "' (expected reproduce-paper | smoke)");
}

} // namespace zq
