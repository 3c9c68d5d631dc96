/**
 * @file config.hpp
 * @brief Run configuration read from JSON.
 *
 * Layout (all sections except "model" and "mc.seed" are optional):
 *
 *     {
 *       "model":      {"mu": [..], "sigma": [..], "Q": [[..], ..], "T": 0.5},
 *       "grid":       {"n_x": 400, "n_t": 200, "z_max": 2.1},
 *       "mc":         {"n_paths": 100000, "n_steps": 200, "seed": 1},
 *       "tolerances": {"tol_abs": 1e-9, "eps_sign": 4e-3},
 *       "outputs":    {"directory": "out", "plot_scripts": false},
 *       "volterra":   {"n_quad": 64, "stride": 10},
 *       "eval":       {"j0": [1, 2], "thresholds": [[1.05, 1.05]]}
 *     }
 *
 * Regimes are numbered from 1 in the file. Errors name the offending key
 * path (e.g. "model.sigma[1]") or the line and column of a syntax error.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ultimax/error.hpp"
#include "ultimax/model.hpp"
#include "ultimax/tolerances.hpp"
#include "ultimax/volterra.hpp"

namespace ultimax {

struct RunConfig {
    RegimeModel model;
    std::size_t n_x = kDefaultSpaceNodes;
    std::size_t n_t = 0;  ///< 0: default for the horizon
    std::optional<double> z_max;
    std::size_t n_paths = 100000;
    std::size_t n_steps = 0;  ///< 0: same as n_t
    std::uint64_t seed = 0;
    double tol_abs = kTolAbs;
    double eps_sign = kEpsSign;
    std::string out_dir = "out";
    bool plot_scripts = false;
    std::size_t n_quad = kDefaultQuadratureNodes;
    std::size_t volterra_stride = kVolterraRowStride;
    std::vector<std::size_t> eval_j0;  ///< zero-based; empty: every regime
    std::vector<std::vector<double>> thresholds;
    nlohmann::json source;  ///< parsed document, for hashing
};

namespace detail {

using nlohmann::json;

[[noreturn]] inline void config_error(const std::string& where, const std::string& what) {
    throw Error(ErrorCode::Config, where + ": " + what);
}

inline const json* member(const json& obj, const std::string& path, const char* key) {
    if (!obj.is_object()) config_error(path, "expected an object");
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

inline double number(const json& v, const std::string& path) {
    if (!v.is_number()) config_error(path, "expected a number");
    return v.get<double>();
}

inline std::size_t count(const json& v, const std::string& path) {
    if (!v.is_number_integer() || v.get<long long>() < 1) config_error(path, "expected an integer >= 1");
    return v.get<std::size_t>();
}

inline std::vector<double> numbers(const json& v, const std::string& path) {
    if (!v.is_array()) config_error(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

inline void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* k : keys) known = known || key == k;
        if (!known) config_error(join(path, key), "unknown key");
    }
}

inline std::string location(const std::string& text, std::size_t byte) {
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
    using namespace detail;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        config_error(location(text, e.byte), "syntax error");
    }
    RunConfig c;
    c.source = doc;
    if (!doc.is_object()) config_error("<root>", "expected an object");
    reject_unknown(doc, "", {"model", "grid", "mc", "tolerances", "outputs", "volterra", "eval"});

    const json* model = member(doc, "", "model");
    if (!model) config_error("model", "missing");
    reject_unknown(*model, "model", {"mu", "sigma", "Q", "T"});
    for (const char* key : {"mu", "sigma", "Q", "T"})
        if (!member(*model, "model", key)) config_error(join("model", key), "missing");
    c.model.mu = numbers(model->at("mu"), "model.mu");
    c.model.sigma = numbers(model->at("sigma"), "model.sigma");
    c.model.T = number(model->at("T"), "model.T");
    const json& q = model->at("Q");
    if (!q.is_array() || q.empty()) config_error("model.Q", "expected a square array of rows");
    c.model.Q = SquareMatrix(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
        const std::string row_path = "model.Q[" + std::to_string(i) + "]";
        const auto row = numbers(q[i], row_path);
        if (row.size() != q.size()) config_error(row_path, "expected " + std::to_string(q.size()) + " entries");
        for (std::size_t j = 0; j < row.size(); ++j) c.model.Q(i, j) = row[j];
    }

    if (const json* grid = member(doc, "", "grid")) {
        reject_unknown(*grid, "grid", {"n_x", "n_t", "z_max"});
        if (const json* v = member(*grid, "grid", "n_x")) c.n_x = count(*v, "grid.n_x");
        if (const json* v = member(*grid, "grid", "n_t")) c.n_t = count(*v, "grid.n_t");
        if (const json* v = member(*grid, "grid", "z_max")) {
            c.z_max = number(*v, "grid.z_max");
            if (!(*c.z_max > 0.0)) config_error("grid.z_max", "must be positive");
        }
        if (c.n_x < 3) config_error("grid.n_x", "needs at least 3 nodes");
    }

    const json* mc = member(doc, "", "mc");
    if (!mc || !member(*mc, "mc", "seed")) config_error("mc.seed", "missing; runs must be seeded explicitly");
    reject_unknown(*mc, "mc", {"n_paths", "n_steps", "seed"});
    if (const json* v = member(*mc, "mc", "n_paths")) c.n_paths = count(*v, "mc.n_paths");
    if (const json* v = member(*mc, "mc", "n_steps")) c.n_steps = count(*v, "mc.n_steps");
    if (!mc->at("seed").is_number_unsigned()) config_error("mc.seed", "expected a non-negative integer");
    c.seed = mc->at("seed").get<std::uint64_t>();

    if (const json* tol = member(doc, "", "tolerances")) {
        reject_unknown(*tol, "tolerances", {"tol_abs", "eps_sign"});
        if (const json* v = member(*tol, "tolerances", "tol_abs")) c.tol_abs = number(*v, "tolerances.tol_abs");
        if (const json* v = member(*tol, "tolerances", "eps_sign")) c.eps_sign = number(*v, "tolerances.eps_sign");
        if (!(c.tol_abs >= 0.0)) config_error("tolerances.tol_abs", "must be >= 0");
        if (!(c.eps_sign >= 0.0)) config_error("tolerances.eps_sign", "must be >= 0");
    }

    if (const json* out = member(doc, "", "outputs")) {
        reject_unknown(*out, "outputs", {"directory", "plot_scripts"});
        if (const json* v = member(*out, "outputs", "directory")) {
            if (!v->is_string()) config_error("outputs.directory", "expected a string");
            c.out_dir = v->get<std::string>();
        }
        if (const json* v = member(*out, "outputs", "plot_scripts")) {
            if (!v->is_boolean()) config_error("outputs.plot_scripts", "expected true or false");
            c.plot_scripts = v->get<bool>();
        }
    }

    if (const json* vol = member(doc, "", "volterra")) {
        reject_unknown(*vol, "volterra", {"n_quad", "stride"});
        if (const json* v = member(*vol, "volterra", "n_quad")) c.n_quad = count(*v, "volterra.n_quad");
        if (const json* v = member(*vol, "volterra", "stride")) c.volterra_stride = count(*v, "volterra.stride");
        if (c.n_quad < 2) config_error("volterra.n_quad", "needs at least 2 nodes");
    }

    const std::size_t m = c.model.mu.size();
    if (const json* ev = member(doc, "", "eval")) {
        reject_unknown(*ev, "eval", {"j0", "thresholds"});
        if (const json* v = member(*ev, "eval", "j0")) {
            if (!v->is_array()) config_error("eval.j0", "expected an array of regimes");
            for (std::size_t i = 0; i < v->size(); ++i) {
                const std::string p = "eval.j0[" + std::to_string(i) + "]";
                const std::size_t j = count((*v)[i], p);
                if (j > m) config_error(p, "regime out of range 1.." + std::to_string(m));
                c.eval_j0.push_back(j - 1);
            }
        }
        if (const json* v = member(*ev, "eval", "thresholds")) {
            if (!v->is_array()) config_error("eval.thresholds", "expected an array of level arrays");
            for (std::size_t i = 0; i < v->size(); ++i) {
                const std::string p = "eval.thresholds[" + std::to_string(i) + "]";
                auto levels = numbers((*v)[i], p);
                if (levels.size() != m) config_error(p, "expected one level per regime");
                for (double l : levels)
                    if (!(l >= 1.0)) config_error(p, "levels must be >= 1");
                c.thresholds.push_back(std::move(levels));
            }
        }
    }
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Config, path + ": cannot open");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config(buf.str());
    } catch (const Error& e) {
        throw Error(e.code(), path + ": " + e.message());
    }
}

/// 64-bit FNV-1a of the compact JSON text.
inline std::uint64_t config_hash(const nlohmann::json& doc) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : doc.dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace ultimax
