#pragma once

// JSON model configuration.
//
//   {
//     "offspring":   {"kind":"matched","mu":5,"sigma2":5},
//     "R":           4,
//     "percolation": {"p":0.1,"q":0.3},
//     "source":      {"r":2}  |  {"law":{"0":0.25,"1":0.75}}
//                             |  {"kind":"uniform_over_depth_counts"},
//     "attack":      {"lambda":2,"t":1},
//     "cost":        {"kind":"deterministic","mean":10},
//     "delta":       0.1
//   }
//
// Offspring kinds: deterministic{k}, two_point{a,b,w}, matched{mu,sigma2},
// empirical{pmf}. Cost kinds: deterministic{mean}, two_point{a,b,w},
// shifted_exponential{mean,variance}, empirical{values}.
//
// canonicalize() validates a document and returns it with defaults filled in
// and a fixed key order; build() turns a document into a ModelConfig.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cyberprem/dist.hpp"
#include "cyberprem/error.hpp"
#include "cyberprem/model.hpp"
#include "cyberprem/premium.hpp"

namespace cyberprem {

using Json = nlohmann::ordered_json;

namespace detail {

inline const Json& field(const Json& obj, const std::string& path, const std::string& key) {
    if (!obj.is_object()) throw ConfigError(path + ": expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError(path + "." + key + ": missing required field");
    return *it;
}

inline double number(const Json& obj, const std::string& path, const std::string& key) {
    const Json& v = field(obj, path, key);
    if (!v.is_number()) throw ConfigError(path + "." + key + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(path + "." + key + ": expected a finite number");
    return x;
}

inline double number_or(const Json& obj, const std::string& path, const std::string& key, double fallback) {
    return obj.contains(key) ? number(obj, path, key) : fallback;
}

inline int integer(const Json& obj, const std::string& path, const std::string& key) {
    const Json& v = field(obj, path, key);
    if (v.is_number_integer()) return v.get<int>();
    if (v.is_number_float()) {
        const double x = v.get<double>();
        if (std::floor(x) == x && std::fabs(x) < 1e9) return static_cast<int>(x);
    }
    throw ConfigError(path + "." + key + ": expected an integer");
}

inline std::string kind(const Json& obj, const std::string& path) {
    const Json& v = field(obj, path, "kind");
    if (!v.is_string()) throw ConfigError(path + ".kind: expected a string");
    return v.get<std::string>();
}

inline int parse_key(const std::string& key, const std::string& path) {
    std::size_t used = 0;
    int value = 0;
    try {
        value = std::stoi(key, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (key.empty() || used != key.size()) throw ConfigError(path + ": key '" + key + "' is not an integer");
    return value;
}

inline std::map<int, double> int_keyed_weights(const Json& obj, const std::string& path) {
    if (!obj.is_object() || obj.empty()) throw ConfigError(path + ": expected a non-empty object");
    std::map<int, double> out;
    for (const auto& [key, value] : obj.items()) {
        if (!value.is_number()) throw ConfigError(path + "." + key + ": expected a number");
        out[parse_key(key, path)] = value.get<double>();
    }
    return out;
}

inline Json weights_to_json(const std::map<int, double>& w) {
    Json out = Json::object();
    for (const auto& [k, v] : w) out[std::to_string(k)] = v;
    return out;
}

template <class F>
auto rethrow_with_path(const std::string& path, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

inline Json canonical_offspring(const Json& o, const std::string& path) {
    const std::string k = kind(o, path);
    Json out;
    out["kind"] = k;
    if (k == "deterministic") {
        out["k"] = integer(o, path, "k");
    } else if (k == "two_point") {
        out["a"] = integer(o, path, "a");
        out["b"] = integer(o, path, "b");
        out["w"] = number(o, path, "w");
    } else if (k == "matched") {
        out["mu"] = number(o, path, "mu");
        out["sigma2"] = number(o, path, "sigma2");
    } else if (k == "empirical") {
        out["pmf"] = weights_to_json(int_keyed_weights(field(o, path, "pmf"), path + ".pmf"));
    } else {
        throw ConfigError(path + ".kind: unknown offspring kind '" + k +
                          "' (expected deterministic, two_point, matched, empirical)");
    }
    return out;
}

inline OffspringDistribution build_offspring(const Json& o, const std::string& path) {
    return rethrow_with_path(path, [&] {
        const std::string k = o["kind"].get<std::string>();
        if (k == "deterministic") return make_deterministic(o["k"].get<int>());
        if (k == "two_point") return make_two_point(o["a"].get<int>(), o["b"].get<int>(), o["w"].get<double>());
        if (k == "matched") return make_matched(o["mu"].get<double>(), o["sigma2"].get<double>());
        return OffspringDistribution::from_pmf(int_keyed_weights(o["pmf"], path + ".pmf"));
    });
}

inline Json canonical_cost(const Json& c, const std::string& path) {
    const std::string k = kind(c, path);
    Json out;
    out["kind"] = k;
    if (k == "deterministic") {
        out["mean"] = number(c, path, "mean");
    } else if (k == "two_point") {
        out["a"] = number(c, path, "a");
        out["b"] = number(c, path, "b");
        out["w"] = number(c, path, "w");
    } else if (k == "shifted_exponential") {
        out["mean"] = number(c, path, "mean");
        out["variance"] = number(c, path, "variance");
    } else if (k == "empirical") {
        const Json& values = field(c, path, "values");
        if (!values.is_array() || values.empty()) throw ConfigError(path + ".values: expected a non-empty array");
        Json arr = Json::array();
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!values[i].is_number()) {
                throw ConfigError(path + ".values[" + std::to_string(i) + "]: expected a number");
            }
            arr.push_back(values[i].get<double>());
        }
        out["values"] = arr;
    } else {
        throw ConfigError(path + ".kind: unknown cost kind '" + k +
                          "' (expected deterministic, two_point, shifted_exponential, empirical)");
    }
    return out;
}

inline CostDistribution build_cost(const Json& c, const std::string& path) {
    return rethrow_with_path(path, [&] {
        const std::string k = c["kind"].get<std::string>();
        if (k == "deterministic") return CostDistribution::deterministic(c["mean"].get<double>());
        if (k == "two_point") {
            return CostDistribution::two_point(c["a"].get<double>(), c["b"].get<double>(), c["w"].get<double>());
        }
        if (k == "shifted_exponential") {
            return CostDistribution::shifted_exponential(c["mean"].get<double>(), c["variance"].get<double>());
        }
        return CostDistribution::empirical(c["values"].get<std::vector<double>>());
    });
}

inline Json canonical_source(const Json& s, const std::string& path) {
    if (!s.is_object()) throw ConfigError(path + ": expected an object");
    const int forms = static_cast<int>(s.contains("r")) + static_cast<int>(s.contains("law")) +
                      static_cast<int>(s.contains("kind"));
    if (forms != 1) throw ConfigError(path + ": expected exactly one of 'r', 'law', 'kind'");
    Json out;
    if (s.contains("r")) {
        out["r"] = integer(s, path, "r");
    } else if (s.contains("law")) {
        out["law"] = weights_to_json(int_keyed_weights(s["law"], path + ".law"));
    } else {
        const std::string k = kind(s, path);
        if (k != "uniform_over_depth_counts") {
            throw ConfigError(path + ".kind: unknown source kind '" + k + "' (expected uniform_over_depth_counts)");
        }
        out["kind"] = k;
    }
    return out;
}

inline SourceLaw build_source(const Json& s, const std::string& path, int R, double mu) {
    return rethrow_with_path(path, [&] {
        SourceLaw law = s.contains("r")        ? SourceLaw::point(s["r"].get<int>())
                        : s.contains("law")    ? SourceLaw::from_weights(int_keyed_weights(s["law"], path + ".law"))
                                               : SourceLaw::uniform_over_depth_counts(R, mu);
        law.validate_against(R);
        return law;
    });
}

}  // namespace detail

inline Json canonicalize(const Json& doc) {
    if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
    static const std::vector<std::string> known = {"offspring", "R", "percolation", "source", "attack", "cost", "delta"};
    for (const auto& [key, value] : doc.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ConfigError("config." + key + ": unknown field");
        }
    }
    Json out;
    out["offspring"] = detail::canonical_offspring(detail::field(doc, "config", "offspring"), "config.offspring");
    const int R = detail::integer(doc, "config", "R");
    if (R < 0) throw ConfigError("config.R: must be >= 0");
    out["R"] = R;
    const Json& perc = detail::field(doc, "config", "percolation");
    out["percolation"] = {{"p", detail::number(perc, "config.percolation", "p")},
                          {"q", detail::number(perc, "config.percolation", "q")}};
    for (const char* key : {"p", "q"}) {
        const double v = out["percolation"][key].get<double>();
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string("config.percolation.") + key + ": must lie in [0,1]");
    }
    out["source"] = doc.contains("source") ? detail::canonical_source(doc["source"], "config.source")
                                           : Json{{"kind", "uniform_over_depth_counts"}};
    const Json attack = doc.contains("attack") ? doc["attack"] : Json::object();
    out["attack"] = {{"lambda", detail::number_or(attack, "config.attack", "lambda", 1.0)},
                     {"t", detail::number_or(attack, "config.attack", "t", 1.0)}};
    if (!(out["attack"]["lambda"].get<double>() > 0.0)) throw ConfigError("config.attack.lambda: must be > 0");
    if (!(out["attack"]["t"].get<double>() >= 0.0)) throw ConfigError("config.attack.t: must be >= 0");
    out["cost"] = doc.contains("cost") ? detail::canonical_cost(doc["cost"], "config.cost")
                                       : Json{{"kind", "deterministic"}, {"mean", 1.0}};
    out["delta"] = detail::number_or(doc, "config", "delta", 0.0);
    if (!(out["delta"].get<double>() >= 0.0)) throw ConfigError("config.delta: must be >= 0");
    return out;
}

inline ModelConfig build(const Json& doc) {
    const Json c = canonicalize(doc);
    OffspringDistribution offspring = detail::build_offspring(c["offspring"], "config.offspring");
    const int R = c["R"].get<int>();
    SourceLaw source = detail::build_source(c["source"], "config.source", R, offspring.mu());
    AttackModel attack{c["attack"]["lambda"].get<double>(), c["attack"]["t"].get<double>(),
                       detail::build_cost(c["cost"], "config.cost")};
    ModelConfig cfg{std::move(offspring),
                    R,
                    {c["percolation"]["p"].get<double>(), c["percolation"]["q"].get<double>()},
                    std::move(source),
                    std::move(attack),
                    c["delta"].get<double>()};
    detail::rethrow_with_path("config", [&] {
        cfg.validate();
        return 0;
    });
    return cfg;
}

inline Json parse_config_text(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
}

inline Json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

// Sets a dotted field such as "percolation.p", creating objects as needed.
inline void set_field(Json& doc, const std::string& dotted, const Json& value) {
    Json* node = &doc;
    std::size_t start = 0;
    for (;;) {
        const std::size_t dot = dotted.find('.', start);
        const std::string key = dotted.substr(start, dot - start);
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        if (!node->contains(key) || !(*node)[key].is_object()) (*node)[key] = Json::object();
        node = &(*node)[key];
        start = dot + 1;
    }
}

}  // namespace cyberprem
