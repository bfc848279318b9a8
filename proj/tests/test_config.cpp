#include <string>

#include <gtest/gtest.h>

#include "cyberprem/config.hpp"

using namespace cyberprem;

namespace {

const std::string kConfigDir = CYBERPREM_CONFIG_DIR;

Json anchor_doc() {
    return Json::parse(R"({
        "offspring": {"kind": "deterministic", "k": 2},
        "R": 2,
        "percolation": {"p": 0.5, "q": 0.5},
        "source": {"r": 1},
        "attack": {"lambda": 2, "t": 1},
        "cost": {"kind": "deterministic", "mean": 10},
        "delta": 0.1
    })");
}

std::string error_of(const Json& doc) {
    try {
        build(doc);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Config, BuildAnchor) {
    const ModelConfig cfg = build(anchor_doc());
    EXPECT_EQ(cfg.offspring.mu(), 2.0);
    EXPECT_EQ(cfg.R, 2);
    EXPECT_EQ(cfg.percolation.p, 0.5);
    EXPECT_EQ(cfg.source.weights(), (std::map<int, double>{{1, 1.0}}));
    EXPECT_EQ(cfg.attack.lambda, 2.0);
    EXPECT_EQ(cfg.attack.cost.mean(), 10.0);
    EXPECT_EQ(cfg.delta, 0.1);
    const auto m = cfg.mixed_moments();
    EXPECT_DOUBLE_EQ(m.first, 3.0);
    EXPECT_DOUBLE_EQ(m.second, 11.125);
}

TEST(Config, Defaults) {
    const Json doc = Json::parse(R"({"offspring":{"kind":"matched","mu":5,"sigma2":5},"R":4,
                                     "percolation":{"p":0.1,"q":0.3}})");
    const Json c = canonicalize(doc);
    EXPECT_EQ(c["source"], Json({{"kind", "uniform_over_depth_counts"}}));
    EXPECT_EQ(c["attack"]["lambda"], 1.0);
    EXPECT_EQ(c["attack"]["t"], 1.0);
    EXPECT_EQ(c["cost"]["kind"], "deterministic");
    EXPECT_EQ(c["cost"]["mean"], 1.0);
    EXPECT_EQ(c["delta"], 0.0);
    const ModelConfig cfg = build(doc);
    EXPECT_EQ(cfg.source.weights().size(), 5u);
}

TEST(Config, CanonicalizeIsIdempotentAndOrdered) {
    for (const char* name : {"anchor.json", "figure.json", "portfolio.json"}) {
        const Json doc = load_config(kConfigDir + "/" + name);
        const Json once = canonicalize(doc);
        const Json twice = canonicalize(once);
        EXPECT_EQ(once.dump(), twice.dump()) << name;
        std::vector<std::string> keys;
        for (const auto& [k, v] : once.items()) keys.push_back(k);
        EXPECT_EQ(keys, (std::vector<std::string>{"offspring", "R", "percolation", "source", "attack", "cost", "delta"}));
        // The canonical form builds the same model.
        const auto a = build(doc).mixed_moments();
        const auto b = build(twice).mixed_moments();
        EXPECT_EQ(a.first, b.first);
        EXPECT_EQ(a.second, b.second);
    }
}

TEST(Config, AllKinds) {
    Json doc = anchor_doc();
    doc["offspring"] = {{"kind", "two_point"}, {"a", 4}, {"b", 9}, {"w", 0.8}};
    doc["R"] = 3;
    doc["source"] = {{"law", {{"0", 0.25}, {"3", 0.75}}}};
    doc["cost"] = {{"kind", "shifted_exponential"}, {"mean", 10}, {"variance", 25}};
    ModelConfig cfg = build(doc);
    EXPECT_NEAR(cfg.offspring.mu(), 5.0, 1e-12);
    EXPECT_EQ(cfg.source.weights().at(3), 0.75);
    EXPECT_EQ(cfg.attack.cost.variance(), 25.0);

    doc["offspring"] = {{"kind", "empirical"}, {"pmf", {{"2", 0.3}, {"5", 0.7}}}};
    doc["cost"] = {{"kind", "empirical"}, {"values", {1, 2, 3}}};
    cfg = build(doc);
    EXPECT_NEAR(cfg.offspring.mu(), 4.1, 1e-12);
    EXPECT_NEAR(cfg.attack.cost.mean(), 2.0, 1e-12);

    doc["cost"] = {{"kind", "two_point"}, {"a", 5}, {"b", 50}, {"w", 0.9}};
    EXPECT_NEAR(build(doc).attack.cost.mean(), 9.5, 1e-12);
}

TEST(Config, ErrorsNameTheField) {
    Json doc = anchor_doc();
    doc["extra"] = 1;
    EXPECT_NE(error_of(doc).find("config.extra"), std::string::npos);

    doc = anchor_doc();
    doc["percolation"]["p"] = 1.5;
    EXPECT_NE(error_of(doc).find("config.percolation.p"), std::string::npos);

    doc = anchor_doc();
    doc["percolation"].erase("q");
    EXPECT_NE(error_of(doc).find("config.percolation"), std::string::npos);

    doc = anchor_doc();
    doc["source"] = {{"r", 3}};
    EXPECT_NE(error_of(doc).find("config.source"), std::string::npos);

    doc = anchor_doc();
    doc["offspring"] = {{"kind", "matched"}, {"mu", 1.0}, {"sigma2", 2.0}};
    EXPECT_NE(error_of(doc).find("config.offspring"), std::string::npos);

    doc = anchor_doc();
    doc["offspring"] = {{"kind", "poisson"}};
    EXPECT_NE(error_of(doc).find("unknown offspring kind"), std::string::npos);

    doc = anchor_doc();
    doc["R"] = 2.5;
    EXPECT_NE(error_of(doc).find("config.R"), std::string::npos);

    doc = anchor_doc();
    doc["attack"]["lambda"] = 0;
    EXPECT_NE(error_of(doc).find("config.attack.lambda"), std::string::npos);

    doc = anchor_doc();
    doc["delta"] = -1;
    EXPECT_NE(error_of(doc).find("config.delta"), std::string::npos);

    doc = anchor_doc();
    doc["source"] = {{"r", 1}, {"law", {{"0", 1.0}}}};
    EXPECT_NE(error_of(doc).find("exactly one"), std::string::npos);

    doc = anchor_doc();
    doc["source"] = {{"law", {{"x", 1.0}}}};
    EXPECT_FALSE(error_of(doc).empty());

    EXPECT_THROW(parse_config_text("{ not json"), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
    EXPECT_THROW(build(Json::array()), ConfigError);
}

TEST(Config, SetField) {
    Json doc = anchor_doc();
    set_field(doc, "percolation.p", 0.25);
    set_field(doc, "R", 3);
    set_field(doc, "attack.t", 4.0);
    const ModelConfig cfg = build(doc);
    EXPECT_EQ(cfg.percolation.p, 0.25);
    EXPECT_EQ(cfg.R, 3);
    EXPECT_EQ(cfg.attack.t, 4.0);
    Json empty = Json::object();
    set_field(empty, "a.b.c", 1);
    EXPECT_EQ(empty["a"]["b"]["c"], 1);
}
