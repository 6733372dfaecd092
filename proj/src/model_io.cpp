#include <chainsleuth/ml.hpp>

#include <json.hpp>

#include <fstream>

namespace chainsleuth {

using nlohmann::json;

namespace {

constexpr int format_version = 1;

json to_json(const TrainedModel &m) {
    json j;
    j["format"] = "chainsleuth-model";
    j["version"] = format_version;
    j["kind"] = m.kind == ModelKind::RandomForest ? "random_forest" : "logistic_regression";
    j["features"] = m.feature_names;
    j["seed"] = m.seed;
    if (m.kind == ModelKind::LogisticRegression) {
        j["config"] = {{"max_iterations", m.logistic.max_iterations},
                       {"l2_strength", m.logistic.l2_strength},
                       {"tolerance", m.logistic.tolerance}};
        j["weights"] = m.weights;
        j["intercept"] = m.intercept;
        j["loss_history"] = m.loss_history;
        return j;
    }
    j["config"] = {{"estimators", m.forest.estimators},   {"max_features", m.forest.max_features},
                   {"bootstrap", m.forest.bootstrap},     {"min_samples_leaf", m.forest.min_samples_leaf},
                   {"max_depth", m.forest.max_depth},     {"seed", m.forest.seed}};
    j["impurity_importance"] = m.impurity_importance;
    json trees = json::array();
    for (const auto &t : m.trees) {
        // Columnar node layout keeps files compact.
        json f = json::array(), th = json::array(), l = json::array(), r = json::array(), p = json::array();
        for (const auto &n : t.nodes) {
            f.push_back(n.feature);
            th.push_back(n.threshold);
            l.push_back(n.left);
            r.push_back(n.right);
            p.push_back(n.illicit_fraction);
        }
        trees.push_back({{"feature", f}, {"threshold", th}, {"left", l}, {"right", r}, {"illicit_fraction", p}});
    }
    j["trees"] = std::move(trees);
    return j;
}

TrainedModel from_json(const json &j) {
    if (j.value("format", "") != "chainsleuth-model" || j.value("version", 0) != format_version)
        throw error(errc::parse_error, "not a chainsleuth model file");
    TrainedModel m;
    const auto kind = j.at("kind").get<std::string>();
    m.feature_names = j.at("features").get<std::vector<std::string>>();
    m.seed = j.at("seed").get<std::uint64_t>();
    const auto &c = j.at("config");
    if (kind == "logistic_regression") {
        m.kind = ModelKind::LogisticRegression;
        m.logistic.max_iterations = c.at("max_iterations").get<int>();
        m.logistic.l2_strength = c.at("l2_strength").get<double>();
        m.logistic.tolerance = c.at("tolerance").get<double>();
        m.weights = j.at("weights").get<std::vector<double>>();
        m.intercept = j.at("intercept").get<double>();
        m.loss_history = j.at("loss_history").get<std::vector<double>>();
        if (m.weights.size() != m.feature_names.size())
            throw error(errc::parse_error, "weight count differs from feature count");
        return m;
    }
    if (kind != "random_forest")
        throw error(errc::parse_error, "unknown model kind " + kind);
    m.kind = ModelKind::RandomForest;
    m.forest.estimators = c.at("estimators").get<int>();
    m.forest.max_features = c.at("max_features").get<int>();
    m.forest.bootstrap = c.at("bootstrap").get<bool>();
    m.forest.min_samples_leaf = c.at("min_samples_leaf").get<int>();
    m.forest.max_depth = c.at("max_depth").get<int>();
    m.forest.seed = c.at("seed").get<std::uint64_t>();
    m.impurity_importance = j.at("impurity_importance").get<std::vector<double>>();
    for (const auto &t : j.at("trees")) {
        const auto f = t.at("feature").get<std::vector<std::int32_t>>();
        const auto th = t.at("threshold").get<std::vector<double>>();
        const auto l = t.at("left").get<std::vector<std::uint32_t>>();
        const auto r = t.at("right").get<std::vector<std::uint32_t>>();
        const auto p = t.at("illicit_fraction").get<std::vector<double>>();
        if (f.empty() || th.size() != f.size() || l.size() != f.size() || r.size() != f.size() ||
            p.size() != f.size())
            throw error(errc::parse_error, "inconsistent tree arrays");
        DecisionTree tree;
        for (std::size_t i = 0; i < f.size(); ++i) {
            if (f[i] >= 0 && (static_cast<std::size_t>(f[i]) >= m.feature_names.size() || l[i] <= i ||
                              r[i] <= i || l[i] >= f.size() || r[i] >= f.size()))
                throw error(errc::parse_error, "tree node out of range");
            tree.nodes.push_back({f[i], th[i], l[i], r[i], p[i]});
        }
        m.trees.push_back(std::move(tree));
    }
    if (m.trees.empty())
        throw error(errc::parse_error, "forest without trees");
    return m;
}

} // namespace

void save_model(const TrainedModel &model, std::ostream &out) { out << to_json(model).dump() << '\n'; }

TrainedModel load_model(std::istream &in) {
    try {
        return from_json(json::parse(in));
    } catch (const json::exception &e) {
        throw error(errc::parse_error, e.what());
    }
}

void save_model(const TrainedModel &model, const std::filesystem::path &file) {
    std::ofstream out(file, std::ios::binary);
    if (!out)
        throw error(errc::io_error, "cannot write " + file.string());
    save_model(model, out);
}

TrainedModel load_model(const std::filesystem::path &file) {
    std::ifstream in(file, std::ios::binary);
    if (!in)
        throw error(errc::missing_file, file.string());
    return load_model(in);
}

} // namespace chainsleuth
