#include "mfc/model_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace mfc {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& origin, const std::string& message) {
    throw std::runtime_error(origin + ": " + message);
}

json parse_with_position(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        const std::size_t upto = std::min(text.size(), e.byte > 0 ? e.byte - 1 : 0);
        for (std::size_t i = 0; i < upto; ++i)
            if (text[i] == '\n') ++line;
        throw std::runtime_error(origin + ":" + std::to_string(line) + ": " + e.what());
    }
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& origin, const std::string& context) {
    for (const auto& item : obj.items()) {
        if (std::none_of(allowed.begin(), allowed.end(),
                         [&](const char* k) { return item.key() == k; }))
            fail(origin, "unknown key \"" + item.key() + "\" in " + context);
    }
}

std::vector<double> as_vector(const json& v, const std::string& origin, const char* what) {
    if (!v.is_array()) fail(origin, std::string(what) + " must be an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& x : v) {
        if (!x.is_number()) fail(origin, std::string(what) + " must contain numbers only");
        out.push_back(x.get<double>());
    }
    return out;
}

std::vector<std::vector<double>> as_matrix(const json& v, const std::string& origin,
                                           const char* what) {
    if (!v.is_array() || v.empty() || !v.front().is_array())
        fail(origin, std::string(what) + " must be a matrix (array of arrays)");
    std::vector<std::vector<double>> rows;
    rows.reserve(v.size());
    for (const auto& r : v) rows.push_back(as_vector(r, origin, what));
    return rows;
}

int read_horizon(const json& doc, const std::string& origin) {
    if (!doc.contains("horizon")) fail(origin, "missing \"horizon\"");
    if (!doc["horizon"].is_number_integer() || doc["horizon"].get<int>() < 0)
        fail(origin, "\"horizon\" must be a nonnegative integer");
    return doc["horizon"].get<int>();
}

ModelFile parse_feynman_kac(const json& doc, const std::string& origin) {
    check_keys(doc, {"schema_version", "type", "states", "horizon", "initial", "potentials",
                     "mutations", "epsilons"},
               origin, "feynman_kac model");
    const int horizon = read_horizon(doc, origin);
    if (horizon < 1) fail(origin, "feynman_kac horizon must be >= 1");
    if (!doc.contains("initial")) fail(origin, "missing \"initial\"");
    ProbabilityVector initial(as_vector(doc["initial"], origin, "initial"));
    if (doc.contains("states") &&
        doc["states"].get<std::size_t>() != initial.size())
        fail(origin, "\"states\" disagrees with the initial distribution size");

    const std::size_t n = static_cast<std::size_t>(horizon);
    std::vector<BoundedFunction> potentials;
    if (!doc.contains("potentials")) fail(origin, "missing \"potentials\"");
    if (!doc["potentials"].is_array() || doc["potentials"].empty())
        fail(origin, "\"potentials\" must be a nonempty array");
    if (doc["potentials"].front().is_array()) {
        for (const auto& g : doc["potentials"])
            potentials.emplace_back(as_vector(g, origin, "potential"));
    } else {
        const BoundedFunction g(as_vector(doc["potentials"], origin, "potentials"));
        potentials.assign(n, g);
    }

    std::vector<FiniteKernel> mutations;
    if (!doc.contains("mutations")) fail(origin, "missing \"mutations\"");
    const json& muts = doc["mutations"];
    if (!muts.is_array() || muts.empty()) fail(origin, "\"mutations\" must be a nonempty array");
    if (muts.front().is_array() && !muts.front().empty() && muts.front().front().is_array()) {
        for (const auto& m : muts) mutations.emplace_back(as_matrix(m, origin, "mutation"));
    } else {
        const FiniteKernel m(as_matrix(muts, origin, "mutations"));
        mutations.assign(n, m);
    }

    std::vector<double> epsilons;
    if (!doc.contains("epsilons")) {
        epsilons.assign(n, 0.0);
    } else if (doc["epsilons"].is_number()) {
        epsilons.assign(n, doc["epsilons"].get<double>());
    } else {
        epsilons = as_vector(doc["epsilons"], origin, "epsilons");
    }

    if (potentials.size() != n || mutations.size() != n || epsilons.size() != n)
        fail(origin, "per-generation lists must have exactly \"horizon\" entries");
    return {FeynmanKacModel(std::move(potentials), std::move(mutations), std::move(epsilons),
                            std::move(initial)),
            horizon};
}

ModelFile parse_gas(const json& doc, const std::string& origin) {
    check_keys(doc, {"schema_version", "type", "states", "horizon", "initial", "nu",
                     "collision_weights", "post_collision"},
               origin, "mckean_gas model");
    const int horizon = read_horizon(doc, origin);
    for (const char* key : {"initial", "nu", "collision_weights", "post_collision"})
        if (!doc.contains(key)) fail(origin, std::string("missing \"") + key + "\"");
    ProbabilityVector initial(as_vector(doc["initial"], origin, "initial"));
    std::vector<double> nu = as_vector(doc["nu"], origin, "nu");
    auto weights = as_matrix(doc["collision_weights"], origin, "collision_weights");
    std::vector<FiniteKernel> post;
    for (const auto& m : doc["post_collision"])
        post.emplace_back(as_matrix(m, origin, "post_collision"));
    return {McKeanGasModel(std::move(nu), std::move(weights), std::move(post),
                           std::move(initial)),
            horizon};
}

ModelFile parse_two_velocities(const json& doc, const std::string& origin) {
    check_keys(doc, {"schema_version", "type", "horizon", "p_plus"}, origin,
               "two_velocities model");
    const int horizon = read_horizon(doc, origin);
    if (!doc.contains("p_plus")) fail(origin, "missing \"p_plus\"");
    return {McKeanGasModel::two_velocities(doc["p_plus"].get<double>()), horizon};
}

ScalarFunc parse_scalar_func(const json& v, const std::string& origin, const char* what) {
    if (!v.is_object()) fail(origin, std::string(what) + " must be an object");
    check_keys(v, {"c0", "c1", "amp", "scale"}, origin, what);
    ScalarFunc f;
    if (v.contains("c0")) f.c0 = v["c0"].get<double>();
    if (v.contains("c1")) f.c1 = v["c1"].get<double>();
    if (v.contains("amp")) f.amp = v["amp"].get<double>();
    if (v.contains("scale")) f.scale = v["scale"].get<double>();
    if (f.scale <= 0.0) fail(origin, std::string(what) + ": \"scale\" must be > 0");
    return f;
}

ModelFile parse_gaussian(const json& doc, const std::string& origin) {
    check_keys(doc, {"schema_version", "type", "horizon", "drift", "noise_variance", "initial"},
               origin, "gaussian model");
    const int horizon = read_horizon(doc, origin);
    if (!doc.contains("drift") || !doc["drift"].is_object()) fail(origin, "missing \"drift\"");
    check_keys(doc["drift"], {"a", "b", "c"}, origin, "drift");
    ScalarFunc a, b, c;
    if (doc["drift"].contains("a")) a = parse_scalar_func(doc["drift"]["a"], origin, "drift.a");
    if (doc["drift"].contains("b")) b = parse_scalar_func(doc["drift"]["b"], origin, "drift.b");
    if (doc["drift"].contains("c")) c = parse_scalar_func(doc["drift"]["c"], origin, "drift.c");
    const double q = doc.contains("noise_variance") ? doc["noise_variance"].get<double>() : 1.0;
    double mean = 0.0;
    double variance = 1.0;
    if (doc.contains("initial")) {
        check_keys(doc["initial"], {"mean", "variance"}, origin, "initial");
        if (doc["initial"].contains("mean")) mean = doc["initial"]["mean"].get<double>();
        if (doc["initial"].contains("variance"))
            variance = doc["initial"]["variance"].get<double>();
    }
    return {GaussianMeanFieldModel(a, b, c, q, mean, variance), horizon};
}

}  // namespace

ModelFile parse_model_json(const std::string& text, const std::string& origin) {
    const json doc = parse_with_position(text, origin);
    if (!doc.is_object()) fail(origin, "model document must be a JSON object");
    if (!doc.contains("type") || !doc["type"].is_string()) fail(origin, "missing \"type\"");
    const std::string type = doc["type"].get<std::string>();
    try {
        if (type == "feynman_kac") return parse_feynman_kac(doc, origin);
        if (type == "mckean_gas") return parse_gas(doc, origin);
        if (type == "two_velocities") return parse_two_velocities(doc, origin);
        if (type == "gaussian") return parse_gaussian(doc, origin);
    } catch (const std::invalid_argument& e) {
        fail(origin, e.what());
    }
    fail(origin, "unknown model type \"" + type + "\"");
}

ModelFile load_model_file(const std::string& path) {
    return parse_model_json(read_file(path), path);
}

ConcentrationParams parse_params_json(const std::string& text, const std::string& origin) {
    const json doc = parse_with_position(text, origin);
    if (!doc.is_object()) fail(origin, "params document must be a JSON object");
    try {
        if (doc.contains("mixing")) {
            check_keys(doc, {"schema_version", "mixing", "sigma_sq"}, origin, "params");
            const json& mix = doc["mixing"];
            check_keys(mix, {"m", "eps_m", "delta_m", "delta_m_minus_1"}, origin, "mixing");
            for (const char* key : {"m", "eps_m", "delta_m", "delta_m_minus_1"})
                if (!mix.contains(key)) fail(origin, std::string("missing mixing key \"") + key + "\"");
            const MixingParams params(mix["m"].get<int>(), mix["eps_m"].get<double>(),
                                      mix["delta_m"].get<double>(),
                                      mix["delta_m_minus_1"].get<double>());
            const double sigma_sq = doc.contains("sigma_sq") ? doc["sigma_sq"].get<double>() : 0.25;
            return fk_uniform_params(params, sigma_sq, 0).params;
        }
        check_keys(doc, {"schema_version", "r", "sigma_bar_sq", "beta_sq", "b_star"}, origin,
                   "params");
        ConcentrationParams p;
        for (const char* key : {"r", "sigma_bar_sq", "beta_sq", "b_star"})
            if (!doc.contains(key)) fail(origin, std::string("missing key \"") + key + "\"");
        p.r = doc["r"].get<double>();
        p.sigma_bar_sq = doc["sigma_bar_sq"].get<double>();
        p.beta_sq = doc["beta_sq"].get<double>();
        p.b_star = doc["b_star"].get<double>();
        if (p.r < 0.0 || p.sigma_bar_sq < 0.0 || p.beta_sq < 0.0 || p.b_star < 0.0)
            fail(origin, "certificate parameters must be nonnegative");
        return p;
    } catch (const std::invalid_argument& e) {
        fail(origin, e.what());
    }
}

ConcentrationParams load_params_file(const std::string& path) {
    return parse_params_json(read_file(path), path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path + ": cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(path + ": cannot open file for writing");
    out << content;
    if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace mfc
