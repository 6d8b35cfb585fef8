#include "pamcts/qtable.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>

namespace pamcts {

DiscretizationScheme::DiscretizationScheme(std::vector<std::vector<double>> edges)
    : edges_(std::move(edges)) {
    cell_count_ = 1;
    for (std::size_t d = 0; d < edges_.size(); ++d) {
        const auto& e = edges_[d];
        if (e.size() < 3) {
            throw ValidationError("dimension " + std::to_string(d) + " needs at least 2 bins");
        }
        for (std::size_t i = 0; i < e.size(); ++i) {
            if (!std::isfinite(e[i])) {
                throw ValidationError("dimension " + std::to_string(d) + " has a non-finite edge");
            }
            if (i > 0 && !(e[i] > e[i - 1])) {
                throw ValidationError("dimension " + std::to_string(d) +
                                      " edges are not strictly increasing");
            }
        }
        const std::size_t b = e.size() - 1;
        if (cell_count_ > std::numeric_limits<std::size_t>::max() / b) {
            cell_count_ = std::numeric_limits<std::size_t>::max();
        } else {
            cell_count_ *= b;
        }
    }
}

DiscretizationScheme DiscretizationScheme::uniform(std::span<const double> lo,
                                                   std::span<const double> hi,
                                                   std::span<const std::size_t> bins) {
    if (lo.size() != hi.size() || lo.size() != bins.size()) {
        throw ValidationError("uniform scheme: bounds and bin counts differ in length");
    }
    std::vector<std::vector<double>> edges(lo.size());
    for (std::size_t d = 0; d < lo.size(); ++d) {
        const std::size_t n = bins[d];
        edges[d].resize(n + 1);
        for (std::size_t i = 0; i <= n; ++i) {
            edges[d][i] = lo[d] + (hi[d] - lo[d]) * static_cast<double>(i) / static_cast<double>(n);
        }
        edges[d][n] = hi[d];
    }
    return DiscretizationScheme(std::move(edges));
}

DiscretizationScheme DiscretizationScheme::cartpole_default() {
    const double lo[] = {-2.4, -2.0, -0.21, -2.0};
    const double hi[] = {2.4, 2.0, 0.21, 2.0};
    const std::size_t bins[] = {12, 12, 12, 12};
    return uniform(lo, hi, bins);
}

std::size_t DiscretizationScheme::bin_of(std::size_t dim, double value) const {
    const auto& e = edges_[dim];
    // Interior edges only: values below e[1] land in bin 0, values at or
    // above e[n-1] in the last bin. NaN lands in bin 0.
    const auto it = std::upper_bound(e.begin() + 1, e.end() - 1, value);
    return static_cast<std::size_t>(it - (e.begin() + 1));
}

std::size_t DiscretizationScheme::cell_of(std::span<const double> features) const {
    if (features.size() != edges_.size()) {
        throw ContractViolation("feature vector has " + std::to_string(features.size()) +
                                " components; scheme has " + std::to_string(edges_.size()));
    }
    std::size_t cell = 0;
    for (std::size_t d = 0; d < edges_.size(); ++d) cell = cell * bins(d) + bin_of(d, features[d]);
    return cell;
}

QTable::QTable(DiscretizationScheme scheme, std::size_t action_count, QTableMetadata meta)
    : scheme_(std::move(scheme)), action_count_(action_count), meta_(std::move(meta)) {
    if (scheme_.cell_count() > kMaxCells) {
        throw ResourceLimitError("discretization has " + std::to_string(scheme_.cell_count()) +
                                 " cells; limit is " + std::to_string(kMaxCells));
    }
    if (action_count_ == 0) throw ValidationError("Q-table needs at least one action");
    values_.assign(scheme_.cell_count() * action_count_, 0.0);
}

QTable::QTable(DiscretizationScheme scheme, std::size_t action_count, std::vector<double> values,
               QTableMetadata meta)
    : QTable(std::move(scheme), action_count, std::move(meta)) {
    if (values.size() != values_.size()) {
        throw ValidationError("Q-table expects " + std::to_string(values_.size()) +
                              " values, got " + std::to_string(values.size()));
    }
    values_ = std::move(values);
}

double TrainConfig::temperature_at(std::size_t step) const {
    if (steps <= 1) return final_temperature;
    const double frac = static_cast<double>(step) / static_cast<double>(steps - 1);
    return initial_temperature * std::pow(final_temperature / initial_temperature, frac);
}

TrainConfig TrainConfig::tabular_cartpole() {
    TrainConfig cfg;
    cfg.learning_rate = 0.2;
    cfg.steps = 10'000'000;
    cfg.initial_temperature = 20.0;
    cfg.final_temperature = 0.5;
    return cfg;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
        throw ValidationError("learning_rate must be in (0, 1]");
    }
    if (steps < 1) throw ValidationError("steps must be >= 1");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ValidationError("gamma must be in (0, 1]");
    if (!(initial_temperature > 0.0) || !(final_temperature > 0.0)) {
        throw ValidationError("temperatures must be positive");
    }
}

namespace detail {

QTable merge_tables(const QTable& a, const QTable& b) {
    std::vector<double> merged(a.values().size());
    for (std::size_t i = 0; i < merged.size(); ++i) merged[i] = 0.5 * (a.values()[i] + b.values()[i]);
    return QTable(a.scheme(), a.action_count(), std::move(merged), a.metadata());
}

}  // namespace detail

nlohmann::json qtable_to_json(const QTable& table) {
    nlohmann::json meta = {{"training_env", table.metadata().training_env},
                           {"gamma", table.metadata().gamma},
                           {"learning_rate", table.metadata().learning_rate},
                           {"steps", table.metadata().steps},
                           {"seed", table.metadata().seed}};
    return nlohmann::json{{"scheme", {{"edges", table.scheme().edges()}}},
                          {"action_count", table.action_count()},
                          {"values", std::vector<double>(table.values().begin(), table.values().end())},
                          {"metadata", std::move(meta)}};
}

namespace {

const nlohmann::json& require(const nlohmann::json& obj, const char* key, const std::string& path) {
    if (!obj.is_object() || !obj.contains(key)) throw LoadError(path + key, "missing");
    return obj.at(key);
}

double number_field(const nlohmann::json& v, const std::string& name) {
    if (!v.is_number()) throw LoadError(name, "expected a number");
    return v.get<double>();
}

std::uint64_t count_field(const nlohmann::json& v, const std::string& name) {
    if (!v.is_number_unsigned()) throw LoadError(name, "expected a non-negative integer");
    return v.get<std::uint64_t>();
}

}  // namespace

QTable qtable_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw LoadError("<root>", "expected a JSON object");

    const auto& scheme_j = require(j, "scheme", "");
    const auto& edges_j = require(scheme_j, "edges", "scheme.");
    if (!edges_j.is_array()) throw LoadError("scheme.edges", "expected an array");
    std::vector<std::vector<double>> edges;
    for (std::size_t d = 0; d < edges_j.size(); ++d) {
        const std::string name = "scheme.edges[" + std::to_string(d) + "]";
        const auto& dim = edges_j[d];
        if (!dim.is_array()) throw LoadError(name, "expected an array");
        std::vector<double> e;
        for (std::size_t i = 0; i < dim.size(); ++i) {
            e.push_back(number_field(dim[i], name + "[" + std::to_string(i) + "]"));
            if (i > 0 && !(e[i] > e[i - 1])) throw LoadError(name, "edges must be strictly increasing");
        }
        if (e.size() < 3) throw LoadError(name, "needs at least 2 bins");
        edges.push_back(std::move(e));
    }
    DiscretizationScheme scheme(std::move(edges));
    if (scheme.cell_count() > QTable::kMaxCells) throw LoadError("scheme", "too many cells");

    const std::size_t action_count = count_field(require(j, "action_count", ""), "action_count");
    if (action_count == 0) throw LoadError("action_count", "must be positive");

    const auto& values_j = require(j, "values", "");
    if (!values_j.is_array()) throw LoadError("values", "expected an array");
    const std::size_t expected = scheme.cell_count() * action_count;
    if (values_j.size() != expected) {
        throw LoadError("values", "expected " + std::to_string(expected) + " entries, found " +
                                      std::to_string(values_j.size()));
    }
    std::vector<double> values(expected);
    for (std::size_t i = 0; i < expected; ++i) {
        values[i] = number_field(values_j[i], "values[" + std::to_string(i) + "]");
    }

    QTableMetadata meta;
    const auto& meta_j = require(j, "metadata", "");
    if (!meta_j.is_object()) throw LoadError("metadata", "expected an object");
    if (meta_j.contains("training_env")) meta.training_env = meta_j["training_env"];
    meta.gamma = number_field(require(meta_j, "gamma", "metadata."), "metadata.gamma");
    if (!(meta.gamma > 0.0 && meta.gamma <= 1.0)) throw LoadError("metadata.gamma", "must be in (0, 1]");
    if (meta_j.contains("learning_rate")) {
        meta.learning_rate = number_field(meta_j["learning_rate"], "metadata.learning_rate");
    }
    if (meta_j.contains("steps")) meta.steps = count_field(meta_j["steps"], "metadata.steps");
    if (meta_j.contains("seed")) meta.seed = count_field(meta_j["seed"], "metadata.seed");

    return QTable(std::move(scheme), action_count, std::move(values), std::move(meta));
}

void save_qtable(const QTable& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << qtable_to_json(table).dump() << '\n';
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

QTable load_qtable(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError(path.string(), "cannot open file");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw LoadError("<root>", std::string("malformed JSON: ") + e.what());
    }
    return qtable_from_json(j);
}

}  // namespace pamcts
