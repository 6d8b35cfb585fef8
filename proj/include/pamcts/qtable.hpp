#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include <json.hpp>

#include "pamcts/error.hpp"
#include "pamcts/mdp.hpp"
#include "pamcts/rng.hpp"

namespace pamcts {

// Action-value provider Q(s, a).
template <typename Q, typename State>
concept QFunction = requires(const Q& q, const State& s, Action a) {
    { q.q(s, a) } -> std::convertible_to<double>;
};

// Q(s, a) = 0 everywhere; used where no learned values exist.
struct ZeroQ {
    template <typename State>
    double q(const State&, Action) const { return 0.0; }
};

// Argmax of q over actions, lowest index on ties.
template <typename State, QFunction<State> Q>
Action greedy_action(const Q& qf, const State& s, std::span<const Action> actions) {
    if (actions.empty()) throw ContractViolation("greedy_action: no actions");
    Action best = actions.front();
    double best_q = qf.q(s, best);
    for (std::size_t i = 1; i < actions.size(); ++i) {
        const double v = qf.q(s, actions[i]);
        if (v > best_q) {
            best_q = v;
            best = actions[i];
        }
    }
    return best;
}

// Samples a with probability proportional to exp(q(s, a) / temperature).
template <typename State, QFunction<State> Q>
Action boltzmann_action(const Q& qf, const State& s, std::span<const Action> actions,
                        double temperature, Rng& rng) {
    if (actions.empty()) throw ContractViolation("boltzmann_action: no actions");
    if (!(temperature > 0.0)) throw ContractViolation("boltzmann_action: temperature must be > 0");
    std::vector<double> weights(actions.size());
    double max_q = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < actions.size(); ++i) {
        weights[i] = qf.q(s, actions[i]);
        max_q = std::max(max_q, weights[i]);
    }
    double total = 0.0;
    for (double& w : weights) {
        w = std::exp((w - max_q) / temperature);
        total += w;
    }
    const double u = rng.uniform01() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < actions.size(); ++i) {
        acc += weights[i];
        if (u < acc) return actions[i];
    }
    return actions.back();
}

// Rectangular grid over a feature vector. Each dimension is described by its
// full list of bin edges (outer bounds included); features outside the outer
// bounds are clamped into the first or last bin. A scheme with zero
// dimensions has exactly one cell.
class DiscretizationScheme {
public:
    DiscretizationScheme() = default;
    explicit DiscretizationScheme(std::vector<std::vector<double>> edges);

    static DiscretizationScheme uniform(std::span<const double> lo, std::span<const double> hi,
                                        std::span<const std::size_t> bins);
    // 12 uniform bins on x in [-2.4, 2.4], x_dot in [-2, 2], theta in
    // [-0.21, 0.21], theta_dot in [-2, 2].
    static DiscretizationScheme cartpole_default();

    std::size_t dimensions() const { return edges_.size(); }
    std::size_t bins(std::size_t dim) const { return edges_[dim].size() - 1; }
    std::size_t cell_count() const { return cell_count_; }
    const std::vector<std::vector<double>>& edges() const { return edges_; }

    std::size_t bin_of(std::size_t dim, double value) const;
    std::size_t cell_of(std::span<const double> features) const;

    friend bool operator==(const DiscretizationScheme&, const DiscretizationScheme&) = default;

private:
    std::vector<std::vector<double>> edges_;
    std::size_t cell_count_ = 1;
};

struct QTableMetadata {
    nlohmann::json training_env = nlohmann::json::object();
    double gamma = 0.999;
    double learning_rate = 0.001;
    std::size_t steps = 0;
    std::uint64_t seed = 0;

    friend bool operator==(const QTableMetadata&, const QTableMetadata&) = default;
};

// Dense table of values indexed by (cell, action), row-major.
class QTable {
public:
    static constexpr std::size_t kMaxCells = 10'000'000;

    QTable() = default;
    QTable(DiscretizationScheme scheme, std::size_t action_count, QTableMetadata meta = {});
    QTable(DiscretizationScheme scheme, std::size_t action_count, std::vector<double> values,
           QTableMetadata meta);

    const DiscretizationScheme& scheme() const { return scheme_; }
    std::size_t action_count() const { return action_count_; }
    const QTableMetadata& metadata() const { return meta_; }
    QTableMetadata& metadata() { return meta_; }
    std::span<const double> values() const { return values_; }

    double& at(std::size_t cell, Action a) { return values_[cell * action_count_ + a.index]; }
    double at(std::size_t cell, Action a) const { return values_[cell * action_count_ + a.index]; }

    // State types opt in by providing an ADL-visible state_features(s).
    template <typename State>
    double q(const State& s, Action a) const {
        const auto f = state_features(s);
        return at(scheme_.cell_of(std::span<const double>(f)), a);
    }

    friend bool operator==(const QTable&, const QTable&) = default;

private:
    DiscretizationScheme scheme_;
    std::size_t action_count_ = 0;
    std::vector<double> values_;
    QTableMetadata meta_;
};

struct TrainConfig {
    double learning_rate = 0.001;
    std::size_t steps = 300'000;
    double gamma = 0.999;
    // Boltzmann temperature decays exponentially from initial to final
    // over the step budget.
    double initial_temperature = 5.0;
    double final_temperature = 0.1;
    std::uint64_t seed = 0;

    // Settings that reliably learn to balance the default CartPole with the
    // default discretization: a larger step size and budget than the
    // defaults above, and a hotter exploration schedule.
    static TrainConfig tabular_cartpole();

    double temperature_at(std::size_t step) const;
    void validate() const;
};

// Called every `interval` steps with the merged table so far.
struct TrainObserver {
    std::size_t interval = 0;
    std::function<void(std::size_t step, const QTable&)> callback;
};

namespace detail {
QTable merge_tables(const QTable& a, const QTable& b);
}

// Tabular double Q-learning with a Boltzmann behaviour policy over the
// averaged tables. Each transition updates one of the two tables (chosen by
// a fair coin) toward r + gamma * Q_other(s', argmax Q_this(s', .)).
// Failure transitions bootstrap with zero; step-cap truncations bootstrap
// normally. Returns the average of the two tables.
template <typename M>
    requires EpisodicModel<M>
QTable train_double_q(const M& model, const DiscretizationScheme& scheme, const TrainConfig& cfg,
                      Rng& rng, const TrainObserver* observer = nullptr) {
    cfg.validate();
    if (scheme.cell_count() > QTable::kMaxCells) {
        throw ResourceLimitError("discretization has " + std::to_string(scheme.cell_count()) +
                                 " cells; limit is " + std::to_string(QTable::kMaxCells));
    }
    auto state = model.initial_state(rng);
    const std::size_t n_actions = model.action_count(state);
    QTableMetadata meta;
    meta.gamma = cfg.gamma;
    meta.learning_rate = cfg.learning_rate;
    meta.steps = cfg.steps;
    meta.seed = cfg.seed;
    QTable table_a(scheme, n_actions, meta);
    QTable table_b(scheme, n_actions, meta);
    const auto acts = actions(model, state);

    auto cell_of = [&scheme](const typename M::State& s) {
        const auto f = state_features(s);
        return scheme.cell_of(std::span<const double>(f));
    };
    struct Averaged {
        const QTable& a;
        const QTable& b;
        std::size_t cell;
        double q(const typename M::State&, Action act) const {
            return 0.5 * (a.at(cell, act) + b.at(cell, act));
        }
    };

    for (std::size_t t = 0; t < cfg.steps; ++t) {
        const std::size_t cell = cell_of(state);
        const Action act = boltzmann_action(Averaged{table_a, table_b, cell}, state,
                                            std::span<const Action>(acts),
                                            cfg.temperature_at(t), rng);
        auto tr = model.sample_transition(state, act, rng);

        const bool update_a = rng.uniform01() < 0.5;
        QTable& learner = update_a ? table_a : table_b;
        const QTable& evaluator = update_a ? table_b : table_a;
        double target = tr.reward;
        if (!tr.terminal || tr.truncated) {
            const std::size_t next_cell = cell_of(tr.next_state);
            Action best{0};
            for (std::size_t i = 1; i < n_actions; ++i) {
                if (learner.at(next_cell, Action{i}) > learner.at(next_cell, best)) best = Action{i};
            }
            target += cfg.gamma * evaluator.at(next_cell, best);
        }
        double& v = learner.at(cell, act);
        v += cfg.learning_rate * (target - v);

        state = tr.terminal ? model.initial_state(rng) : std::move(tr.next_state);

        if (observer && observer->interval > 0 && (t + 1) % observer->interval == 0) {
            observer->callback(t + 1, detail::merge_tables(table_a, table_b));
        }
    }
    return detail::merge_tables(table_a, table_b);
}

nlohmann::json qtable_to_json(const QTable& table);
QTable qtable_from_json(const nlohmann::json& j);

void save_qtable(const QTable& table, const std::filesystem::path& path);
QTable load_qtable(const std::filesystem::path& path);

}  // namespace pamcts
