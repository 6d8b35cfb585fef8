#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pamcts/error.hpp"
#include "pamcts/mdp.hpp"
#include "pamcts/qtable.hpp"
#include "pamcts/rng.hpp"

namespace pamcts {

enum class RolloutPolicy { UniformRandom, GreedyQ };

std::string_view to_string(RolloutPolicy p);
RolloutPolicy rollout_policy_from_string(std::string_view s);

struct SearchConfig {
    double exploration_constant = 50.0;
    double alpha = 0.0;
    double decay_rate = 0.0;
    // When false the blend weight is alpha on every iteration and
    // decay_rate is ignored.
    bool alpha_decay = true;
    double gamma = 0.999;
    std::size_t rollout_horizon = 500;
    std::size_t iteration_budget = 100;
    RolloutPolicy rollout_policy = RolloutPolicy::UniformRandom;
    // Record one TraceEntry per iteration in the diagnostics.
    bool record_trace = false;

    void validate() const;
};

// c * sqrt(ln(n_p) / n_j). Visit counts are taken as reals so the score can
// be evaluated at arbitrary positive counts.
inline double exploration_bonus(double parent_visits, double child_visits, double c) {
    if (!(parent_visits >= 1.0)) throw ContractViolation("exploration bonus: parent has no visits");
    if (!(child_visits >= 1.0)) throw ContractViolation("exploration bonus: child has no visits");
    return c * std::sqrt(std::log(parent_visits) / child_visits);
}

inline double uct_score(double mean_return, double parent_visits, double child_visits, double c) {
    return mean_return + exploration_bonus(parent_visits, child_visits, c);
}

inline double effective_alpha(double alpha, double k, std::size_t iteration) {
    return alpha * (1.0 / (1.0 + k * static_cast<double>(iteration)));
}

// alpha * Q + (1 - alpha) * G + bonus. With alpha_eff == 0 the first term is
// +0.0 and the second is exactly G, so the result equals uct_score bitwise.
inline double pa_uct_score(double q_value, double mean_return, double alpha_eff,
                           double parent_visits, double child_visits, double c) {
    const double blended = alpha_eff * q_value + (1.0 - alpha_eff) * mean_return;
    return blended + exploration_bonus(parent_visits, child_visits, c);
}

inline constexpr std::size_t kNoNode = std::numeric_limits<std::size_t>::max();

template <typename State>
struct TreeNode {
    State state;
    std::optional<Action> incoming_action;
    std::size_t parent = kNoNode;
    std::size_t visit_count = 0;
    // Sum of discounted returns backed up from this node's state onward.
    double total_return = 0.0;
    // Reward of the transition parent -> this node.
    double edge_reward = 0.0;
    // Q(parent state, incoming action), cached at expansion.
    double q_value = 0.0;
    // Child node ids in action order; children[i] was reached by Action{i}.
    std::vector<std::size_t> children;
    std::size_t action_count = 0;
    bool terminal = false;
    std::size_t depth = 0;

    bool fully_expanded() const { return children.size() == action_count; }
    std::size_t untried_count() const { return action_count - children.size(); }
    double mean_return() const { return total_return / static_cast<double>(visit_count); }
};

struct ChildReport {
    Action action;
    std::size_t visits = 0;
    bool expanded = false;
    // Mean discounted return of simulations through this child, seen from
    // the root: edge reward + gamma * (child's mean). 0 when unexpanded.
    double mean_return = 0.0;
    double q_value = 0.0;
    double final_score = 0.0;
};

struct TraceEntry {
    std::size_t iteration = 0;
    double alpha_eff = 0.0;
    std::vector<Action> path;  // actions from the root to the leaf
    double leaf_value = 0.0;
};

struct SearchDiagnostics {
    Action best;
    std::size_t iterations = 0;
    std::size_t tree_size = 0;
    double final_alpha = 0.0;
    std::vector<ChildReport> root_children;
    std::vector<TraceEntry> trace;
};

nlohmann::json diagnostics_to_json(const SearchDiagnostics& d);

// One search tree plus the per-decision iteration counter.
template <typename State>
class SearchTree {
public:
    template <MdpModel M>
    SearchTree(const State& root_state, const M& model) {
        TreeNode<State> root;
        root.state = root_state;
        root.terminal = model.is_terminal(root_state);
        root.action_count = root.terminal ? 0 : model.action_count(root_state);
        nodes_.push_back(std::move(root));
    }

    TreeNode<State>& node(std::size_t id) { return nodes_[id]; }
    const TreeNode<State>& node(std::size_t id) const { return nodes_[id]; }
    TreeNode<State>& root() { return nodes_.front(); }
    const TreeNode<State>& root() const { return nodes_.front(); }
    std::size_t size() const { return nodes_.size(); }

    std::size_t iteration() const { return iteration_; }
    void advance() { ++iteration_; }

    std::size_t add_child(std::size_t parent, Action a, Transition<State> tr, double q_value,
                          std::size_t child_actions) {
        TreeNode<State> child;
        child.state = std::move(tr.next_state);
        child.incoming_action = a;
        child.parent = parent;
        child.edge_reward = tr.reward;
        child.q_value = q_value;
        child.terminal = tr.terminal;
        child.action_count = tr.terminal ? 0 : child_actions;
        child.depth = nodes_[parent].depth + 1;
        nodes_.push_back(std::move(child));
        const std::size_t id = nodes_.size() - 1;
        nodes_[parent].children.push_back(id);
        return id;
    }

    // Return of the action leading to child `id`, seen from its parent.
    double action_value(std::size_t id, double gamma) const {
        const auto& c = nodes_[id];
        return c.edge_reward + gamma * c.mean_return();
    }

private:
    std::vector<TreeNode<State>> nodes_;
    std::size_t iteration_ = 0;
};

inline double iteration_alpha(const SearchConfig& cfg, std::size_t iteration) {
    return cfg.alpha_decay ? effective_alpha(cfg.alpha, cfg.decay_rate, iteration) : cfg.alpha;
}

// Selection and expansion for one iteration. Descends from the root by
// argmax of pa_uct_score among children (first maximum, i.e. lowest action
// index, on ties); stops at a terminal node or at the first node with an
// untried action, where the lowest-index untried action is expanded.
// Returns node ids from the root to the leaf.
template <MdpModel M, QFunction<typename M::State> Q>
std::vector<std::size_t> select_and_expand(SearchTree<typename M::State>& tree, const M& model,
                                           const Q& qf, const SearchConfig& cfg, Rng& rng) {
    const double alpha_eff = iteration_alpha(cfg, tree.iteration());
    std::vector<std::size_t> path{0};
    std::size_t current = 0;
    while (true) {
        const auto& n = tree.node(current);
        if (n.terminal) break;
        if (!n.fully_expanded()) {
            const Action a{n.children.size()};
            auto tr = model.sample_transition(n.state, a, rng);
            const double q = qf.q(n.state, a);
            const std::size_t child_actions =
                tr.terminal ? 0 : model.action_count(tr.next_state);
            const std::size_t id = tree.add_child(current, a, std::move(tr), q, child_actions);
            path.push_back(id);
            break;
        }
        std::size_t best = n.children.front();
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t id : n.children) {
            const auto& c = tree.node(id);
            const double score = pa_uct_score(c.q_value, tree.action_value(id, cfg.gamma), alpha_eff,
                                              static_cast<double>(n.visit_count),
                                              static_cast<double>(c.visit_count),
                                              cfg.exploration_constant);
            if (score > best_score) {
                best_score = score;
                best = id;
            }
        }
        path.push_back(best);
        current = best;
    }
    return path;
}

// Discounted return of one simulated trajectory of at most rollout_horizon
// steps from `state`; discounting starts at the first simulated reward.
template <MdpModel M, QFunction<typename M::State> Q>
double rollout(typename M::State state, const M& model, const SearchConfig& cfg, const Q& qf,
               Rng& rng) {
    double total = 0.0;
    double weight = 1.0;
    std::vector<Action> acts;
    for (std::size_t t = 0; t < cfg.rollout_horizon; ++t) {
        if (model.is_terminal(state)) break;
        const std::size_t n = model.action_count(state);
        Action a;
        if (cfg.rollout_policy == RolloutPolicy::UniformRandom) {
            a = Action{rng.uniform_index(n)};
        } else {
            acts.clear();
            for (std::size_t i = 0; i < n; ++i) acts.emplace_back(i);
            a = greedy_action(qf, state, std::span<const Action>(acts));
        }
        auto tr = model.sample_transition(state, a, rng);
        total += weight * tr.reward;
        weight *= cfg.gamma;
        if (tr.terminal) break;
        state = std::move(tr.next_state);
    }
    return total;
}

// Walks leaf -> root. Each node gains one visit and accumulates
// G_node = r_edge + gamma * G_child, where r_edge is the reward on the edge
// from the node to the next node on the path and G_leaf = leaf_value.
// rewards_along_path[k] is the reward on the edge path[k] -> path[k+1].
template <typename State>
void backpropagate(SearchTree<State>& tree, std::span<const std::size_t> path, double leaf_value,
                   std::span<const double> rewards_along_path, double gamma) {
    if (path.empty()) throw ContractViolation("backpropagate: empty path");
    if (rewards_along_path.size() + 1 != path.size()) {
        throw ContractViolation("backpropagate: need one reward per edge");
    }
    double g = leaf_value;
    for (std::size_t k = path.size(); k-- > 0;) {
        auto& n = tree.node(path[k]);
        n.visit_count += 1;
        n.total_return += g;
        if (k > 0) g = rewards_along_path[k - 1] + gamma * g;
    }
}

// Root recommendation: argmax of alpha_eff * Q + (1 - alpha_eff) * value
// without exploration. Ties prefer more visits, then the lower index. When
// alpha_eff is exactly 1 the rollout statistics carry no weight and the
// ranking is greedy over Q (lowest index on ties). Unexpanded actions score
// alpha_eff * Q.
template <typename State>
SearchDiagnostics summarize(const SearchTree<State>& tree, const std::vector<double>& root_q,
                            double alpha_eff, double gamma) {
    const auto& root = tree.root();
    SearchDiagnostics d;
    d.final_alpha = alpha_eff;
    d.tree_size = tree.size();
    d.iterations = tree.iteration();
    const bool pure_policy = alpha_eff == 1.0;
    std::size_t best = 0;
    for (std::size_t i = 0; i < root.action_count; ++i) {
        ChildReport r;
        r.action = Action{i};
        r.q_value = root_q[i];
        if (i < root.children.size()) {
            const auto id = root.children[i];
            r.expanded = true;
            r.visits = tree.node(id).visit_count;
            r.mean_return = r.visits > 0 ? tree.action_value(id, gamma) : 0.0;
        }
        r.final_score = pure_policy ? r.q_value
                        : r.expanded ? alpha_eff * r.q_value + (1.0 - alpha_eff) * r.mean_return
                                     : alpha_eff * r.q_value;
        d.root_children.push_back(r);
        if (i == 0) continue;
        const auto& b = d.root_children[best];
        if (r.final_score > b.final_score ||
            (!pure_policy && r.final_score == b.final_score && r.visits > b.visits)) {
            best = i;
        }
    }
    d.best = Action{best};
    return d;
}

// One decision: runs exactly cfg.iteration_budget iterations of
// select/expand, rollout and backpropagation on a fresh tree, recomputing
// the blend weight for each iteration index (0-based).
template <MdpModel M, QFunction<typename M::State> Q>
SearchDiagnostics plan(const typename M::State& root_state, const M& model, const Q& qf,
                       const SearchConfig& cfg, Rng& rng) {
    cfg.validate();
    if (model.is_terminal(root_state)) throw ContractViolation("plan: root state is terminal");

    SearchTree<typename M::State> tree(root_state, model);
    std::vector<double> rewards;
    std::vector<TraceEntry> trace;
    for (std::size_t i = 0; i < cfg.iteration_budget; ++i) {
        const auto path = select_and_expand(tree, model, qf, cfg, rng);
        const auto& leaf = tree.node(path.back());
        const double leaf_value = leaf.terminal ? 0.0 : rollout(leaf.state, model, cfg, qf, rng);

        rewards.clear();
        for (std::size_t k = 1; k < path.size(); ++k) rewards.push_back(tree.node(path[k]).edge_reward);
        backpropagate(tree, std::span<const std::size_t>(path), leaf_value,
                      std::span<const double>(rewards), cfg.gamma);

        if (cfg.record_trace) {
            TraceEntry e;
            e.iteration = i;
            e.alpha_eff = iteration_alpha(cfg, i);
            for (std::size_t k = 1; k < path.size(); ++k) {
                e.path.push_back(*tree.node(path[k]).incoming_action);
            }
            e.leaf_value = leaf_value;
            trace.push_back(std::move(e));
        }
        tree.advance();
    }

    const auto& root = tree.root();
    std::vector<double> root_q(root.action_count);
    for (std::size_t a = 0; a < root.action_count; ++a) root_q[a] = qf.q(root.state, Action{a});
    auto d = summarize(tree, root_q, iteration_alpha(cfg, cfg.iteration_budget - 1), cfg.gamma);
    d.trace = std::move(trace);
    return d;
}

}  // namespace pamcts
