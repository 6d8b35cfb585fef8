#include "pamcts/search.hpp"

#include <string>

namespace pamcts {

std::string_view to_string(RolloutPolicy p) {
    return p == RolloutPolicy::UniformRandom ? "uniform_random" : "greedy_q";
}

RolloutPolicy rollout_policy_from_string(std::string_view s) {
    if (s == "uniform_random") return RolloutPolicy::UniformRandom;
    if (s == "greedy_q") return RolloutPolicy::GreedyQ;
    throw ValidationError("unknown rollout policy '" + std::string(s) + "'");
}

void SearchConfig::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must be in [0, 1]");
    if (!(decay_rate >= 0.0)) throw ValidationError("decay rate must be >= 0");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ValidationError("gamma must be in (0, 1]");
    if (!(exploration_constant >= 0.0)) throw ValidationError("exploration constant must be >= 0");
    if (iteration_budget < 1) throw ValidationError("iteration budget must be >= 1");
}

nlohmann::json diagnostics_to_json(const SearchDiagnostics& d) {
    nlohmann::json children = nlohmann::json::array();
    for (const auto& c : d.root_children) {
        children.push_back({{"action", c.action.index},
                            {"n_j", c.visits},
                            {"expanded", c.expanded},
                            {"mean_return", c.mean_return},
                            {"q_value", c.q_value},
                            {"final_score", c.final_score}});
    }
    return nlohmann::json{{"best_action", d.best.index},
                          {"iterations", d.iterations},
                          {"tree_size", d.tree_size},
                          {"final_alpha", d.final_alpha},
                          {"root_children", std::move(children)}};
}

}  // namespace pamcts
