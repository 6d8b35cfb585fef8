#pragma once

#include <compare>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pamcts/error.hpp"
#include "pamcts/rng.hpp"

namespace pamcts {

// Index into the ordered action list of a state.
struct Action {
    std::uint32_t index = 0;

    constexpr Action() = default;
    constexpr explicit Action(std::size_t i) : index(static_cast<std::uint32_t>(i)) {}

    friend constexpr auto operator<=>(Action, Action) = default;
};

template <typename State>
struct Transition {
    State next_state;
    double reward = 0.0;
    bool terminal = false;
    // Terminal only because a step cap was hit; the state itself is not a failure.
    bool truncated = false;
};

// Actions of a state are always {0, ..., action_count(s) - 1}, in that order.
template <typename M>
concept MdpModel = std::copy_constructible<typename M::State> &&
    requires(const M& m, const typename M::State& s, Action a, Rng& rng) {
        { m.action_count(s) } -> std::convertible_to<std::size_t>;
        { m.sample_transition(s, a, rng) } -> std::same_as<Transition<typename M::State>>;
        { m.is_terminal(s) } -> std::convertible_to<bool>;
        { m.discount() } -> std::convertible_to<double>;
    };

// Models that can start episodes on their own.
template <typename M>
concept EpisodicModel = MdpModel<M> && requires(const M& m, Rng& rng) {
    { m.initial_state(rng) } -> std::same_as<typename M::State>;
};

template <MdpModel M>
std::vector<Action> actions(const M& model, const typename M::State& s) {
    const std::size_t n = model.action_count(s);
    std::vector<Action> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.emplace_back(i);
    return out;
}

// Sum of gamma^t * rewards[t], accumulated left to right.
double discounted_return(std::span<const double> rewards, double gamma);

struct EpisodeResult {
    double total_return = 0.0;  // undiscounted
    std::size_t steps = 0;
    std::vector<double> rewards;
};

template <MdpModel M, typename Source>
    requires std::invocable<Source&, const typename M::State&>
EpisodeResult simulate_episode(const M& model, Source&& action_source,
                               typename M::State initial, std::size_t max_steps, Rng& rng) {
    if (max_steps == 0) throw ContractViolation("simulate_episode: max_steps must be >= 1");
    EpisodeResult result;
    auto state = std::move(initial);
    while (result.steps < max_steps && !model.is_terminal(state)) {
        const Action a = action_source(std::as_const(state));
        if (a.index >= model.action_count(state)) {
            throw InvalidAction("action " + std::to_string(a.index) + " is not legal in this state");
        }
        auto tr = model.sample_transition(state, a, rng);
        result.rewards.push_back(tr.reward);
        result.total_return += tr.reward;
        ++result.steps;
        state = std::move(tr.next_state);
        if (tr.terminal) break;
    }
    return result;
}

}  // namespace pamcts
