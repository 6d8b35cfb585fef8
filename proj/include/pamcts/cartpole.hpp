#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <variant>

#include <json.hpp>

#include "pamcts/mdp.hpp"
#include "pamcts/rng.hpp"

namespace pamcts::cartpole {

struct State {
    double x = 0.0;          // cart position, m
    double x_dot = 0.0;      // cart velocity, m/s
    double theta = 0.0;      // pole angle from vertical, rad
    double theta_dot = 0.0;  // pole angular velocity, rad/s
    std::size_t step_count = 0;

    friend bool operator==(const State&, const State&) = default;
};

// Features seen by a tabular Q-function: the four physical components.
inline std::array<double, 4> state_features(const State& s) {
    return {s.x, s.x_dot, s.theta, s.theta_dot};
}

enum class RewardMode { UnitPerStep, CenterProximity };

inline constexpr Action kPushLeft{0};
inline constexpr Action kPushRight{1};

struct Params {
    double gravity = 9.8;
    double cart_mass = 1.0;
    double pole_mass = 0.1;
    double pole_half_length = 0.5;
    double force_mag = 10.0;
    double tau = 0.02;
    double x_threshold = 2.4;
    double theta_threshold = 12.0 * 2.0 * 3.141592653589793 / 360.0;
    std::size_t max_episode_steps = 2500;
    RewardMode reward_mode = RewardMode::UnitPerStep;

    friend bool operator==(const Params&, const Params&) = default;
};

// Throws ValidationError on non-positive masses, step, or thresholds.
void validate(const Params& p);

struct Gravity { double value; };
struct CartMass { double value; };
struct Reward { RewardMode mode; };
using Shift = std::variant<Gravity, CartMass, Reward>;

// Copy of base with exactly one shiftable field replaced.
Params shifted_params(const Params& base, const Shift& shift);

// 1 - |x| / x_threshold.
double centered_reward(double x, double x_threshold);

// Each physical component uniform in [-0.05, 0.05]; step_count = 0.
State initial_state(Rng& rng);

bool is_terminal(const Params& p, const State& s);

// One explicit-Euler step of the pole-on-cart dynamics. Pure; throws
// ContractViolation when s is already terminal and InvalidAction for
// anything other than push-left/push-right.
Transition<State> step(const Params& p, const State& s, Action a);

// MdpModel adapter. Dynamics are deterministic; the rng is unused by steps.
class Model {
public:
    using State = cartpole::State;

    Model() = default;
    explicit Model(Params params, double gamma = 0.999);

    const Params& params() const { return params_; }

    std::size_t action_count(const State&) const { return 2; }
    Transition<State> sample_transition(const State& s, Action a, Rng&) const {
        return step(params_, s, a);
    }
    bool is_terminal(const State& s) const { return cartpole::is_terminal(params_, s); }
    double discount() const { return gamma_; }
    State initial_state(Rng& rng) const { return cartpole::initial_state(rng); }

private:
    Params params_{};
    double gamma_ = 0.999;
};

std::string_view to_string(RewardMode m);
RewardMode reward_mode_from_string(std::string_view s);

// JSON fragment with the Params field names. Missing fields keep defaults.
void to_json(nlohmann::json& j, const Params& p);
void from_json(const nlohmann::json& j, Params& p);

}  // namespace pamcts::cartpole
