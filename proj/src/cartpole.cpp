#include "pamcts/cartpole.hpp"

#include <cmath>
#include <string>

namespace pamcts::cartpole {

void validate(const Params& p) {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ValidationError(std::string(name) + " must be positive and finite");
        }
    };
    positive(p.gravity, "gravity");
    positive(p.cart_mass, "cart_mass");
    positive(p.pole_mass, "pole_mass");
    positive(p.pole_half_length, "pole_half_length");
    positive(p.force_mag, "force_mag");
    positive(p.tau, "tau");
    positive(p.x_threshold, "x_threshold");
    positive(p.theta_threshold, "theta_threshold");
    if (p.max_episode_steps == 0) throw ValidationError("max_episode_steps must be >= 1");
}

Params shifted_params(const Params& base, const Shift& shift) {
    Params out = base;
    std::visit(
        [&out](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Gravity>) {
                if (!(s.value > 0.0)) throw ValidationError("gravity shift must be positive");
                out.gravity = s.value;
            } else if constexpr (std::is_same_v<T, CartMass>) {
                if (!(s.value > 0.0)) throw ValidationError("cart mass shift must be positive");
                out.cart_mass = s.value;
            } else {
                out.reward_mode = s.mode;
            }
        },
        shift);
    return out;
}

double centered_reward(double x, double x_threshold) { return 1.0 - std::abs(x) / x_threshold; }

State initial_state(Rng& rng) {
    State s;
    s.x = rng.uniform(-0.05, 0.05);
    s.x_dot = rng.uniform(-0.05, 0.05);
    s.theta = rng.uniform(-0.05, 0.05);
    s.theta_dot = rng.uniform(-0.05, 0.05);
    return s;
}

namespace {

bool out_of_bounds(const Params& p, const State& s) {
    return s.x < -p.x_threshold || s.x > p.x_threshold || s.theta < -p.theta_threshold ||
           s.theta > p.theta_threshold;
}

}  // namespace

bool is_terminal(const Params& p, const State& s) {
    return out_of_bounds(p, s) || s.step_count >= p.max_episode_steps;
}

Transition<State> step(const Params& p, const State& s, Action a) {
    if (is_terminal(p, s)) throw ContractViolation("cartpole step from a terminal state");
    if (a.index > 1) throw InvalidAction("cartpole has two actions");

    const double force = a == kPushRight ? p.force_mag : -p.force_mag;
    const double total_mass = p.pole_mass + p.cart_mass;
    const double polemass_length = p.pole_mass * p.pole_half_length;
    const double costheta = std::cos(s.theta);
    const double sintheta = std::sin(s.theta);

    const double temp =
        (force + polemass_length * s.theta_dot * s.theta_dot * sintheta) / total_mass;
    const double thetaacc =
        (p.gravity * sintheta - costheta * temp) /
        (p.pole_half_length * (4.0 / 3.0 - p.pole_mass * costheta * costheta / total_mass));
    const double xacc = temp - polemass_length * thetaacc * costheta / total_mass;

    Transition<State> tr;
    State& n = tr.next_state;
    n.x = s.x + p.tau * s.x_dot;
    n.x_dot = s.x_dot + p.tau * xacc;
    n.theta = s.theta + p.tau * s.theta_dot;
    n.theta_dot = s.theta_dot + p.tau * thetaacc;
    n.step_count = s.step_count + 1;

    // Reward is granted on the terminating transition too; the centered
    // variant is measured at the pre-step cart position.
    tr.reward = p.reward_mode == RewardMode::UnitPerStep ? 1.0 : centered_reward(s.x, p.x_threshold);

    const bool failed = out_of_bounds(p, n);
    tr.terminal = failed || n.step_count >= p.max_episode_steps;
    tr.truncated = tr.terminal && !failed;
    return tr;
}

Model::Model(Params params, double gamma) : params_(params), gamma_(gamma) {
    validate(params_);
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ValidationError("discount must be in (0, 1]");
}

std::string_view to_string(RewardMode m) {
    return m == RewardMode::UnitPerStep ? "UnitPerStep" : "CenterProximity";
}

RewardMode reward_mode_from_string(std::string_view s) {
    if (s == "UnitPerStep") return RewardMode::UnitPerStep;
    if (s == "CenterProximity") return RewardMode::CenterProximity;
    throw ValidationError("unknown reward_mode '" + std::string(s) + "'");
}

void to_json(nlohmann::json& j, const Params& p) {
    j = nlohmann::json{{"gravity", p.gravity},
                       {"cart_mass", p.cart_mass},
                       {"pole_mass", p.pole_mass},
                       {"pole_half_length", p.pole_half_length},
                       {"force_mag", p.force_mag},
                       {"tau", p.tau},
                       {"x_threshold", p.x_threshold},
                       {"theta_threshold", p.theta_threshold},
                       {"max_episode_steps", p.max_episode_steps},
                       {"reward_mode", std::string(to_string(p.reward_mode))}};
}

void from_json(const nlohmann::json& j, Params& p) {
    if (!j.is_object()) throw ValidationError("CartPole params must be a JSON object");
    static constexpr std::string_view kKnown[] = {
        "gravity", "cart_mass", "pole_mass", "pole_half_length", "force_mag",
        "tau", "x_threshold", "theta_threshold", "max_episode_steps", "reward_mode"};
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (auto k : kKnown) known = known || key == k;
        if (!known) throw ValidationError("unknown CartPole parameter '" + key + "'");
    }
    auto number = [&j](const char* key, double& field) {
        if (!j.contains(key)) return;
        if (!j[key].is_number()) throw ValidationError(std::string(key) + " must be a number");
        field = j[key].get<double>();
    };
    number("gravity", p.gravity);
    number("cart_mass", p.cart_mass);
    number("pole_mass", p.pole_mass);
    number("pole_half_length", p.pole_half_length);
    number("force_mag", p.force_mag);
    number("tau", p.tau);
    number("x_threshold", p.x_threshold);
    number("theta_threshold", p.theta_threshold);
    if (j.contains("max_episode_steps")) {
        const auto& v = j["max_episode_steps"];
        if (!v.is_number_unsigned()) {
            throw ValidationError("max_episode_steps must be a non-negative integer");
        }
        p.max_episode_steps = v.get<std::size_t>();
    }
    if (j.contains("reward_mode")) {
        if (!j["reward_mode"].is_string()) throw ValidationError("reward_mode must be a string");
        p.reward_mode = reward_mode_from_string(j["reward_mode"].get<std::string>());
    }
    validate(p);
}

}  // namespace pamcts::cartpole
