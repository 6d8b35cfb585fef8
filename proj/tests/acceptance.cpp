// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include "oracles/reference_cartpole.hpp"
#include "oracles/reference_uct.hpp"
#include "oracles/value_iteration.hpp"
#include "pamcts/cartpole.hpp"
#include "pamcts/experiment.hpp"
#include "pamcts/qtable.hpp"
#include "pamcts/search.hpp"
#include "test_models.hpp"

using namespace pamcts;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
    std::printf("%s criterion %d (%s): %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

void report_extra(const std::string& name, bool ok, const std::string& detail) {
    std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::size_t jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

cartpole::State random_state(Rng& rng) {
    cartpole::State s;
    s.x = rng.uniform(-2.3, 2.3);
    s.x_dot = rng.uniform(-3.0, 3.0);
    s.theta = rng.uniform(-0.2, 0.2);
    s.theta_dot = rng.uniform(-3.0, 3.0);
    return s;
}

double greedy_mean(const QTable& table, const cartpole::Params& params, std::size_t episodes,
                   std::uint64_t seed) {
    const cartpole::Model model(params);
    Rng rng(seed);
    double total = 0.0;
    for (std::size_t e = 0; e < episodes; ++e) {
        const auto s0 = model.initial_state(rng);
        const auto res = simulate_episode(
            model,
            [&](const cartpole::State& s) { return greedy_action(table, s, actions(model, s)); }, s0,
            params.max_episode_steps, rng);
        total += res.total_return;
    }
    return total / static_cast<double>(episodes);
}

const CellResult& find_cell(const std::vector<CellResult>& cells, const std::string& env, double alpha,
                            std::size_t budget) {
    for (const auto& c : cells) {
        if (c.env_label == env && c.alpha == alpha && c.budget == budget) return c;
    }
    throw std::runtime_error("missing cell " + env);
}

void alpha0_matches_reference() {
    const auto t0 = std::chrono::steady_clock::now();
    const cartpole::Model model;
    bool ok = true;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SearchConfig cfg;
        Rng r1(seed), r2(seed);
        const auto s = model.initial_state(r1);
        model.initial_state(r2);
        const auto d = plan(s, model, ZeroQ{}, cfg, r1);
        oracle::ReferenceUct ref(model, cfg.exploration_constant, cfg.gamma, cfg.rollout_horizon);
        const auto r = ref.search(s, cfg.iteration_budget, r2);
        ok = ok && d.best.index == r.action && r.root_visits.size() == d.root_children.size();
        for (std::size_t i = 0; ok && i < r.root_visits.size(); ++i) {
            ok = static_cast<long>(d.root_children[i].visits) == r.root_visits[i];
        }
    }
    const double secs = seconds_since(t0);
    report(1, "alpha 0 equals reference UCT", ok && secs < 60.0,
           "20 seeds, " + fmt(secs) + " s");
}

void alpha1_is_greedy(const QTable& table) {
    const cartpole::Model model;
    Rng rng(101);
    int agree = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto s = random_state(rng);
        SearchConfig cfg;
        cfg.alpha = 1.0;
        cfg.iteration_budget = 20;
        Rng search_rng(static_cast<std::uint64_t>(i));
        agree += plan(s, model, table, cfg, search_rng).best == greedy_action(table, s, actions(model, s));
    }
    report(2, "alpha 1 equals greedy policy", agree == 1000, std::to_string(agree) + "/1000 states");
}

void zero_decay_is_trace_identical(const QTable& table) {
    const cartpole::Model model;
    bool ok = true;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SearchConfig with_decay;
        with_decay.alpha = 0.5;
        with_decay.decay_rate = 0.0;
        with_decay.record_trace = true;
        SearchConfig without = with_decay;
        without.alpha_decay = false;
        Rng r1(seed), r2(seed);
        const auto s = model.initial_state(r1);
        model.initial_state(r2);
        const auto d1 = plan(s, model, table, with_decay, r1);
        const auto d2 = plan(s, model, table, without, r2);
        ok = ok && diagnostics_to_json(d1) == diagnostics_to_json(d2) && d1.trace.size() == d2.trace.size();
        for (std::size_t i = 0; ok && i < d1.trace.size(); ++i) {
            ok = d1.trace[i].path == d2.trace[i].path && d1.trace[i].leaf_value == d2.trace[i].leaf_value &&
                 d1.trace[i].alpha_eff == d2.trace[i].alpha_eff;
        }
    }
    report(3, "zero decay rate is trace-identical to no decay", ok, "20 seeds");
}

void small_mdp_optimal() {
    const auto t0 = std::chrono::steady_clock::now();
    testmodels::Tabular m{testmodels::three_state_trap()};
    const auto optimal = oracle::optimal_action(m.mdp, 0);
    SearchConfig cfg;
    cfg.exploration_constant = 5.0;
    cfg.gamma = m.mdp.gamma;
    cfg.rollout_horizon = 50;
    cfg.iteration_budget = 10'000;
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        hits += plan(testmodels::Tabular::State{0}, m, ZeroQ{}, cfg, rng).best == Action{optimal};
    }
    const double secs = seconds_since(t0);
    report(4, "three-state MDP optimal action", hits >= 95 && secs < 120.0,
           std::to_string(hits) + "/100 runs chose action " + std::to_string(optimal) + ", " + fmt(secs) +
               " s");
}

void policy_quality(const QTable& table) {
    EnvVariant env{"default", {}};
    env.params.max_episode_steps = 500;
    const auto cell = run_cell(env, 1.0, 0, 20, SearchConfig{}, 500, &table);
    report(5, "trained policy on the default env", cell.mean >= 450.0, "mean " + fmt(cell.mean) + " >= 450");
}

ExperimentGrid base_grid(std::vector<EnvVariant> envs, std::vector<double> alphas,
                         std::vector<std::size_t> budgets, std::uint64_t seed) {
    ExperimentGrid g;
    g.env_variants = std::move(envs);
    g.alphas = std::move(alphas);
    g.iteration_budgets = std::move(budgets);
    g.samples_per_cell = 20;
    g.episode_step_cap = 500;
    g.base_seed = seed;
    return g;
}

void acceleration_and_staleness(const QTable& table) {
    const EnvVariant def{"default", {}};
    const EnvVariant g50{"g50", cartpole::shifted_params({}, cartpole::Gravity{50.0})};
    const auto at100 = run_grid(base_grid({def, g50}, {0.0, 0.75}, {100}, 600), &table, jobs());
    bool ok = true;
    std::string detail;
    for (const char* env : {"default", "g50"}) {
        const double pure = find_cell(at100, env, 0.0, 100).mean;
        const double blended = find_cell(at100, env, 0.75, 100).mean;
        ok = ok && blended >= 1.2 * pure;
        detail += std::string(env) + ": alpha 0.75 " + fmt(blended) + " vs alpha 0 " + fmt(pure) + " (need >= " +
                  fmt(1.2 * pure) + "); ";
    }
    report(6, "policy blending accelerates search", ok, detail);

    const auto stale = run_grid(base_grid({g50}, {0.75, 1.0}, {300}, 700), &table, jobs());
    const double policy = find_cell(stale, "g50", 1.0, 300).mean;
    const double blended = find_cell(stale, "g50", 0.75, 300).mean;
    report(7, "stale policy degrades under gravity 50", policy <= 0.5 * blended,
           "alpha 1 " + fmt(policy) + " vs alpha 0.75 at 300 " + fmt(blended) + " (need <= " +
               fmt(0.5 * blended) + ")");
}

void centered_reward(const QTable& table) {
    const EnvVariant center{"center", cartpole::shifted_params({}, cartpole::Reward{cartpole::RewardMode::CenterProximity})};
    const auto cells = run_grid(base_grid({center}, {0.25, 0.5, 0.75, 1.0}, {300}, 800), &table, jobs());
    bool bounded = true;
    for (const auto& c : cells) {
        for (std::size_t i = 0; i < c.returns.size(); ++i) {
            bounded = bounded && c.returns[i] <= static_cast<double>(c.steps[i]);
        }
    }
    const double policy = find_cell(cells, "center", 1.0, 300).mean;
    bool beats = true;
    std::string detail = "alpha 1 " + fmt(policy);
    for (double a : {0.25, 0.5, 0.75}) {
        const double m = find_cell(cells, "center", a, 300).mean;
        beats = beats && m > policy;
        detail += ", alpha " + fmt(a) + " " + fmt(m);
    }
    detail += bounded ? "; returns <= steps" : "; a return exceeded its step count";
    report(8, "centered reward", bounded && beats, detail);
}

void physics_matches_reference() {
    Rng rng(909);
    oracle::GymCartPole ref;
    const cartpole::Params p;
    double worst = 0.0;
    bool term_ok = true;
    for (int i = 0; i < 1000; ++i) {
        const auto s = random_state(rng);
        const Action a{rng.uniform_index(2)};
        bool done = false;
        const auto expected = ref.step(cartpole::state_features(s), static_cast<int>(a.index), done);
        const auto tr = cartpole::step(p, s, a);
        const auto got = cartpole::state_features(tr.next_state);
        for (int d = 0; d < 4; ++d) worst = std::max(worst, std::abs(got[d] - expected[d]));
        term_ok = term_ok && tr.terminal == done;
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "max abs error %.3g over 1000 pairs", worst);
    report(9, "dynamics match reference CartPole", worst <= 1e-12 && term_ok, buf);
}

struct HashQ {
    double q(const cartpole::State& s, Action a) const {
        return 50.0 * std::sin(37.0 * s.x + 11.0 * s.x_dot + 101.0 * s.theta + 7.0 * s.theta_dot + 3.0 * a.index);
    }
};

struct VectorQ {
    std::vector<double> values;
    double q(int, Action a) const { return values[a.index]; }
};

void invariants() {
    int cases = 0;
    bool visit_ok = true;
    const cartpole::Model model;
    for (std::uint64_t seed = 0; seed < 100; ++seed, ++cases) {
        Rng rng(seed);
        SearchConfig cfg;
        cfg.alpha = rng.uniform01();
        cfg.decay_rate = rng.uniform(0.0, 0.1);
        cfg.iteration_budget = 20 + rng.uniform_index(100);
        cfg.rollout_horizon = 100;
        SearchTree<cartpole::State> tree(model.initial_state(rng), model);
        std::vector<double> r;
        for (std::size_t i = 0; i < cfg.iteration_budget; ++i) {
            const auto path = select_and_expand(tree, model, HashQ{}, cfg, rng);
            const auto& leaf = tree.node(path.back());
            const double v = leaf.terminal ? 0.0 : rollout(leaf.state, model, cfg, HashQ{}, rng);
            r.clear();
            for (std::size_t k = 1; k < path.size(); ++k) r.push_back(tree.node(path[k]).edge_reward);
            backpropagate(tree, std::span<const std::size_t>(path), v, std::span<const double>(r), cfg.gamma);
            tree.advance();
        }
        visit_ok = visit_ok && tree.root().visit_count == cfg.iteration_budget;
        for (std::size_t id = 0; id < tree.size(); ++id) {
            const auto& n = tree.node(id);
            if (n.terminal) continue;
            std::size_t sum = 0;
            for (auto c : n.children) sum += tree.node(c).visit_count;
            visit_ok = visit_ok && n.visit_count == sum + (id == 0 ? 0 : 1);
        }
    }
    report_extra("invariant visit-count identity", visit_ok, std::to_string(cases) + " trees");

    Rng rng(5);
    bool bitwise = true;
    for (int i = 0; i < 1000; ++i) {
        const double mean = rng.uniform(-1000.0, 1000.0);
        const double np = 1.0 + static_cast<double>(rng.uniform_index(10'000));
        const double nj = 1.0 + static_cast<double>(rng.uniform_index(static_cast<std::size_t>(np)));
        const double c = rng.uniform(0.0, 100.0);
        const double u = uct_score(mean, np, nj, c);
        const double p = pa_uct_score(rng.uniform(-1e6, 1e6), mean, 0.0, np, nj, c);
        bitwise = bitwise && std::memcmp(&u, &p, sizeof u) == 0;
    }
    report_extra("invariant blended score equals UCT at zero weight", bitwise, "1000 cases, bitwise");

    bool shift_ok = true;
    for (int i = 0; i < 1000; ++i) {
        const std::size_t n = 1 + rng.uniform_index(6);
        VectorQ q;
        for (std::size_t k = 0; k < n; ++k) q.values.push_back(std::round(rng.uniform(-5, 5)));
        std::vector<Action> acts;
        for (std::size_t k = 0; k < n; ++k) acts.emplace_back(k);
        VectorQ shifted = q;
        const double shift = std::round(rng.uniform(-100, 100));
        for (double& v : shifted.values) v += shift;
        shift_ok = shift_ok && greedy_action(q, 0, std::span<const Action>(acts)) ==
                                   greedy_action(shifted, 0, std::span<const Action>(acts));
    }
    report_extra("invariant greedy action under constant shift", shift_ok, "1000 cases");

    bool mirror_ok = true;
    const cartpole::Params p;
    for (int i = 0; i < 1000; ++i) {
        const auto s = random_state(rng);
        auto m = s;
        m.x = -s.x;
        m.x_dot = -s.x_dot;
        m.theta = -s.theta;
        m.theta_dot = -s.theta_dot;
        const Action a{rng.uniform_index(2)};
        const auto t1 = cartpole::step(p, s, a).next_state;
        const auto t2 = cartpole::step(p, m, Action{1 - a.index}).next_state;
        mirror_ok = mirror_ok && t2.x == -t1.x && t2.x_dot == -t1.x_dot && t2.theta == -t1.theta &&
                    t2.theta_dot == -t1.theta_dot;
    }
    report_extra("invariant mirror symmetry of dynamics", mirror_ok, "1000 cases, exact");

    bool csv_ok = true;
    const auto path = std::filesystem::temp_directory_path() / "pamcts_acceptance.csv";
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<CellResult> cells(1 + rng.uniform_index(3));
        for (std::size_t c = 0; c < cells.size(); ++c) {
            cells[c].env_label = "env" + std::to_string(c);
            cells[c].alpha = 0.25 * static_cast<double>(rng.uniform_index(5));
            cells[c].budget = 1 + rng.uniform_index(1000);
            for (std::size_t j = 0, n = 1 + rng.uniform_index(30); j < n; ++j) {
                cells[c].returns.push_back(rng.uniform(-1.0, 1.0) * std::pow(10.0, rng.uniform(-5.0, 5.0)));
                cells[c].seeds.push_back(rng.next_u64());
            }
            cells[c].recompute_stats();
        }
        write_results_csv(cells, path);
        const auto back = read_results_csv(path);
        csv_ok = csv_ok && back.size() == cells.size();
        for (std::size_t c = 0; csv_ok && c < cells.size(); ++c) {
            csv_ok = back[c].returns == cells[c].returns && back[c].seeds == cells[c].seeds &&
                     back[c].alpha == cells[c].alpha && back[c].budget == cells[c].budget;
        }
    }
    std::filesystem::remove(path);
    report_extra("invariant CSV round trip", csv_ok, "100 result sets, exact");

    report(10, "invariant suite", visit_ok && bitwise && shift_ok && mirror_ok && csv_ok,
           "all five property suites");
}

}  // namespace

int main() {
    std::printf("training tabular policy...\n");
    std::fflush(stdout);
    const auto t0 = std::chrono::steady_clock::now();
    const auto cfg = TrainConfig::tabular_cartpole();
    const cartpole::Model train_model(cartpole::Params{}, cfg.gamma);
    double early = -1.0;
    TrainObserver observer{cfg.steps / 10, [&](std::size_t step, const QTable& t) {
                               if (step == cfg.steps / 10) {
                                   cartpole::Params p;
                                   p.max_episode_steps = 500;
                                   early = greedy_mean(t, p, 20, 42);
                               }
                           }};
    Rng rng(cfg.seed);
    auto table = train_double_q(train_model, DiscretizationScheme::cartpole_default(), cfg, rng, &observer);
    cartpole::Params eval;
    eval.max_episode_steps = 500;
    const double late = greedy_mean(table, eval, 20, 42);
    report_extra("training curve", early >= 0.0 && late >= early,
                 "greedy mean at 10% " + fmt(early) + ", at end " + fmt(late) + ", trained in " +
                     fmt(seconds_since(t0)) + " s");

    alpha0_matches_reference();
    alpha1_is_greedy(table);
    zero_decay_is_trace_identical(table);
    small_mdp_optimal();
    policy_quality(table);
    physics_matches_reference();
    invariants();
    centered_reward(table);
    acceleration_and_staleness(table);

    std::printf("%d failing\n", failures);
    return failures == 0 ? 0 : 1;
}
