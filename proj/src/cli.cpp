#include "pamcts/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "pamcts/cartpole.hpp"
#include "pamcts/experiment.hpp"
#include "pamcts/qtable.hpp"
#include "pamcts/search.hpp"

namespace pamcts {
namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Either inline JSON (starting with '{') or a path to a JSON file.
cartpole::Params read_env(const std::string& arg) {
    if (arg.empty()) return {};
    nlohmann::json j;
    try {
        if (arg.front() == '{') {
            j = nlohmann::json::parse(arg);
        } else {
            std::ifstream in(arg, std::ios::binary);
            if (!in) throw UsageError("cannot open env file " + arg);
            j = nlohmann::json::parse(in);
        }
    } catch (const nlohmann::json::parse_error& e) {
        throw UsageError(std::string("malformed env JSON: ") + e.what());
    }
    try {
        return j.get<cartpole::Params>();
    } catch (const ValidationError& e) {
        throw UsageError(e.what());
    }
}

cartpole::State parse_state(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError("bad --state component '" + item + "'");
        }
    }
    if (v.size() != 4) throw UsageError("--state needs x,x_dot,theta,theta_dot");
    return cartpole::State{v[0], v[1], v[2], v[3], 0};
}

struct TrainArgs {
    std::size_t steps = 300'000;
    double lr = 0.001;
    double gamma = 0.999;
    std::uint64_t seed = 0;
    std::string out;
    double temp_initial = 5.0;
    double temp_final = 0.1;
    std::size_t bins = 12;
    std::string env;
};

int do_train(const TrainArgs& a, std::ostream& out) {
    const auto params = read_env(a.env);
    const cartpole::Model model(params, a.gamma);
    const auto defaults = DiscretizationScheme::cartpole_default();
    std::vector<double> lo, hi;
    for (const auto& e : defaults.edges()) {
        lo.push_back(e.front());
        hi.push_back(e.back());
    }
    const std::vector<std::size_t> bins(lo.size(), a.bins);
    const auto scheme = DiscretizationScheme::uniform(lo, hi, bins);
    TrainConfig cfg;
    cfg.steps = a.steps;
    cfg.learning_rate = a.lr;
    cfg.gamma = a.gamma;
    cfg.seed = a.seed;
    cfg.initial_temperature = a.temp_initial;
    cfg.final_temperature = a.temp_final;
    Rng rng(a.seed);
    auto table = train_double_q(model, scheme, cfg, rng);
    table.metadata().training_env = params;
    save_qtable(table, a.out);
    out << "wrote " << a.out << " (" << scheme.cell_count() << " cells, " << a.steps << " steps)\n";
    return 0;
}

struct PlanArgs {
    double alpha = 0.0;
    std::size_t budget = 100;
    std::string qtable;
    std::string env;
    std::string state;
    std::uint64_t seed = 0;
    double c = 50.0;
    double k = 0.0;
    double gamma = 0.999;
    std::size_t horizon = 500;
    std::string rollout = "uniform_random";
    bool diagnostics = false;
};

int do_plan(const PlanArgs& a, std::ostream& out) {
    const auto params = read_env(a.env);
    SearchConfig cfg;
    cfg.alpha = a.alpha;
    cfg.iteration_budget = a.budget;
    cfg.exploration_constant = a.c;
    cfg.decay_rate = a.k;
    cfg.gamma = a.gamma;
    cfg.rollout_horizon = a.horizon;
    try {
        cfg.rollout_policy = rollout_policy_from_string(a.rollout);
        cfg.validate();
    } catch (const ValidationError& e) {
        throw UsageError(e.what());
    }
    const bool need_q = a.alpha > 0.0 || cfg.rollout_policy == RolloutPolicy::GreedyQ;
    if (need_q && a.qtable.empty()) throw UsageError("--qtable is required when alpha > 0");
    const cartpole::Model model(params, cfg.gamma);
    Rng rng(a.seed);
    const auto state = a.state.empty() ? model.initial_state(rng) : parse_state(a.state);
    if (model.is_terminal(state)) throw UsageError("state is terminal");

    SearchDiagnostics d;
    if (need_q) {
        const auto table = load_qtable(a.qtable);
        d = plan(state, model, table, cfg, rng);
    } else {
        d = plan(state, model, ZeroQ{}, cfg, rng);
    }
    out << d.best.index << '\n';
    if (a.diagnostics) out << diagnostics_to_json(d).dump(2) << '\n';
    return 0;
}

struct RunArgs {
    std::string config;
    std::string out_dir;
    std::size_t jobs = 1;
    bool svg = false;
};

int do_run(const RunArgs& a, std::ostream& out) {
    RunConfig rc;
    try {
        rc = load_grid_config(a.config);
    } catch (const ConfigurationError& e) {
        throw UsageError(e.what());
    }
    std::optional<QTable> table;
    if (rc.qtable_path) table = load_qtable(*rc.qtable_path);
    const auto results = run_grid(rc.grid, table ? &*table : nullptr, a.jobs);
    const std::filesystem::path dir(a.out_dir);
    std::filesystem::create_directories(dir);
    write_results_csv(results, dir / "results.csv");
    emit_plot_data(results, dir / "plot.json",
                   a.svg ? std::optional<std::filesystem::path>(dir / "plot.svg") : std::nullopt);
    out << "wrote " << results.size() << " cells to " << dir.string() << '\n';
    return 0;
}

struct PlotArgs {
    std::string input;
    std::string out;
    std::string svg;
};

int do_plot(const PlotArgs& a, std::ostream& out) {
    const auto results = read_results_csv(a.input);
    emit_plot_data(results, a.out,
                   a.svg.empty() ? std::nullopt : std::optional<std::filesystem::path>(a.svg));
    out << "wrote " << a.out << '\n';
    return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Policy-augmented Monte Carlo tree search on CartPole", "pamcts"};
    app.require_subcommand(1);

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "Train a tabular double Q-learning policy");
    train_cmd->add_option("--steps", train.steps, "Environment transitions")
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--lr", train.lr, "Learning rate")->check(CLI::Range(1e-12, 1.0));
    train_cmd->add_option("--gamma", train.gamma, "Discount")->check(CLI::Range(1e-12, 1.0));
    train_cmd->add_option("--seed", train.seed, "Random seed");
    train_cmd->add_option("--out", train.out, "Output Q-table JSON")->required();
    train_cmd->add_option("--temp-initial", train.temp_initial, "Initial Boltzmann temperature")
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--temp-final", train.temp_final, "Final Boltzmann temperature")
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--bins", train.bins, "Bins per state dimension")->check(CLI::Range(2, 64));
    train_cmd->add_option("--env-json", train.env, "CartPole params (file or inline JSON)");

    PlanArgs plan_args;
    auto* plan_cmd = app.add_subcommand("plan", "Choose one action from a CartPole state");
    plan_cmd->add_option("--alpha", plan_args.alpha, "Policy weight")->check(CLI::Range(0.0, 1.0));
    plan_cmd->add_option("--budget", plan_args.budget, "Iterations")->check(CLI::PositiveNumber);
    plan_cmd->add_option("--qtable", plan_args.qtable, "Q-table JSON");
    plan_cmd->add_option("--env-json", plan_args.env, "CartPole params (file or inline JSON)");
    plan_cmd->add_option("--state", plan_args.state, "x,x_dot,theta,theta_dot (default: random)");
    plan_cmd->add_option("--seed", plan_args.seed, "Random seed");
    plan_cmd->add_option("--c", plan_args.c, "Exploration constant")->check(CLI::NonNegativeNumber);
    plan_cmd->add_option("--k", plan_args.k, "Alpha decay rate")->check(CLI::NonNegativeNumber);
    plan_cmd->add_option("--gamma", plan_args.gamma, "Discount")->check(CLI::Range(1e-12, 1.0));
    plan_cmd->add_option("--horizon", plan_args.horizon, "Rollout horizon");
    plan_cmd->add_option("--rollout", plan_args.rollout, "uniform_random or greedy_q");
    plan_cmd->add_flag("--diagnostics", plan_args.diagnostics, "Print root statistics as JSON");

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Run an experiment grid");
    run_cmd->add_option("--config", run.config, "Grid config JSON")->required();
    run_cmd->add_option("--out-dir", run.out_dir, "Output directory")->required();
    run_cmd->add_option("--jobs", run.jobs, "Worker threads")->check(CLI::PositiveNumber);
    run_cmd->add_flag("--svg", run.svg, "Also render plot.svg");

    PlotArgs plot;
    auto* plot_cmd = app.add_subcommand("plot", "Aggregate a results CSV into plot data");
    plot_cmd->add_option("--input", plot.input, "results.csv")->required();
    plot_cmd->add_option("--out", plot.out, "Plot JSON output")->required();
    plot_cmd->add_option("--svg", plot.svg, "Optional SVG output");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n' << app.help();
        return 1;
    }

    try {
        if (train_cmd->parsed()) return do_train(train, out);
        if (plan_cmd->parsed()) return do_plan(plan_args, out);
        if (run_cmd->parsed()) return do_run(run, out);
        if (plot_cmd->parsed()) return do_plot(plot, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

int cli_main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return cli_main(args, std::cout, std::cerr);
}

}  // namespace pamcts
