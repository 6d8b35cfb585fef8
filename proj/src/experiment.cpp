#include "pamcts/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

namespace pamcts {

double mean_of(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    double sum = 0.0;
    for (double x : xs) sum += x;
    return sum / static_cast<double>(xs.size());
}

double population_std(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    const double m = mean_of(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size()));
}

void CellResult::recompute_stats() {
    mean = mean_of(returns);
    std_dev = population_std(returns);
}

std::uint64_t derive_sample_seed(std::uint64_t base_seed, std::string_view env_label, double alpha,
                                 std::size_t budget, std::size_t sample_index) {
    return SeedBuilder(base_seed)
        .add(env_label)
        .add(alpha)
        .add(static_cast<std::uint64_t>(budget))
        .add(static_cast<std::uint64_t>(sample_index))
        .finish();
}

void ExperimentGrid::validate() const {
    if (env_variants.empty()) throw ConfigurationError("grid has no env_variants");
    if (alphas.empty()) throw ConfigurationError("grid has no alphas");
    if (iteration_budgets.empty()) throw ConfigurationError("grid has no iteration_budgets");
    if (samples_per_cell < 1) throw ConfigurationError("samples_per_cell must be >= 1");
    if (episode_step_cap < 1) throw ConfigurationError("episode_step_cap must be >= 1");
    for (double a : alphas) {
        if (!(a >= 0.0 && a <= 1.0)) throw ConfigurationError("alpha values must be in [0, 1]");
    }
    for (std::size_t b : iteration_budgets) {
        if (b < 1) throw ConfigurationError("iteration budgets must be >= 1");
    }
    for (std::size_t i = 0; i < env_variants.size(); ++i) {
        for (std::size_t k = i + 1; k < env_variants.size(); ++k) {
            if (env_variants[i].label == env_variants[k].label) {
                throw ConfigurationError("duplicate env label '" + env_variants[i].label + "'");
            }
        }
    }
}

std::size_t ExperimentGrid::cell_count() const {
    return env_variants.size() * alphas.size() * iteration_budgets.size();
}

namespace {

bool needs_qtable(double alpha, const SearchConfig& search) {
    return alpha > 0.0 || search.rollout_policy == RolloutPolicy::GreedyQ;
}

template <QFunction<cartpole::State> Q>
std::size_t run_sample(const cartpole::Model& model, double alpha, const SearchConfig& cfg,
                       const Q& qf, const QTable* qtable, Rng& rng, double& episode_return) {
    const auto start = model.initial_state(rng);
    const auto& p = model.params();
    const Action acts[] = {cartpole::kPushLeft, cartpole::kPushRight};
    EpisodeResult ep;
    if (alpha == 1.0) {
        ep = simulate_episode(
            model,
            [&](const cartpole::State& s) {
                return greedy_action(*qtable, s, std::span<const Action>(acts));
            },
            start, p.max_episode_steps, rng);
    } else {
        ep = simulate_episode(
            model,
            [&](const cartpole::State& s) { return plan(s, model, qf, cfg, rng).best; },
            start, p.max_episode_steps, rng);
    }
    episode_return = ep.total_return;
    return ep.steps;
}

std::string cell_label(std::string_view env, double alpha, std::size_t budget) {
    std::ostringstream os;
    os << "cell (env=" << env << ", alpha=" << alpha << ", budget=" << budget << ")";
    return os.str();
}

}  // namespace

CellResult run_cell(const EnvVariant& env, double alpha, std::size_t budget, std::size_t samples,
                    const SearchConfig& search, std::uint64_t base_seed, const QTable* qtable) {
    if (samples < 1) throw ConfigurationError("samples must be >= 1");
    if (needs_qtable(alpha, search) && qtable == nullptr) {
        throw ConfigurationError(cell_label(env.label, alpha, budget) + " needs a Q-table");
    }
    SearchConfig cfg = search;
    cfg.alpha = alpha;
    cfg.iteration_budget = std::max<std::size_t>(budget, 1);
    cfg.record_trace = false;
    cfg.validate();
    const cartpole::Model model(env.params, cfg.gamma);

    CellResult r;
    r.env_label = env.label;
    r.alpha = alpha;
    r.budget = budget;
    const std::size_t seed_budget = alpha == 1.0 ? 0 : budget;
    for (std::size_t j = 0; j < samples; ++j) {
        const std::uint64_t seed = derive_sample_seed(base_seed, env.label, alpha, seed_budget, j);
        Rng rng(seed);
        double ret = 0.0;
        std::size_t steps = 0;
        if (qtable != nullptr && needs_qtable(alpha, search)) {
            steps = run_sample(model, alpha, cfg, *qtable, qtable, rng, ret);
        } else {
            steps = run_sample(model, alpha, cfg, ZeroQ{}, qtable, rng, ret);
        }
        r.returns.push_back(ret);
        r.steps.push_back(steps);
        r.seeds.push_back(seed);
    }
    r.recompute_stats();
    return r;
}

std::vector<CellResult> run_grid(const ExperimentGrid& grid, const QTable* qtable,
                                 std::size_t jobs) {
    grid.validate();

    struct Job {
        const EnvVariant* env;
        EnvVariant capped;
        double alpha;
        std::size_t budget;
    };
    std::vector<Job> work;
    for (const auto& env : grid.env_variants) {
        EnvVariant capped = env;
        capped.params.max_episode_steps = grid.episode_step_cap;
        for (double alpha : grid.alphas) {
            if (alpha == 1.0) {
                work.push_back({&env, capped, alpha, 0});
                continue;
            }
            for (std::size_t b : grid.iteration_budgets) work.push_back({&env, capped, alpha, b});
        }
    }

    std::vector<CellResult> computed(work.size());
    std::vector<std::exception_ptr> errors(work.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < work.size(); i = next++) {
            const auto& w = work[i];
            try {
                computed[i] = run_cell(w.capped, w.alpha, w.budget, grid.samples_per_cell,
                                       grid.search, grid.base_seed, qtable);
            } catch (const std::exception& e) {
                errors[i] = std::make_exception_ptr(std::runtime_error(
                    cell_label(w.env->label, w.alpha, w.budget) + ": " + e.what()));
            }
        }
    };
    const std::size_t n_threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(work.size(), 1));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    std::vector<CellResult> out;
    out.reserve(grid.cell_count());
    for (auto& c : computed) {
        if (c.alpha == 1.0) {
            for (std::size_t b : grid.iteration_budgets) {
                CellResult copy = c;
                copy.budget = b;
                out.push_back(std::move(copy));
            }
        } else {
            out.push_back(std::move(c));
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const CellResult& a, const CellResult& b) {
        return std::tie(a.env_label, a.alpha, a.budget) < std::tie(b.env_label, b.alpha, b.budget);
    });
    return out;
}

namespace {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

template <typename T>
T parse_field(std::string_view text, const std::string& what) {
    T v{};
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw LoadError(what, "cannot parse '" + std::string(text) + "'");
    }
    return v;
}

}  // namespace

void write_results_csv(std::span<const CellResult> results, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << "env_label,alpha,budget,sample_index,seed,episode_return\n";
    for (const auto& c : results) {
        if (c.env_label.find_first_of(",\"\n\r") != std::string::npos) {
            throw ValidationError("env label '" + c.env_label + "' cannot be written to CSV");
        }
        for (std::size_t j = 0; j < c.returns.size(); ++j) {
            out << c.env_label << ',' << format_double(c.alpha) << ',' << c.budget << ',' << j << ','
                << (j < c.seeds.size() ? c.seeds[j] : 0) << ',' << format_double(c.returns[j])
                << '\n';
        }
    }
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<CellResult> read_results_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError(path.string(), "cannot open file");
    std::string line;
    if (!std::getline(in, line) || line != "env_label,alpha,budget,sample_index,seed,episode_return") {
        throw LoadError("header", "unexpected CSV header");
    }
    std::vector<CellResult> cells;
    std::map<std::tuple<std::string, double, std::size_t>, std::size_t> index;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::vector<std::string_view> fields;
        std::string_view rest(line);
        for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos;) {
            fields.push_back(rest.substr(0, pos));
            rest.remove_prefix(pos + 1);
        }
        fields.push_back(rest);
        const std::string where = "row " + std::to_string(row);
        if (fields.size() != 6) throw LoadError(where, "expected 6 fields");
        const std::string label(fields[0]);
        const double alpha = parse_field<double>(fields[1], where + " alpha");
        const auto budget = parse_field<std::size_t>(fields[2], where + " budget");
        const auto sample = parse_field<std::size_t>(fields[3], where + " sample_index");
        const auto seed = parse_field<std::uint64_t>(fields[4], where + " seed");
        const double ret = parse_field<double>(fields[5], where + " episode_return");

        const auto key = std::make_tuple(label, alpha, budget);
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, cells.size()).first;
            CellResult c;
            c.env_label = label;
            c.alpha = alpha;
            c.budget = budget;
            cells.push_back(std::move(c));
        }
        auto& c = cells[it->second];
        if (sample != c.returns.size()) throw LoadError(where, "sample_index out of order");
        c.returns.push_back(ret);
        c.seeds.push_back(seed);
    }
    for (auto& c : cells) c.recompute_stats();
    return cells;
}

namespace {

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigurationError(std::string("config field '") + key + "' has the wrong type");
    }
}

}  // namespace

RunConfig grid_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw ConfigurationError("grid config must be a JSON object");
    static constexpr std::string_view kKnown[] = {"env_variants",     "alphas", "iteration_budgets",
                                                  "samples_per_cell", "base_seed",
                                                  "episode_step_cap", "search", "qtable"};
    for (const auto& [key, _] : j.items()) {
        if (std::find(std::begin(kKnown), std::end(kKnown), key) == std::end(kKnown)) {
            throw ConfigurationError("unknown config field '" + key + "'");
        }
    }
    RunConfig rc;
    ExperimentGrid& g = rc.grid;
    if (!j.contains("env_variants") || !j["env_variants"].is_array()) {
        throw ConfigurationError("config needs an env_variants array");
    }
    for (const auto& v : j["env_variants"]) {
        if (!v.is_object() || !v.contains("label") || !v["label"].is_string()) {
            throw ConfigurationError("each env variant needs a string label");
        }
        EnvVariant env;
        env.label = v["label"].get<std::string>();
        try {
            if (v.contains("params")) env.params = v["params"].get<cartpole::Params>();
        } catch (const ValidationError& e) {
            throw ConfigurationError("env '" + env.label + "': " + e.what());
        }
        g.env_variants.push_back(std::move(env));
    }
    g.alphas = get_or(j, "alphas", g.alphas);
    g.iteration_budgets = get_or(j, "iteration_budgets", g.iteration_budgets);
    g.samples_per_cell = get_or(j, "samples_per_cell", g.samples_per_cell);
    g.base_seed = get_or(j, "base_seed", g.base_seed);
    g.episode_step_cap = get_or(j, "episode_step_cap", g.episode_step_cap);
    if (j.contains("search")) {
        const auto& s = j["search"];
        if (!s.is_object()) throw ConfigurationError("search must be an object");
        g.search.exploration_constant = get_or(s, "exploration_constant", g.search.exploration_constant);
        g.search.decay_rate = get_or(s, "decay_rate", g.search.decay_rate);
        g.search.gamma = get_or(s, "gamma", g.search.gamma);
        g.search.rollout_horizon = get_or(s, "rollout_horizon", g.search.rollout_horizon);
        if (s.contains("rollout_policy")) {
            try {
                g.search.rollout_policy =
                    rollout_policy_from_string(get_or<std::string>(s, "rollout_policy", ""));
            } catch (const ValidationError& e) {
                throw ConfigurationError(e.what());
            }
        }
    }
    if (j.contains("qtable")) {
        std::filesystem::path q = get_or<std::string>(j, "qtable", "");
        rc.qtable_path = q.is_absolute() ? q : base_dir / q;
    }
    g.validate();
    return rc;
}

RunConfig load_grid_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigurationError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigurationError("malformed config " + path.string() + ": " + e.what());
    }
    return grid_config_from_json(j, path.parent_path());
}

}  // namespace pamcts
