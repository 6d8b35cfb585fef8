#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pamcts/cartpole.hpp"
#include "pamcts/qtable.hpp"
#include "pamcts/search.hpp"

namespace pamcts {

class ConfigurationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EnvVariant {
    std::string label;
    cartpole::Params params;
};

struct ExperimentGrid {
    std::vector<EnvVariant> env_variants;
    std::vector<double> alphas{0.0, 0.25, 0.5, 0.75, 1.0};
    std::vector<std::size_t> iteration_budgets{50, 100, 200, 300};
    std::size_t samples_per_cell = 20;
    std::uint64_t base_seed = 0;
    // Overrides max_episode_steps of every variant.
    std::size_t episode_step_cap = 500;
    // Defaults for c, k, gamma, horizon and rollout policy. alpha and
    // iteration_budget are set per cell.
    SearchConfig search;

    void validate() const;
    // Cells emitted by run_grid, counting replicated alpha = 1 cells.
    std::size_t cell_count() const;
};

struct CellResult {
    std::string env_label;
    double alpha = 0.0;
    std::size_t budget = 0;
    std::vector<double> returns;
    std::vector<std::size_t> steps;
    std::vector<std::uint64_t> seeds;
    double mean = 0.0;
    double std_dev = 0.0;  // population

    void recompute_stats();
};

double mean_of(std::span<const double> xs);
double population_std(std::span<const double> xs);

// seed of sample j in the cell (env_label, alpha, budget).
std::uint64_t derive_sample_seed(std::uint64_t base_seed, std::string_view env_label, double alpha,
                                 std::size_t budget, std::size_t sample_index);

// Runs `samples` full episodes on `env` (step cap taken from its params).
// Every step is a decision epoch: alpha = 1 acts greedily on the Q-table
// without searching, otherwise plan() runs with the given budget. A
// Q-table is required when alpha > 0 or rollouts are Q-greedy.
CellResult run_cell(const EnvVariant& env, double alpha, std::size_t budget, std::size_t samples,
                    const SearchConfig& search, std::uint64_t base_seed, const QTable* qtable);

// Outer product of run_cell over the grid, ordered by (env_label, alpha,
// budget). alpha = 1 is computed once per variant and replicated under
// each budget label. Cells run on up to `jobs` threads.
std::vector<CellResult> run_grid(const ExperimentGrid& grid, const QTable* qtable,
                                 std::size_t jobs = 1);

void write_results_csv(std::span<const CellResult> results, const std::filesystem::path& path);
std::vector<CellResult> read_results_csv(const std::filesystem::path& path);

struct RunConfig {
    ExperimentGrid grid;
    std::optional<std::filesystem::path> qtable_path;
};

RunConfig grid_config_from_json(const nlohmann::json& j,
                                const std::filesystem::path& base_dir = {});
RunConfig load_grid_config(const std::filesystem::path& path);

// Grouped by env label then alpha, (budget, mean, std) sorted by budget.
nlohmann::json plot_data(std::span<const CellResult> results);
void emit_plot_data(std::span<const CellResult> results, const std::filesystem::path& json_path,
                    const std::optional<std::filesystem::path>& svg_path = std::nullopt);
// Small multiples: one row per env label, one column per alpha.
std::string render_svg(const nlohmann::json& plot);

}  // namespace pamcts
