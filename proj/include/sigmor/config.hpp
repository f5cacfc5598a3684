#ifndef SIGMOR_CONFIG_HPP
#define SIGMOR_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace sigmor
{

using Eigen::Index;

/// Which system produces the observed outputs.
enum class TruthModel
{
    reaction_diffusion,
    /// Outputs of a signature model with a fixed random output matrix; the
    /// regression can recover it exactly.
    signature_linear
};

///
/// Benchmark configuration. Text form is one `key = value` per line, `#`
/// starts a comment. Lists are comma separated and accept ranges `a-b`.
///
struct ExperimentConfig
{
    Index d = 100;
    Index m = 2;
    double T = 1.0;
    Index grid_points = 1001;
    Index N = 4;
    double c_w = 0.2;
    Index n_train = 200;
    Index n_test = 100;
    double ridge_lambda = 0.0;
    std::vector<Index> r_list; // empty: 1, ..., min(40, n)
    std::uint64_t seed = 20240501;
    std::vector<int> simulate_k{1, 10, 50};
    TruthModel truth = TruthModel::reaction_diffusion;
    std::string out = "sigmor-out";
    int threads = 1;

    /// Reduced orders to build: r_list, or the default range when it is empty.
    std::vector<Index> orders() const;

    /// Signature state dimension for (m, N).
    Index signature_dim() const;

    /// Throws ConfigError naming the first offending key.
    void validate() const;

    /// Set one key from its text form; throws ConfigError on unknown keys or bad values.
    void set(const std::string& key, const std::string& value);

    /// Switch to the large benchmark: d = 1000, N = 5, 1000 training and 1000 test controls.
    void apply_full_scale();

    /// Apply SIGMOR_<KEY> environment variables (key upper-cased, e.g. SIGMOR_N_TRAIN).
    void apply_environment();

    /// Canonical text form, readable by parse_config.
    std::string to_text() const;
};

ExperimentConfig parse_config(std::istream& is);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Names accepted by ExperimentConfig::set, in canonical order.
const std::vector<std::string>& config_keys();

} // namespace sigmor

#endif
