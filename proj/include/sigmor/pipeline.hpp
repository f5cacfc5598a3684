#ifndef SIGMOR_PIPELINE_HPP
#define SIGMOR_PIPELINE_HPP

#include <filesystem>
#include <iosfwd>
#include <vector>

#include <sigmor/balancing.hpp>
#include <sigmor/config.hpp>
#include <sigmor/dynamics.hpp>
#include <sigmor/learning.hpp>

namespace sigmor
{

struct RunContext
{
    std::filesystem::path out;
    int threads = 1;
    std::ostream* log = nullptr; // progress and warnings; null for silence
};

RunContext make_context(const ExperimentConfig& cfg, std::ostream* log = nullptr);

/// Nonlinear system that generates the observed outputs.
NonlinearSystem make_truth(const ExperimentConfig& cfg);

/// Integrator settings for the truth model on the config's grid. The
/// integrating-factor propagator is built once here when the model is stiff.
NonlinearOptions truth_options(const ExperimentConfig& cfg, const NonlinearSystem& truth);

TimeGrid config_grid(const ExperimentConfig& cfg);
std::vector<ControlSignal> training_controls(const ExperimentConfig& cfg);
/// Test family k = 1, ..., n_test.
std::vector<ControlSignal> test_controls(const ExperimentConfig& cfg);

/// Writes simulate/y_k<k>.csv for every configured k; returns the file count.
std::size_t cmd_simulate(const ExperimentConfig& cfg, const RunContext& ctx);

struct LearnSummary
{
    FitResult fit;
    double e_sig = 0.0;
};

/// Writes C.csv, learn_report.csv and test_outputs.csv.
LearnSummary cmd_learn(const ExperimentConfig& cfg, const RunContext& ctx);

struct ReduceSummary
{
    Balancing<double> balancing;
    BalancingResidual residual;
    double spectrum_residual = 0.0;
    std::vector<Index> orders; // r values written, in r_list order
};

/// Reads the learned C, builds Gramians and the balancing, writes hankel.csv,
/// P_spectrum.csv, Q_spectrum.csv, balancing_check.csv and reduced/rom_r<r>.txt.
ReduceSummary cmd_reduce(const ExperimentConfig& cfg, const RunContext& ctx, const std::filesystem::path& c_file);

struct EvaluationRow
{
    Index r = 0;
    ErrorReport errors;
};

/// Reads C.csv, test_outputs.csv and the reduced systems; writes error_vs_r.csv.
std::vector<EvaluationRow> cmd_evaluate(const ExperimentConfig& cfg, const RunContext& ctx);

/// simulate, learn, reduce and evaluate in sequence.
std::vector<EvaluationRow> cmd_pipeline(const ExperimentConfig& cfg, const RunContext& ctx);

/// |sorted sigma^2 - sorted eig(PQ)|_inf / max eig(PQ).
double hankel_spectrum_residual(const Eigen::VectorXd& sigma, const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q);

} // namespace sigmor

#endif
