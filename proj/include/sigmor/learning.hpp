#ifndef SIGMOR_LEARNING_HPP
#define SIGMOR_LEARNING_HPP

#include <utility>
#include <vector>

#include <Eigen/Core>

#include <sigmor/bilinear.hpp>
#include <sigmor/control.hpp>
#include <sigmor/dynamics.hpp>
#include <sigmor/signature.hpp>
#include <sigmor/trajectory.hpp>

namespace sigmor
{

///
/// Stacked regression problem: one row per (control, time) sample, features
/// are signature entries (column 0 is the constant level-0 term), targets are
/// observed outputs.
///
struct RegressionDataset
{
    Eigen::MatrixXd features;
    Eigen::MatrixXd targets;
    std::vector<std::pair<Index, Index>> provenance; // (control index, time index)

    Index rows() const noexcept { return features.rows(); }
};

RegressionDataset assemble_dataset(const std::vector<ControlSignal>& controls, const NonlinearSystem& truth,
                                   Index order, int threads = 1, const NonlinearOptions& opts = {});

struct FitResult
{
    Eigen::MatrixXd C;         // p x n
    double residual = 0.0;     // sum of squared data residuals (penalty excluded)
    Index effective_rank = 0;  // numerical rank of the (augmented) feature matrix
    bool rank_deficient = false;
    Index rows = 0;
};

///
/// Streaming least squares min |Y - X C^T|^2 + lambda |C|^2 by orthogonal
/// factorization. Row blocks are folded into a running triangular factor
/// (Householder QR of [R, Z; X_block, Y_block]); the final solve uses a
/// column-pivoted complete orthogonal decomposition and returns the
/// minimum-norm solution when the features are rank deficient.
///
class LeastSquaresAccumulator
{
public:
    LeastSquaresAccumulator(Index features, Index targets);

    void add(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Ref<const Eigen::MatrixXd>& y);
    FitResult solve(double ridge_lambda = 0.0) const;

    Index rows_seen() const noexcept { return m_rows; }
    Index features() const noexcept { return m_r.cols(); }
    Index targets() const noexcept { return m_z.cols(); }

private:
    Eigen::MatrixXd m_r;
    Eigen::MatrixXd m_z;
    double m_discarded = 0.0;
    Index m_rows = 0;
};

FitResult fit_C(const RegressionDataset& data, double ridge_lambda = 0.0);

/// sqrt( (1/K) sum_k int_0^T |a_k(t) - b_k(t)|^2 dt ) with the trapezoid rule.
double error_l2(const std::vector<Trajectoryd>& a, const std::vector<Trajectoryd>& b);

struct ErrorReport
{
    double sig = 0.0;     // truth vs full signature model
    double mor = 0.0;     // full vs reduced signature model
    double red_sig = 0.0; // truth vs reduced signature model
};

/// Three error functionals from precomputed output families; checks the
/// triangle inequality red_sig <= sig + mor.
ErrorReport compare_outputs(const std::vector<Trajectoryd>& truth, const std::vector<Trajectoryd>& full,
                            const std::vector<Trajectoryd>& reduced);

/// Outputs y_S = C S of a bilinear model for a family of controls.
std::vector<Trajectoryd> model_outputs(const BilinearSystemd& sys, const std::vector<ControlSignal>& controls,
                                       int threads = 1);

/// Outputs of the nonlinear system for a family of controls.
std::vector<Trajectoryd> truth_outputs(const NonlinearSystem& sys, const std::vector<ControlSignal>& controls,
                                       int threads = 1, const NonlinearOptions& opts = {});

ErrorReport evaluate_pipeline(const SignatureSystem& full, const BilinearSystemd& reduced,
                              const NonlinearSystem& truth, const std::vector<ControlSignal>& test_controls,
                              int threads = 1, const NonlinearOptions& opts = {});

} // namespace sigmor

#endif
