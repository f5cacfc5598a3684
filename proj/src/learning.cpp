#include <sigmor/learning.hpp>

#include <cmath>
#include <string>

#include <Eigen/Householder>
#include <Eigen/QR>

#include <sigmor/errors.hpp>
#include <sigmor/parallel.hpp>

namespace sigmor
{

RegressionDataset assemble_dataset(const std::vector<ControlSignal>& controls, const NonlinearSystem& truth,
                                   Index order, int threads, const NonlinearOptions& opts)
{
    if (controls.empty())
        throw ShapeError("assemble_dataset needs at least one control");
    const TimeGrid grid = controls.front().grid();
    for (const auto& u : controls)
        if (!(u.grid() == grid))
            throw ShapeError("all training controls must share one grid");
    const Index count = static_cast<Index>(controls.size());
    std::vector<Trajectoryd> ys(controls.size()), ss(controls.size());
    parallel_for(0, count, threads, [&](Index k) {
        const auto& u = controls[static_cast<std::size_t>(k)];
        try
        {
            ys[static_cast<std::size_t>(k)] = simulate_output(truth, u, opts);
        }
        catch (const DivergenceError& e)
        {
            throw DivergenceError("training control " + std::to_string(k) + ": " + e.what(), e.step(), e.time());
        }
        ss[static_cast<std::size_t>(k)] = compute_signature(u, order, grid);
    });

    const Index per = grid.points();
    RegressionDataset data;
    data.features.resize(count * per, ss.front().dim());
    data.targets.resize(count * per, ys.front().dim());
    data.provenance.reserve(static_cast<std::size_t>(count * per));
    for (Index k = 0; k < count; ++k)
    {
        data.features.middleRows(k * per, per) = ss[static_cast<std::size_t>(k)].values;
        data.targets.middleRows(k * per, per) = ys[static_cast<std::size_t>(k)].values;
        for (Index i = 0; i < per; ++i)
            data.provenance.emplace_back(k, i);
    }
    return data;
}

LeastSquaresAccumulator::LeastSquaresAccumulator(Index features, Index targets)
    : m_r(Eigen::MatrixXd::Zero(features, features)), m_z(Eigen::MatrixXd::Zero(features, targets))
{
    if (features < 1 || targets < 1)
        throw ShapeError("least squares needs at least one feature and one target");
}

void LeastSquaresAccumulator::add(const Eigen::Ref<const Eigen::MatrixXd>& x,
                                  const Eigen::Ref<const Eigen::MatrixXd>& y)
{
    const Index n = m_r.cols();
    const Index p = m_z.cols();
    if (x.cols() != n || y.cols() != p || x.rows() != y.rows())
        throw ShapeError("least squares block has inconsistent shape");
    if (x.rows() == 0)
        return;
    Eigen::MatrixXd stacked(n + x.rows(), n + p);
    stacked.topLeftCorner(n, n) = m_r;
    stacked.topRightCorner(n, p) = m_z;
    stacked.bottomLeftCorner(x.rows(), n) = x;
    stacked.bottomRightCorner(x.rows(), p) = y;

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(stacked.leftCols(n));
    Eigen::MatrixXd qty = stacked.rightCols(p);
    qty.applyOnTheLeft(qr.householderQ().adjoint());
    m_r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    m_z = qty.topRows(n);
    m_discarded += qty.bottomRows(qty.rows() - n).squaredNorm();
    m_rows += x.rows();
}

FitResult LeastSquaresAccumulator::solve(double ridge_lambda) const
{
    if (!(ridge_lambda >= 0.0))
        throw ShapeError("ridge parameter must be nonnegative");
    if (m_rows < 1)
        throw ShapeError("least squares has no data rows");
    const Index n = m_r.cols();
    const Index p = m_z.cols();

    Eigen::MatrixXd r = m_r;
    Eigen::MatrixXd z = m_z;
    if (ridge_lambda > 0.0)
    {
        Eigen::MatrixXd aug(2 * n, n + p);
        aug.topLeftCorner(n, n) = m_r;
        aug.topRightCorner(n, p) = m_z;
        aug.bottomLeftCorner(n, n) = std::sqrt(ridge_lambda) * Eigen::MatrixXd::Identity(n, n);
        aug.bottomRightCorner(n, p).setZero();
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(aug.leftCols(n));
        Eigen::MatrixXd qty = aug.rightCols(p);
        qty.applyOnTheLeft(qr.householderQ().adjoint());
        r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
        z = qty.topRows(n);
    }

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(r);
    const Eigen::MatrixXd coeffs = cod.solve(z); // n x p

    FitResult out;
    out.C = coeffs.transpose();
    out.effective_rank = cod.rank();
    out.rank_deficient = out.effective_rank < n;
    out.rows = m_rows;
    out.residual = m_discarded + (m_z - m_r * coeffs).squaredNorm();
    return out;
}

FitResult fit_C(const RegressionDataset& data, double ridge_lambda)
{
    if (data.features.rows() != data.targets.rows())
        throw ShapeError("features and targets differ in row count");
    LeastSquaresAccumulator acc(data.features.cols(), data.targets.cols());
    constexpr Index block = 2048;
    for (Index start = 0; start < data.rows(); start += block)
    {
        const Index len = std::min(block, data.rows() - start);
        acc.add(data.features.middleRows(start, len), data.targets.middleRows(start, len));
    }
    return acc.solve(ridge_lambda);
}

double error_l2(const std::vector<Trajectoryd>& a, const std::vector<Trajectoryd>& b)
{
    if (a.size() != b.size() || a.empty())
        throw ShapeError("error_l2 needs two nonempty families of equal size");
    double total = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
    {
        if (!(a[k].grid == b[k].grid) || a[k].dim() != b[k].dim())
            throw ShapeError("error_l2: trajectories " + std::to_string(k) + " live on different grids");
        const Eigen::VectorXd sq = (a[k].values - b[k].values).rowwise().squaredNorm();
        total += trapezoid(sq, a[k].grid.step());
    }
    return std::sqrt(total / static_cast<double>(a.size()));
}

ErrorReport compare_outputs(const std::vector<Trajectoryd>& truth, const std::vector<Trajectoryd>& full,
                            const std::vector<Trajectoryd>& reduced)
{
    ErrorReport r;
    r.sig = error_l2(truth, full);
    r.mor = error_l2(full, reduced);
    r.red_sig = error_l2(truth, reduced);
    if (r.red_sig > r.sig + r.mor + 1e-10)
        throw NumericalError("error report violates the triangle inequality");
    return r;
}

std::vector<Trajectoryd> model_outputs(const BilinearSystemd& sys, const std::vector<ControlSignal>& controls,
                                       int threads)
{
    std::vector<Trajectoryd> out(controls.size());
    parallel_for(0, static_cast<Index>(controls.size()), threads, [&](Index k) {
        const auto& u = controls[static_cast<std::size_t>(k)];
        out[static_cast<std::size_t>(k)] = output(sys, simulate(sys, u));
    });
    return out;
}

std::vector<Trajectoryd> truth_outputs(const NonlinearSystem& sys, const std::vector<ControlSignal>& controls,
                                       int threads, const NonlinearOptions& opts)
{
    std::vector<Trajectoryd> out(controls.size());
    parallel_for(0, static_cast<Index>(controls.size()), threads, [&](Index k) {
        out[static_cast<std::size_t>(k)] = simulate_output(sys, controls[static_cast<std::size_t>(k)], opts);
    });
    return out;
}

ErrorReport evaluate_pipeline(const SignatureSystem& full, const BilinearSystemd& reduced,
                              const NonlinearSystem& truth, const std::vector<ControlSignal>& test_controls,
                              int threads, const NonlinearOptions& opts)
{
    const auto y = truth_outputs(truth, test_controls, threads, opts);
    const auto y_full = model_outputs(full.system, test_controls, threads);
    const auto y_red = model_outputs(reduced, test_controls, threads);
    return compare_outputs(y, y_full, y_red);
}

} // namespace sigmor
