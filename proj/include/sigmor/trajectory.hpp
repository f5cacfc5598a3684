#ifndef SIGMOR_TRAJECTORY_HPP
#define SIGMOR_TRAJECTORY_HPP

#include <Eigen/Core>

#include <sigmor/control.hpp>

namespace sigmor
{

/// Samples of a state or output path, one row per grid point.
template <typename Scalar>
struct Trajectory
{
    using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    TimeGrid grid;
    MatrixType values;

    Trajectory() = default;
    Trajectory(TimeGrid g, MatrixType v) : grid(g), values(std::move(v))
    {
        if (values.rows() != grid.points())
            throw ShapeError("trajectory row count does not match its grid");
    }

    Index points() const noexcept { return values.rows(); }
    Index dim() const noexcept { return values.cols(); }
};

using Trajectoryd = Trajectory<double>;

/// Composite trapezoid rule of sampled values on a uniform grid.
template <typename Derived>
typename Derived::Scalar trapezoid(const Eigen::MatrixBase<Derived>& samples, double step)
{
    const Index n = samples.size();
    if (n < 2)
        return typename Derived::Scalar(0);
    return step * (samples.sum() - 0.5 * (samples(0) + samples(n - 1)));
}

/// Composite Simpson rule; an odd interval count closes with the 3/8 rule on
/// the last three intervals. Falls back to the trapezoid rule below 3 points.
template <typename Derived>
typename Derived::Scalar simpson(const Eigen::MatrixBase<Derived>& samples, double step)
{
    using Scalar = typename Derived::Scalar;
    const Index n = samples.size();
    if (n < 3)
        return trapezoid(samples, step);
    const Index intervals = n - 1;
    const Index even = intervals % 2 == 0 ? intervals : intervals - 3;
    Scalar sum(0);
    for (Index i = 0; i + 2 <= even; i += 2)
        sum += samples(i) + 4 * samples(i + 1) + samples(i + 2);
    sum *= step / 3;
    if (even != intervals)
    {
        const Index i = even;
        sum += 3 * step / 8 * (samples(i) + 3 * samples(i + 1) + 3 * samples(i + 2) + samples(i + 3));
    }
    return sum;
}

} // namespace sigmor

#endif
