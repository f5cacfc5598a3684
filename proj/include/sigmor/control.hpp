#ifndef SIGMOR_CONTROL_HPP
#define SIGMOR_CONTROL_HPP

#include <cstdint>
#include <functional>

#include <Eigen/Core>

#include <sigmor/errors.hpp>

namespace sigmor
{

using Eigen::Index;

///
/// Uniform time grid `start = t_0 < t_1 < ... < t_{points-1} = end`.
///
class TimeGrid
{
public:
    TimeGrid() = default;
    TimeGrid(double start, double end, Index points);

    /// Grid on [0, horizon] with the given number of points.
    static TimeGrid uniform(double horizon, Index points) { return TimeGrid(0.0, horizon, points); }

    /// Validate a sampled time column; throws ShapeError if it is not uniform.
    static TimeGrid from_times(const Eigen::Ref<const Eigen::VectorXd>& times, double rel_tol = 1e-9);

    double start() const noexcept { return m_start; }
    double end() const noexcept { return m_end; }
    double horizon() const noexcept { return m_end - m_start; }
    Index points() const noexcept { return m_points; }
    Index intervals() const noexcept { return m_points - 1; }
    double step() const noexcept { return (m_end - m_start) / static_cast<double>(m_points - 1); }

    double operator[](Index i) const noexcept
    {
        return i == m_points - 1 ? m_end : m_start + static_cast<double>(i) * step();
    }

    Eigen::VectorXd times() const;

    /// Sub-grid `t_first, ..., t_{points-1}`.
    TimeGrid tail(Index first) const;

    /// Index of the grid point equal to `t` (within rel_tol of a step), or -1.
    Index index_of(double t, double rel_tol = 1e-9) const;

    bool operator==(const TimeGrid& other) const noexcept
    {
        return m_points == other.m_points && m_start == other.m_start && m_end == other.m_end;
    }

private:
    double m_start = 0.0;
    double m_end = 1.0;
    Index m_points = 2;
};

enum class ControlKind
{
    test_sinusoid,
    white_noise,
    custom
};

/// How a control is evaluated between grid points.
enum class Interpolation
{
    exact,             // evaluated from a closed-form function
    piecewise_constant, // constant on each cell [t_j, t_{j+1})
    linear
};

///
/// A control `u : [0, T] -> R^m` sampled on a uniform grid.
///
/// `samples` has one row per grid point. Piecewise-constant signals hold the
/// value of cell j in row j; the last row repeats the last cell.
///
class ControlSignal
{
public:
    using Function = std::function<void(double, Eigen::Ref<Eigen::VectorXd>)>;

    ControlSignal() = default;

    /// Sampled control with the given interpolation (exact is not allowed here).
    ControlSignal(TimeGrid grid, Eigen::MatrixXd samples, Interpolation mode = Interpolation::linear);

    /// Control known in closed form; samples are taken on the grid.
    ControlSignal(TimeGrid grid, Index inputs, Function f);

    Index inputs() const noexcept { return m_samples.cols(); }
    const TimeGrid& grid() const noexcept { return m_grid; }
    const Eigen::MatrixXd& samples() const noexcept { return m_samples; }
    Interpolation interpolation() const noexcept { return m_mode; }

    ControlKind kind() const noexcept { return m_kind; }
    int frequency() const noexcept { return m_frequency; }
    std::uint64_t seed() const noexcept { return m_seed; }
    double noise_scale() const noexcept { return m_noise_scale; }

    /// u(t) for t in the grid's range (anywhere, for exact controls).
    void value(double t, Eigen::Ref<Eigen::VectorXd> out) const;
    Eigen::VectorXd value(double t) const;

    /// Inputs seen by a one-step method on cell j: u at the left end, the
    /// midpoint and the right end. Piecewise-constant controls return the
    /// cell value three times.
    void step_inputs(Index j, Eigen::Ref<Eigen::VectorXd> left, Eigen::Ref<Eigen::VectorXd> mid,
                     Eigen::Ref<Eigen::VectorXd> right) const;

    /// Squared L2([0,T]) norm. Exact for piecewise-constant controls,
    /// composite Simpson on grid cells otherwise.
    double l2_norm_squared() const;

    /// The same control restricted to [t_first, T].
    ControlSignal tail(Index first) const;

    // Used by the generators in dynamics.
    ControlSignal& tag_test_sinusoid(int k)
    {
        m_kind = ControlKind::test_sinusoid;
        m_frequency = k;
        return *this;
    }
    ControlSignal& tag_white_noise(std::uint64_t seed, double scale)
    {
        m_kind = ControlKind::white_noise;
        m_seed = seed;
        m_noise_scale = scale;
        return *this;
    }

private:
    TimeGrid m_grid;
    Eigen::MatrixXd m_samples;
    Interpolation m_mode = Interpolation::linear;
    Function m_function;
    ControlKind m_kind = ControlKind::custom;
    int m_frequency = 0;
    std::uint64_t m_seed = 0;
    double m_noise_scale = 0.0;
};

/// L2([0,T]) distance of two controls on the same grid.
double l2_distance(const ControlSignal& u, const ControlSignal& v);

/// Control that is identically zero.
ControlSignal zero_control(const TimeGrid& grid, Index inputs);

/// Control with constant value `c`.
ControlSignal constant_control(const TimeGrid& grid, const Eigen::VectorXd& c);

} // namespace sigmor

#endif
