#include <sigmor/control.hpp>

#include <cmath>
#include <string>

namespace sigmor
{

TimeGrid::TimeGrid(double start, double end, Index points) : m_start(start), m_end(end), m_points(points)
{
    if (points < 2)
        throw ShapeError("time grid needs at least 2 points, got " + std::to_string(points));
    if (!(end > start) || !std::isfinite(start) || !std::isfinite(end))
        throw ShapeError("time grid needs start < end");
}

TimeGrid TimeGrid::from_times(const Eigen::Ref<const Eigen::VectorXd>& times, double rel_tol)
{
    if (times.size() < 2)
        throw ShapeError("time column needs at least 2 samples");
    TimeGrid grid(times(0), times(times.size() - 1), times.size());
    const double h = grid.step();
    for (Index i = 0; i < times.size(); ++i)
    {
        if (std::abs(times(i) - grid[i]) > rel_tol * h)
            throw ShapeError("time grid is not uniform at sample " + std::to_string(i));
    }
    return grid;
}

Eigen::VectorXd TimeGrid::times() const
{
    Eigen::VectorXd t(m_points);
    for (Index i = 0; i < m_points; ++i)
        t(i) = (*this)[i];
    return t;
}

TimeGrid TimeGrid::tail(Index first) const
{
    if (first < 0 || first >= m_points - 1)
        throw ShapeError("tail start index out of range");
    return TimeGrid((*this)[first], m_end, m_points - first);
}

Index TimeGrid::index_of(double t, double rel_tol) const
{
    const double pos = (t - m_start) / step();
    const double nearest = std::round(pos);
    if (std::abs(pos - nearest) > rel_tol || nearest < 0 || nearest > static_cast<double>(m_points - 1))
        return -1;
    return static_cast<Index>(nearest);
}

ControlSignal::ControlSignal(TimeGrid grid, Eigen::MatrixXd samples, Interpolation mode)
    : m_grid(grid), m_samples(std::move(samples)), m_mode(mode)
{
    if (mode == Interpolation::exact)
        throw ShapeError("exact controls need a closed-form function");
    if (m_samples.rows() != m_grid.points())
        throw ShapeError("control has " + std::to_string(m_samples.rows()) + " samples for a grid of " +
                         std::to_string(m_grid.points()) + " points");
    if (m_samples.cols() < 1)
        throw ShapeError("control needs at least one input channel");
}

ControlSignal::ControlSignal(TimeGrid grid, Index inputs, Function f)
    : m_grid(grid), m_samples(grid.points(), inputs), m_mode(Interpolation::exact), m_function(std::move(f))
{
    if (inputs < 1)
        throw ShapeError("control needs at least one input channel");
    Eigen::VectorXd row(inputs);
    for (Index i = 0; i < m_grid.points(); ++i)
    {
        m_function(m_grid[i], row);
        m_samples.row(i) = row.transpose();
    }
}

void ControlSignal::value(double t, Eigen::Ref<Eigen::VectorXd> out) const
{
    if (m_mode == Interpolation::exact)
    {
        m_function(t, out);
        return;
    }
    const double h = m_grid.step();
    double pos = (t - m_grid.start()) / h;
    const double last = static_cast<double>(m_grid.intervals());
    if (pos < 0.0)
        pos = 0.0;
    if (pos > last)
        pos = last;
    Index j = static_cast<Index>(std::floor(pos));
    if (j >= m_grid.intervals())
        j = m_grid.intervals() - 1;
    if (m_mode == Interpolation::piecewise_constant)
    {
        out = m_samples.row(pos >= last ? m_grid.intervals() : j).transpose();
        return;
    }
    const double w = pos - static_cast<double>(j);
    out = ((1.0 - w) * m_samples.row(j) + w * m_samples.row(j + 1)).transpose();
}

Eigen::VectorXd ControlSignal::value(double t) const
{
    Eigen::VectorXd out(inputs());
    value(t, out);
    return out;
}

void ControlSignal::step_inputs(Index j, Eigen::Ref<Eigen::VectorXd> left, Eigen::Ref<Eigen::VectorXd> mid,
                                Eigen::Ref<Eigen::VectorXd> right) const
{
    switch (m_mode)
    {
    case Interpolation::piecewise_constant:
        left = m_samples.row(j).transpose();
        mid = left;
        right = left;
        break;
    case Interpolation::linear:
        left = m_samples.row(j).transpose();
        right = m_samples.row(j + 1).transpose();
        mid = 0.5 * (left + right);
        break;
    case Interpolation::exact:
        left = m_samples.row(j).transpose();
        right = m_samples.row(j + 1).transpose();
        m_function(m_grid[j] + 0.5 * m_grid.step(), mid);
        break;
    }
}

namespace
{

// Composite Simpson over grid cells of |f(t) - g(t)|^2, with g optional.
double simpson_l2(const ControlSignal& u, const ControlSignal* v)
{
    const Index m = u.inputs();
    Eigen::VectorXd a0(m), a1(m), a2(m), b0 = Eigen::VectorXd::Zero(m), b1 = b0, b2 = b0;
    double sum = 0.0;
    const double h = u.grid().step();
    for (Index j = 0; j < u.grid().intervals(); ++j)
    {
        u.step_inputs(j, a0, a1, a2);
        if (v)
            v->step_inputs(j, b0, b1, b2);
        sum += h / 6.0 * ((a0 - b0).squaredNorm() + 4.0 * (a1 - b1).squaredNorm() + (a2 - b2).squaredNorm());
    }
    return sum;
}

} // namespace

double ControlSignal::l2_norm_squared() const
{
    return simpson_l2(*this, nullptr);
}

ControlSignal ControlSignal::tail(Index first) const
{
    TimeGrid sub = m_grid.tail(first);
    ControlSignal out;
    out.m_grid = sub;
    out.m_samples = m_samples.bottomRows(sub.points());
    out.m_mode = m_mode;
    out.m_function = m_function;
    out.m_kind = m_kind;
    out.m_frequency = m_frequency;
    out.m_seed = m_seed;
    out.m_noise_scale = m_noise_scale;
    return out;
}

double l2_distance(const ControlSignal& u, const ControlSignal& v)
{
    if (!(u.grid() == v.grid()) || u.inputs() != v.inputs())
        throw ShapeError("l2_distance: controls live on different grids or channel counts");
    return std::sqrt(simpson_l2(u, &v));
}

ControlSignal zero_control(const TimeGrid& grid, Index inputs)
{
    return ControlSignal(grid, Eigen::MatrixXd::Zero(grid.points(), inputs), Interpolation::piecewise_constant);
}

ControlSignal constant_control(const TimeGrid& grid, const Eigen::VectorXd& c)
{
    Eigen::MatrixXd s = c.transpose().replicate(grid.points(), 1);
    return ControlSignal(grid, std::move(s), Interpolation::piecewise_constant);
}

} // namespace sigmor
