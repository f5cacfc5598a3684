#include <sigmor/dynamics.hpp>

#include <cmath>
#include <numbers>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include <sigmor/bilinear.hpp>
#include <sigmor/errors.hpp>
#include <sigmor/random.hpp>

namespace sigmor
{

Eigen::VectorXd NonlinearSystem::drift(const Eigen::VectorXd& x) const
{
    Eigen::VectorXd out(x.size());
    reaction(x, out);
    if (linear.rows() > 0)
        out += linear * x;
    return out;
}

Eigen::VectorXd NonlinearSystem::input_field(Index i, const Eigen::VectorXd& x) const
{
    if (i < 1 || i > inputs())
        throw ShapeError("input field index out of range");
    Eigen::VectorXd out(x.size());
    input_fields[static_cast<std::size_t>(i - 1)](x, out);
    return out;
}

void NonlinearSystem::vector_field(const Eigen::VectorXd& x, const Eigen::VectorXd& u, Eigen::VectorXd& dx) const
{
    thread_local Eigen::VectorXd buffer;
    buffer.resize(x.size());
    reaction(x, dx);
    if (linear.rows() > 0)
        dx.noalias() += linear * x;
    for (Index i = 0; i < inputs(); ++i)
    {
        if (u(i) == 0.0)
            continue;
        input_fields[static_cast<std::size_t>(i)](x, buffer);
        dx += u(i) * buffer;
    }
}

void NonlinearSystem::validate() const
{
    const Index d = state_dim();
    if (d < 1)
        throw ShapeError("nonlinear system needs a nonempty initial state");
    if (linear.rows() != 0 && (linear.rows() != d || linear.cols() != d))
        throw ShapeError("linear part must be d x d");
    if (!reaction || !output)
        throw ShapeError("nonlinear system is missing its drift or output map");
    for (const auto& f : input_fields)
        if (!f)
            throw ShapeError("nonlinear system has an empty input field");
}

NonlinearSystem make_reaction_diffusion(Index d)
{
    if (d < 2)
        throw ShapeError("reaction-diffusion model needs d >= 2, got " + std::to_string(d));
    const double h = 1.0 / static_cast<double>(d + 1);
    const double inv_h2 = 1.0 / (h * h);

    NonlinearSystem sys;
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(3 * d));
    for (Index j = 0; j < d; ++j)
    {
        entries.emplace_back(j, j, -2.0 * inv_h2);
        if (j > 0)
            entries.emplace_back(j, j - 1, inv_h2);
        if (j + 1 < d)
            entries.emplace_back(j, j + 1, inv_h2);
    }
    sys.linear.resize(d, d);
    sys.linear.setFromTriplets(entries.begin(), entries.end());

    Eigen::VectorXd zeta(d);
    for (Index j = 0; j < d; ++j)
        zeta(j) = static_cast<double>(j + 1) * h;

    sys.reaction = [](const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> out) {
        out = x - x.array().cube().matrix();
    };
    const Eigen::VectorXd b = zeta.array().exp().matrix();
    sys.input_fields.push_back([b](const Eigen::VectorXd&, Eigen::Ref<Eigen::VectorXd> out) { out = b; });
    sys.input_fields.push_back(
        [](const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> out) { out = x.array().square().matrix(); });
    sys.output = [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, std::exp(x.mean())); };
    sys.outputs = 1;
    sys.x0 = 0.5 * zeta.array().sin().matrix();
    // 1 + 3x^2 from the cubic, 2|u||x| from the quadratic input, for |x| <= 1, |u| <= 3
    sys.reaction_stiffness = 10.0;
    return sys;
}

NonlinearSystem make_cubic_example(Index d, const Eigen::MatrixXd& a, Eigen::VectorXd x0)
{
    if (d < 1 || a.rows() != d || a.cols() != d)
        throw ShapeError("cubic example needs a d x d matrix");
    NonlinearSystem sys;
    sys.linear = a.sparseView();
    sys.reaction = [](const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> out) {
        out = -x.array().cube().matrix();
    };
    sys.input_fields.push_back(
        [](const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> out) { out = x.array().square().matrix(); });
    sys.output = [](const Eigen::VectorXd& x) { return x; };
    sys.outputs = d;
    if (x0.size() == 0)
        x0 = Eigen::VectorXd::Constant(d, 0.5);
    if (x0.size() != d)
        throw ShapeError("cubic example initial state has wrong dimension");
    sys.x0 = std::move(x0);
    sys.reaction_stiffness = 10.0;
    return sys;
}

Index explicit_substeps(const NonlinearSystem& sys, double step, double stability)
{
    double rho = sys.reaction_stiffness;
    if (sys.linear.rows() > 0)
    {
        Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(sys.linear.rows());
        for (Index k = 0; k < sys.linear.outerSize(); ++k)
            for (Eigen::SparseMatrix<double>::InnerIterator it(sys.linear, k); it; ++it)
                row_sums(it.row()) += std::abs(it.value());
        rho += row_sums.maxCoeff();
    }
    return std::max<Index>(1, static_cast<Index>(std::ceil(step * rho / stability)));
}

std::shared_ptr<const LawsonPropagator> make_lawson_propagator(const NonlinearSystem& sys, double step)
{
    auto p = std::make_shared<LawsonPropagator>();
    p->step = step;
    const Index d = sys.state_dim();
    if (sys.linear.rows() == 0)
    {
        p->half_step = Eigen::MatrixXd::Identity(d, d);
        return p;
    }
    const Eigen::MatrixXd half = Eigen::MatrixXd(sys.linear) * (0.5 * step);
    p->half_step = half.exp();
    return p;
}

namespace
{

Eigen::VectorXd quadratic_input(const Eigen::VectorXd& u0, const Eigen::VectorXd& uh, const Eigen::VectorXd& u1,
                                double x)
{
    return u0 * (2.0 * (x - 0.5) * (x - 1.0)) + uh * (-4.0 * x * (x - 1.0)) + u1 * (2.0 * x * (x - 0.5));
}

template <typename Sink>
void integrate(const NonlinearSystem& sys, const ControlSignal& u, const NonlinearOptions& opts, Sink&& sink)
{
    sys.validate();
    if (u.inputs() != sys.inputs())
        throw ShapeError("control has " + std::to_string(u.inputs()) + " channels, system expects " +
                         std::to_string(sys.inputs()));
    const TimeGrid& grid = u.grid();
    const double h = grid.step();
    const Index d = sys.state_dim();
    const Index m = u.inputs();

    Integrator method = opts.method;
    Index substeps = opts.substeps;
    if (method == Integrator::automatic)
    {
        const Index needed = substeps > 0 ? substeps : explicit_substeps(sys, h, opts.stability);
        method = (needed > opts.lawson_threshold && sys.linear.rows() > 0) ? Integrator::lawson_rk4
                                                                           : Integrator::explicit_rk4;
        if (substeps == 0)
            substeps = method == Integrator::explicit_rk4 ? needed : 1;
    }
    else if (substeps == 0)
    {
        substeps = method == Integrator::explicit_rk4 ? explicit_substeps(sys, h, opts.stability) : 1;
    }

    Eigen::VectorXd x = sys.x0;
    Eigen::VectorXd k1(d), k2(d), k3(d), k4(d), tmp(d);
    Eigen::VectorXd u0(m), uh(m), u1(m);
    sink(Index(0), x);

    if (method == Integrator::explicit_rk4)
    {
        const auto deriv = [&](const Eigen::VectorXd& s, const Eigen::VectorXd& in, Eigen::VectorXd& ds) {
            sys.vector_field(s, in, ds);
        };
        for (Index j = 0; j < grid.intervals(); ++j)
        {
            u.step_inputs(j, u0, uh, u1);
            detail::rk4_cell(x, u0, uh, u1, h, substeps, deriv, k1, k2, k3, k4, tmp);
            detail::guard_state(x, opts.divergence_bound, j + 1, grid[j + 1]);
            sink(j + 1, x);
        }
        return;
    }

    const double dt = h / static_cast<double>(substeps);
    std::shared_ptr<const LawsonPropagator> prop = opts.propagator;
    if (!prop || std::abs(prop->step - dt) > 1e-14 * dt || prop->half_step.rows() != d)
        prop = make_lawson_propagator(sys, dt);
    const Eigen::MatrixXd& e = prop->half_step;

    // nonlinear part only: g(x) + sum u_i f_i(x)
    Eigen::VectorXd buffer(d);
    const auto nonlinear = [&](const Eigen::VectorXd& s, const Eigen::VectorXd& in, Eigen::VectorXd& out) {
        sys.reaction(s, out);
        for (Index i = 0; i < m; ++i)
        {
            if (in(i) == 0.0)
                continue;
            sys.input_fields[static_cast<std::size_t>(i)](s, buffer);
            out += in(i) * buffer;
        }
    };
    Eigen::VectorXd a(d), b(d), c(d), ua(m), um(m), ub(m);
    for (Index j = 0; j < grid.intervals(); ++j)
    {
        u.step_inputs(j, u0, uh, u1);
        for (Index q = 0; q < substeps; ++q)
        {
            if (substeps == 1)
            {
                ua = u0;
                um = uh;
                ub = u1;
            }
            else
            {
                const double xa = static_cast<double>(q) / static_cast<double>(substeps);
                const double xb = static_cast<double>(q + 1) / static_cast<double>(substeps);
                ua = quadratic_input(u0, uh, u1, xa);
                um = quadratic_input(u0, uh, u1, 0.5 * (xa + xb));
                ub = quadratic_input(u0, uh, u1, xb);
            }
            nonlinear(x, ua, k1);
            a.noalias() = e * x;
            b.noalias() = e * k1;
            tmp = a + 0.5 * dt * b;
            nonlinear(tmp, um, k2);
            tmp = a + 0.5 * dt * k2;
            nonlinear(tmp, um, k3);
            tmp = a + dt * k3;
            c.noalias() = e * tmp;
            nonlinear(c, ub, k4);
            tmp = a + (dt / 6.0) * (b + 2.0 * k2 + 2.0 * k3);
            x.noalias() = e * tmp;
            x += (dt / 6.0) * k4;
        }
        detail::guard_state(x, opts.divergence_bound, j + 1, grid[j + 1]);
        sink(j + 1, x);
    }
}

} // namespace

Trajectoryd simulate_nonlinear(const NonlinearSystem& sys, const ControlSignal& u, const NonlinearOptions& opts)
{
    Eigen::MatrixXd values(u.grid().points(), sys.state_dim());
    integrate(sys, u, opts, [&](Index i, const Eigen::VectorXd& x) { values.row(i) = x.transpose(); });
    return Trajectoryd(u.grid(), std::move(values));
}

Trajectoryd simulate_output(const NonlinearSystem& sys, const ControlSignal& u, const NonlinearOptions& opts)
{
    Eigen::MatrixXd values(u.grid().points(), sys.outputs);
    integrate(sys, u, opts, [&](Index i, const Eigen::VectorXd& x) {
        const Eigen::VectorXd y = sys.output(x);
        if (y.size() != sys.outputs)
            throw ShapeError("output map returned the wrong number of outputs");
        values.row(i) = y.transpose();
    });
    return Trajectoryd(u.grid(), std::move(values));
}

ControlSignal test_control(int k, const TimeGrid& grid)
{
    if (k < 1)
        throw ShapeError("test control frequency must be >= 1");
    const double freq = static_cast<double>(k);
    ControlSignal u(grid, 2, [freq](double t, Eigen::Ref<Eigen::VectorXd> out) {
        out(0) = std::cos(freq * t);
        out(1) = std::sin(freq * t);
    });
    u.tag_test_sinusoid(k);
    return u;
}

ControlSignal training_control(std::uint64_t seed, double c_w, const TimeGrid& grid, Index m)
{
    if (!(c_w >= 0.0))
        throw ShapeError("noise scale c_w must be nonnegative");
    if (m < 1)
        throw ShapeError("training control needs m >= 1");
    const double dt = grid.step();
    const double scale = c_w / std::sqrt(dt); // c_w * (sqrt(dt) Z) / dt
    Eigen::MatrixXd samples(grid.points(), m);
    for (Index j = 0; j < grid.intervals(); ++j)
        for (Index i = 0; i < m; ++i)
            samples(j, i) = scale * counter_normal(hash_key(seed, static_cast<std::uint64_t>(j),
                                                            static_cast<std::uint64_t>(i)));
    samples.row(grid.intervals()) = samples.row(grid.intervals() - 1);
    ControlSignal u(grid, std::move(samples), Interpolation::piecewise_constant);
    u.tag_white_noise(seed, c_w);
    return u;
}

double lipschitz_probe(const NonlinearSystem& sys, const ControlSignal& u, const ControlSignal& v,
                       const NonlinearOptions& opts)
{
    const double dist = l2_distance(u, v);
    if (!(dist > 0.0))
        throw ShapeError("lipschitz_probe needs two distinct controls");
    const Trajectoryd xu = simulate_nonlinear(sys, u, opts);
    const Trajectoryd xv = simulate_nonlinear(sys, v, opts);
    const double sup = (xu.values - xv.values).rowwise().norm().maxCoeff();
    return sup / dist;
}

} // namespace sigmor
