#ifndef SIGMOR_GRAMIANS_HPP
#define SIGMOR_GRAMIANS_HPP

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Core>

#include <sigmor/bilinear.hpp>
#include <sigmor/control.hpp>
#include <sigmor/errors.hpp>
#include <sigmor/trajectory.hpp>

namespace sigmor
{

enum class GramianMethod
{
    series,
    ode
};

/// Time-limited reachability (P) and observability (Q) Gramians on [0, horizon].
template <typename Scalar>
struct GramianPair
{
    using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    MatrixType P;
    MatrixType Q;
    double horizon = 0.0;
    GramianMethod method = GramianMethod::series;
};

namespace detail
{

template <typename Matrix>
void symmetrize(Matrix& x)
{
    x = (0.5 * (x + x.transpose())).eval();
}

} // namespace detail

///
/// L(X) = A_0 X + X A_0^T + sum_{i>=1} A_i X A_i^T, symmetrized.
///
template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>
lyapunov_apply(const std::vector<Generator<Scalar>>& gens, const Eigen::MatrixBase<Derived>& x)
{
    using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    if (gens.empty() || x.rows() != gens.front().size() || x.cols() != x.rows())
        throw ShapeError("lyapunov_apply: X must be square with the generator dimension");
    MatrixType a0x = gens[0] * x;
    MatrixType out = a0x + a0x.transpose();
    for (std::size_t i = 1; i < gens.size(); ++i)
    {
        MatrixType ax = gens[i] * x;
        // A X A^T = (A (A X)^T)^T keeps both products sparse-times-dense
        MatrixType axa = gens[i] * ax.transpose();
        out += axa.transpose();
    }
    detail::symmetrize(out);
    return out;
}

///
/// L*(X) = A_0^T X + X A_0 + sum_{i>=1} A_i^T X A_i, symmetrized.
///
template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>
lyapunov_adjoint_apply(const std::vector<Generator<Scalar>>& gens, const Eigen::MatrixBase<Derived>& x)
{
    using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    if (gens.empty() || x.rows() != gens.front().size() || x.cols() != x.rows())
        throw ShapeError("lyapunov_adjoint_apply: X must be square with the generator dimension");
    MatrixType atx = gens[0].transpose_times(x);
    MatrixType out = atx + atx.transpose();
    for (std::size_t i = 1; i < gens.size(); ++i)
    {
        MatrixType atx_i = gens[i].transpose_times(x);
        MatrixType atxa = gens[i].transpose_times(atx_i.transpose());
        out += atxa.transpose();
    }
    detail::symmetrize(out);
    return out;
}

///
/// Finite series P = sum_{j=0}^{2N} T^{j+1}/(j+1)! L^j(S_0 S_0^T) and the same
/// for Q with L* seeded by C^T C. Valid when the generators are nilpotent of
/// order N+1; the (2N+1)-th term is checked to vanish.
///
template <typename Scalar>
GramianPair<Scalar> gramian_series(const BilinearSystem<Scalar>& sys, Index order, double horizon,
                                   double vanish_tol = 1e-12)
{
    using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    if (order < 0 || !(horizon > 0))
        throw ShapeError("gramian_series needs order >= 0 and horizon > 0");
    const Index n = sys.dim();

    const auto run = [&](MatrixType term, bool adjoint, const char* which) {
        MatrixType sum = MatrixType::Zero(n, n);
        double coeff = horizon; // T^{j+1}/(j+1)!
        double largest = static_cast<double>(term.norm());
        for (Index j = 0; j <= 2 * order; ++j)
        {
            sum += static_cast<Scalar>(coeff) * term;
            term = adjoint ? lyapunov_adjoint_apply(sys.generators(), term) : lyapunov_apply(sys.generators(), term);
            largest = std::max(largest, static_cast<double>(term.norm()));
            coeff *= horizon / static_cast<double>(j + 2);
        }
        const double tail = static_cast<double>(term.norm());
        if (tail > vanish_tol * largest)
            throw NonNilpotentError(std::string("non-nilpotent system: term ") + std::to_string(2 * order + 1) +
                                    " of the " + which + " series has norm " + std::to_string(tail));
        detail::symmetrize(sum);
        return sum;
    };

    GramianPair<Scalar> out;
    out.horizon = horizon;
    out.method = GramianMethod::series;
    const MatrixType& s0 = sys.initial_basis();
    out.P = run(s0 * s0.transpose(), false, "reachability");
    if (sys.has_output())
    {
        const MatrixType& c = sys.output_matrix();
        out.Q = run(c.transpose() * c, true, "observability");
    }
    else
    {
        out.Q = MatrixType::Zero(n, n);
    }
    return out;
}

///
/// P and Q from RK4 integration of dZ/dt = L(Z), dZ*/dt = L*(Z*), with the
/// time integral accumulated by the trapezoid rule on the same grid.
///
template <typename Scalar>
GramianPair<Scalar> gramian_ode(const BilinearSystem<Scalar>& sys, double horizon, Index steps,
                                double divergence_bound = 1e12)
{
    using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    if (steps < 100)
        throw ShapeError("gramian_ode needs at least 100 steps");
    if (!(horizon > 0))
        throw ShapeError("gramian_ode needs horizon > 0");
    const Index n = sys.dim();
    const Scalar h = static_cast<Scalar>(horizon / static_cast<double>(steps));

    const auto run = [&](MatrixType z, bool adjoint) {
        const auto op = [&](const MatrixType& x) {
            return adjoint ? lyapunov_adjoint_apply(sys.generators(), x) : lyapunov_apply(sys.generators(), x);
        };
        MatrixType integral = (h / 2) * z;
        for (Index j = 0; j < steps; ++j)
        {
            MatrixType k1 = op(z);
            MatrixType k2 = op(z + (h / 2) * k1);
            MatrixType k3 = op(z + (h / 2) * k2);
            MatrixType k4 = op(z + h * k3);
            z += (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
            detail::symmetrize(z);
            const double norm = static_cast<double>(z.norm());
            if (!std::isfinite(norm) || norm > divergence_bound)
                throw DivergenceError("Gramian ODE diverged at step " + std::to_string(j + 1),
                                      static_cast<long>(j + 1), static_cast<double>(h) * static_cast<double>(j + 1));
            integral += (j + 1 == steps ? h / 2 : h) * z;
        }
        detail::symmetrize(integral);
        return integral;
    };

    GramianPair<Scalar> out;
    out.horizon = horizon;
    out.method = GramianMethod::ode;
    const MatrixType& s0 = sys.initial_basis();
    out.P = run(s0 * s0.transpose(), false);
    if (sys.has_output())
    {
        const MatrixType& c = sys.output_matrix();
        out.Q = run(c.transpose() * c, true);
    }
    else
    {
        out.Q = MatrixType::Zero(n, n);
    }
    return out;
}

/// Outcome of an energy-bound check: `holds` is lhs <= rhs * (1 + rel_slack).
struct EnergyBoundReport
{
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

///
/// int_0^T <S(t), p>^2 dt  versus  lambda * exp(|u|^2_{L2}) * |v|^2 for an
/// eigenpair (lambda, p) of the reachability Gramian.
///
template <typename Scalar>
EnergyBoundReport reachability_energy_check(const BilinearSystem<Scalar>& sys, const ControlSignal& u,
                                            const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& p, double lambda,
                                            double rel_slack = 1e-6, const SimulationOptions& opts = {})
{
    if (p.size() != sys.dim())
        throw ShapeError("eigenvector has wrong dimension");
    const auto traj = simulate(sys, u, opts);
    const Eigen::VectorXd proj = (traj.values * p).template cast<double>();
    EnergyBoundReport r;
    r.lhs = simpson(proj.array().square().matrix(), u.grid().step());
    r.rhs = lambda * std::exp(u.l2_norm_squared()) * static_cast<double>(sys.initial_coeffs().squaredNorm());
    r.holds = r.lhs <= r.rhs * (1.0 + rel_slack);
    return r;
}

///
/// int_{t0}^T |C Phi(t, t0) q|^2 dt  versus  mu * exp(|u|^2_{L2([0,T])}) for
/// an eigenpair (mu, q) of the observability Gramian. Phi(., t0) q is realized
/// by restarting the system at t0 from q. `t0` must be a grid point.
///
template <typename Scalar>
EnergyBoundReport observability_energy_check(const BilinearSystem<Scalar>& sys, const ControlSignal& u,
                                             const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& q, double mu,
                                             double t0, double rel_slack = 1e-6, const SimulationOptions& opts = {})
{
    const TimeGrid& grid = u.grid();
    if (!(t0 < grid.end()))
        throw ShapeError("observability check needs t0 < T");
    const Index first = grid.index_of(t0);
    if (first < 0 || first >= grid.intervals())
        throw ShapeError("observability check needs t0 on the control grid");
    const ControlSignal tail = u.tail(first);
    const auto restarted = sys.with_initial_state(q);
    const auto states = simulate(restarted, tail, opts);
    const auto y = output(restarted, states);
    const Eigen::VectorXd energy = y.values.rowwise().squaredNorm().template cast<double>();
    EnergyBoundReport r;
    r.lhs = simpson(energy, grid.step());
    r.rhs = mu * std::exp(u.l2_norm_squared());
    r.holds = r.lhs <= r.rhs * (1.0 + rel_slack);
    return r;
}

} // namespace sigmor

#endif
