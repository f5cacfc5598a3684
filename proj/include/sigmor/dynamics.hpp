#ifndef SIGMOR_DYNAMICS_HPP
#define SIGMOR_DYNAMICS_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <sigmor/control.hpp>
#include <sigmor/trajectory.hpp>

namespace sigmor
{

///
/// Control-affine nonlinear system
///
///   dx/dt = f_0(x) + sum_i f_i(x) u_i(t),   x(0) = x_0,   y = c(x),
///
/// with the drift split as f_0(x) = L x + g(x): `linear` holds the (possibly
/// stiff) linear part L, `reaction` the remainder g.
///
struct NonlinearSystem
{
    using Field = std::function<void(const Eigen::VectorXd&, Eigen::Ref<Eigen::VectorXd>)>;
    using Observation = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

    Eigen::SparseMatrix<double> linear;
    Field reaction;
    std::vector<Field> input_fields;
    Observation output;
    Eigen::VectorXd x0;
    Index outputs = 1;
    /// Bound on the Jacobian of g and of the input terms over the operating
    /// range; added to the Gershgorin bound of L when picking RK4 sub-steps.
    double reaction_stiffness = 1.0;

    Index state_dim() const noexcept { return x0.size(); }
    Index inputs() const noexcept { return static_cast<Index>(input_fields.size()); }

    /// f_0(x)
    Eigen::VectorXd drift(const Eigen::VectorXd& x) const;
    /// f_i(x), i = 1..m
    Eigen::VectorXd input_field(Index i, const Eigen::VectorXd& x) const;
    /// f_0(x) + sum_i f_i(x) u_i
    void vector_field(const Eigen::VectorXd& x, const Eigen::VectorXd& u, Eigen::VectorXd& dx) const;

    /// Throws ShapeError if the pieces do not fit together.
    void validate() const;
};

/// Finite-difference reaction-diffusion benchmark on (0,1) with Dirichlet
/// boundaries: d interior nodes, m = 2 inputs, y = exp(mean(x)).
NonlinearSystem make_reaction_diffusion(Index d);

/// Single-input system with f_0(x) = A x - x.^3 and f_1(x) = x.^2, y = x.
/// `x0` defaults to 0.5 in every component.
NonlinearSystem make_cubic_example(Index d, const Eigen::MatrixXd& a, Eigen::VectorXd x0 = Eigen::VectorXd());

enum class Integrator
{
    automatic, // explicit RK4 unless it needs more than `lawson_threshold` sub-steps
    explicit_rk4,
    lawson_rk4 // RK4 on the integrating-factor form, exact in the linear part
};

///
/// Precomputed exp(L h/2) for the Lawson scheme. Computing it is O(d^3), so
/// share one instance across simulations that use the same grid.
///
struct LawsonPropagator
{
    double step = 0.0;
    Eigen::MatrixXd half_step; // exp(L step / 2)
};

std::shared_ptr<const LawsonPropagator> make_lawson_propagator(const NonlinearSystem& sys, double step);

struct NonlinearOptions
{
    Integrator method = Integrator::automatic;
    Index substeps = 0;        // 0: pick from the stiffness estimate
    double stability = 2.5;    // target |lambda| * dt for explicit RK4
    Index lawson_threshold = 64;
    double divergence_bound = 1e12;
    std::shared_ptr<const LawsonPropagator> propagator;
};

/// Number of explicit RK4 sub-steps per grid cell the stiffness estimate asks for.
Index explicit_substeps(const NonlinearSystem& sys, double step, double stability = 2.5);

/// State trajectory on the control's grid.
Trajectoryd simulate_nonlinear(const NonlinearSystem& sys, const ControlSignal& u, const NonlinearOptions& opts = {});

/// Output trajectory y(t) = c(x(t)) on the control's grid, without storing states.
Trajectoryd simulate_output(const NonlinearSystem& sys, const ControlSignal& u, const NonlinearOptions& opts = {});

/// (cos k t, sin k t) on the grid.
ControlSignal test_control(int k, const TimeGrid& grid);

///
/// White-noise realization c_w dW/dt: on cell j the value is
/// c_w * Delta W_j / Delta t with Delta W_j ~ N(0, Delta t I_m) drawn from a
/// counter-based stream keyed by (seed, j, channel).
///
ControlSignal training_control(std::uint64_t seed, double c_w, const TimeGrid& grid, Index m);

/// sup_t |x(t;u) - x(t;v)| / |u - v|_{L2}.
double lipschitz_probe(const NonlinearSystem& sys, const ControlSignal& u, const ControlSignal& v,
                       const NonlinearOptions& opts = {});

} // namespace sigmor

#endif
