#ifndef SIGMOR_BILINEAR_HPP
#define SIGMOR_BILINEAR_HPP

#include <cmath>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <sigmor/control.hpp>
#include <sigmor/errors.hpp>
#include <sigmor/trajectory.hpp>

namespace sigmor
{

///
/// A square coefficient matrix of a bilinear system, held sparse (the signature
/// generators, a handful of unit entries) or dense (reduced models).
///
template <typename Scalar>
class Generator
{
public:
    using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using SparseType = Eigen::SparseMatrix<Scalar>;

    Generator() : m_store(MatrixType()) {}
    Generator(SparseType a) : m_store(std::move(a)) { check_square(); }
    Generator(MatrixType a) : m_store(std::move(a)) { check_square(); }

    bool is_sparse() const noexcept { return std::holds_alternative<SparseType>(m_store); }
    const SparseType& sparse() const { return std::get<SparseType>(m_store); }
    const MatrixType& dense_ref() const { return std::get<MatrixType>(m_store); }

    Index size() const
    {
        return std::visit([](const auto& a) { return static_cast<Index>(a.rows()); }, m_store);
    }

    MatrixType dense() const
    {
        if (is_sparse())
            return MatrixType(sparse());
        return dense_ref();
    }

    Index nonzeros() const
    {
        if (is_sparse())
        {
            Index count = 0;
            const auto& a = sparse();
            for (Index k = 0; k < a.outerSize(); ++k)
                for (typename SparseType::InnerIterator it(a, k); it; ++it)
                    count += it.value() != Scalar(0);
            return count;
        }
        return (dense_ref().array() != Scalar(0)).count();
    }

    /// A * x
    template <typename Derived>
    MatrixType operator*(const Eigen::MatrixBase<Derived>& x) const
    {
        return std::visit([&](const auto& a) -> MatrixType { return a * x; }, m_store);
    }

    /// A^T * x
    template <typename Derived>
    MatrixType transpose_times(const Eigen::MatrixBase<Derived>& x) const
    {
        return std::visit([&](const auto& a) -> MatrixType { return a.transpose() * x; }, m_store);
    }

    /// y += alpha * A * x
    template <typename DerivedX, typename DerivedY>
    void add_times(const Eigen::MatrixBase<DerivedX>& x, Scalar alpha, Eigen::MatrixBase<DerivedY>& y) const
    {
        std::visit([&](const auto& a) { y.noalias() += alpha * (a * x); }, m_store);
    }

private:
    void check_square() const
    {
        std::visit(
            [](const auto& a) {
                if (a.rows() != a.cols())
                    throw ShapeError("generator matrices must be square");
            },
            m_store);
    }

    std::variant<SparseType, MatrixType> m_store;
};

///
/// Bilinear control system
///
///   dS/dt = A_0 S + sum_i u_i(t) A_i S,   S(0) = S_0 v,   y_S = C S.
///
/// A single initial state is the case S_0 = s_0, v = 1.
///
template <typename Scalar>
class BilinearSystem
{
public:
    using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using VectorType = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using GeneratorType = Generator<Scalar>;

    BilinearSystem() = default;

    BilinearSystem(std::vector<GeneratorType> generators, MatrixType initial_basis, VectorType initial_coeffs,
                   std::optional<MatrixType> output = std::nullopt)
        : m_generators(std::move(generators)), m_initial_basis(std::move(initial_basis)),
          m_initial_coeffs(std::move(initial_coeffs))
    {
        if (m_generators.empty())
            throw ShapeError("bilinear system needs at least the drift matrix A_0");
        const Index n = m_generators.front().size();
        for (const auto& a : m_generators)
            if (a.size() != n)
                throw ShapeError("all generator matrices must have the same dimension");
        if (m_initial_basis.rows() != n)
            throw ShapeError("initial basis S_0 has " + std::to_string(m_initial_basis.rows()) +
                             " rows, state dimension is " + std::to_string(n));
        if (m_initial_basis.cols() != m_initial_coeffs.size())
            throw ShapeError("initial coefficient vector does not match the columns of S_0");
        if (output)
            set_output_matrix(std::move(*output));
    }

    /// Convenience: single initial state s0 (S_0 = s0, v = 1).
    BilinearSystem(std::vector<GeneratorType> generators, const VectorType& s0,
                   std::optional<MatrixType> output = std::nullopt)
        : BilinearSystem(std::move(generators), MatrixType(s0), VectorType::Ones(1), std::move(output))
    {
    }

    Index dim() const noexcept { return m_generators.empty() ? 0 : m_generators.front().size(); }
    Index inputs() const noexcept { return static_cast<Index>(m_generators.size()) - 1; }
    Index outputs() const noexcept { return m_output ? m_output->rows() : 0; }

    const std::vector<GeneratorType>& generators() const noexcept { return m_generators; }
    const GeneratorType& generator(Index i) const { return m_generators.at(static_cast<std::size_t>(i)); }

    const MatrixType& initial_basis() const noexcept { return m_initial_basis; }
    const VectorType& initial_coeffs() const noexcept { return m_initial_coeffs; }
    VectorType initial_state() const { return m_initial_basis * m_initial_coeffs; }

    bool has_output() const noexcept { return m_output.has_value(); }
    const MatrixType& output_matrix() const
    {
        if (!m_output)
            throw ShapeError("unlearned system: output matrix C is absent");
        return *m_output;
    }

    void set_output_matrix(MatrixType c)
    {
        if (c.cols() != dim())
            throw ShapeError("output matrix C has " + std::to_string(c.cols()) + " columns, state dimension is " +
                             std::to_string(dim()));
        m_output = std::move(c);
    }

    /// Copy of this system started from a different single state.
    BilinearSystem with_initial_state(const VectorType& s0) const
    {
        BilinearSystem out = *this;
        if (s0.size() != dim())
            throw ShapeError("initial state has wrong dimension");
        out.m_initial_basis = s0;
        out.m_initial_coeffs = VectorType::Ones(1);
        return out;
    }

    /// dS = A_0 S + sum_i u_i A_i S
    template <typename DerivedS, typename DerivedU, typename DerivedD>
    void derivative(const Eigen::MatrixBase<DerivedS>& s, const Eigen::MatrixBase<DerivedU>& u,
                    Eigen::MatrixBase<DerivedD>& ds) const
    {
        ds.setZero();
        m_generators[0].add_times(s, Scalar(1), ds);
        for (Index i = 0; i < inputs(); ++i)
        {
            const Scalar ui = static_cast<Scalar>(u(i));
            if (ui != Scalar(0))
                m_generators[static_cast<std::size_t>(i + 1)].add_times(s, ui, ds);
        }
    }

private:
    std::vector<GeneratorType> m_generators;
    MatrixType m_initial_basis;
    VectorType m_initial_coeffs;
    std::optional<MatrixType> m_output;
};

using BilinearSystemd = BilinearSystem<double>;

struct SimulationOptions
{
    Index substeps = 1;               // RK4 steps per grid cell
    double divergence_bound = 1e12;   // abort when the state norm exceeds this
};

namespace detail
{

template <typename Derived>
void guard_state(const Eigen::MatrixBase<Derived>& s, double bound, Index step, double t)
{
    const double norm = static_cast<double>(s.norm());
    if (!std::isfinite(norm) || norm > bound)
        throw DivergenceError("integration diverged at step " + std::to_string(step) + " (t = " +
                                  std::to_string(t) + ", |state| = " + std::to_string(norm) + ")",
                              static_cast<long>(step), t);
}

/// Classical RK4 over one grid cell with inputs at left, middle, right.
/// `deriv(state, input, out)` evaluates the vector field.
template <typename Vector, typename Deriv>
void rk4_cell(Vector& s, const Eigen::VectorXd& u0, const Eigen::VectorXd& uh, const Eigen::VectorXd& u1, double h,
              Index substeps, Deriv&& deriv, Vector& k1, Vector& k2, Vector& k3, Vector& k4, Vector& tmp)
{
    using Scalar = typename Vector::Scalar;
    const double dt = h / static_cast<double>(substeps);
    Eigen::VectorXd ua(u0.size()), um(u0.size()), ub(u0.size());
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
            // quadratic through (0,u0), (1/2,uh), (1,u1) evaluated on the sub-step
            const auto at = [&](double x) -> Eigen::VectorXd {
                return u0 * (2.0 * (x - 0.5) * (x - 1.0)) + uh * (-4.0 * x * (x - 1.0)) + u1 * (2.0 * x * (x - 0.5));
            };
            const double xa = static_cast<double>(q) / static_cast<double>(substeps);
            const double xb = static_cast<double>(q + 1) / static_cast<double>(substeps);
            ua = at(xa);
            um = at(0.5 * (xa + xb));
            ub = at(xb);
        }
        const Scalar sdt = static_cast<Scalar>(dt);
        deriv(s, ua, k1);
        tmp = s + (sdt / 2) * k1;
        deriv(tmp, um, k2);
        tmp = s + (sdt / 2) * k2;
        deriv(tmp, um, k3);
        tmp = s + sdt * k3;
        deriv(tmp, ub, k4);
        s += (sdt / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
    }
}

} // namespace detail

///
/// Integrate the state equation on the control's grid with fixed-step RK4.
///
template <typename Scalar>
Trajectory<Scalar> simulate(const BilinearSystem<Scalar>& sys, const ControlSignal& u,
                            const SimulationOptions& opts = {})
{
    using VectorType = typename BilinearSystem<Scalar>::VectorType;
    if (u.inputs() != sys.inputs())
        throw ShapeError("control has " + std::to_string(u.inputs()) + " channels, system expects " +
                         std::to_string(sys.inputs()));
    if (opts.substeps < 1)
        throw ShapeError("substeps must be positive");
    const TimeGrid& grid = u.grid();
    const Index n = sys.dim();
    typename Trajectory<Scalar>::MatrixType values(grid.points(), n);

    VectorType s = sys.initial_state();
    VectorType k1(n), k2(n), k3(n), k4(n), tmp(n);
    Eigen::VectorXd u0(u.inputs()), uh(u.inputs()), u1(u.inputs());
    const auto deriv = [&](const VectorType& x, const Eigen::VectorXd& in, VectorType& dx) {
        sys.derivative(x, in, dx);
    };

    values.row(0) = s.transpose();
    for (Index j = 0; j < grid.intervals(); ++j)
    {
        u.step_inputs(j, u0, uh, u1);
        detail::rk4_cell(s, u0, uh, u1, grid.step(), opts.substeps, deriv, k1, k2, k3, k4, tmp);
        detail::guard_state(s, opts.divergence_bound, j + 1, grid[j + 1]);
        values.row(j + 1) = s.transpose();
    }
    return Trajectory<Scalar>(grid, std::move(values));
}

/// y_S = C S, row by row.
template <typename Scalar>
Trajectory<Scalar> output(const BilinearSystem<Scalar>& sys, const Trajectory<Scalar>& states)
{
    const auto& c = sys.output_matrix();
    if (states.dim() != sys.dim())
        throw ShapeError("state trajectory does not match the system dimension");
    return Trajectory<Scalar>(states.grid, states.values * c.transpose());
}

///
/// State-space transformation S_b = T S:
/// A_i -> T A_i T^{-1}, S_0 -> T S_0, C -> C T^{-1}. Generators come back dense.
///
template <typename Scalar>
BilinearSystem<Scalar> transform(const BilinearSystem<Scalar>& sys,
                                 const std::type_identity_t<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>& t_mat,
                                 const std::type_identity_t<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>& t_inv,
                                 double tol = 1e-10)
{
    using MatrixType = typename BilinearSystem<Scalar>::MatrixType;
    const Index n = sys.dim();
    if (t_mat.rows() != n || t_mat.cols() != n || t_inv.rows() != n || t_inv.cols() != n)
        throw ShapeError("transformation must be n x n");
    const double residual =
        static_cast<double>((t_mat * t_inv - MatrixType::Identity(n, n)).template lpNorm<Eigen::Infinity>());
    if (!(residual <= tol))
        throw NumericalError("ill-conditioned transformation: |T T_inv - I| = " + std::to_string(residual));

    std::vector<Generator<Scalar>> gens;
    gens.reserve(sys.generators().size());
    for (const auto& a : sys.generators())
    {
        MatrixType at = a * t_inv;
        gens.emplace_back(MatrixType(t_mat * at));
    }
    std::optional<MatrixType> c;
    if (sys.has_output())
        c = sys.output_matrix() * t_inv;
    return BilinearSystem<Scalar>(std::move(gens), MatrixType(t_mat * sys.initial_basis()), sys.initial_coeffs(),
                                  std::move(c));
}

} // namespace sigmor

#endif
