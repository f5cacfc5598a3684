#ifndef SIGMOR_SIGNATURE_HPP
#define SIGMOR_SIGNATURE_HPP

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <sigmor/bilinear.hpp>
#include <sigmor/control.hpp>
#include <sigmor/errors.hpp>
#include <sigmor/trajectory.hpp>

namespace sigmor
{

///
/// Number of entries of a truncated signature with `channels` channels and
/// levels 0..order, i.e. sum_k channels^k. Throws std::overflow_error when
/// the result does not fit in Index.
///
inline Index signature_dimension(Index channels, Index order)
{
    if (channels < 1 || order < 0)
        throw ShapeError("signature_dimension needs channels >= 1 and order >= 0");
    constexpr Index max = std::numeric_limits<Index>::max();
    Index total = 0;
    Index level_size = 1;
    for (Index k = 0; k <= order; ++k)
    {
        if (total > max - level_size)
            throw std::overflow_error("signature dimension too large");
        total += level_size;
        if (k < order)
        {
            if (level_size > max / channels)
                throw std::overflow_error("signature dimension too large");
            level_size *= channels;
        }
    }
    return total;
}

/// Offset of the first level-k entry in the stacked signature vector.
inline Index level_offset(Index channels, Index k)
{
    return k == 0 ? 0 : signature_dimension(channels, k - 1);
}

inline Index level_size(Index channels, Index k)
{
    Index s = 1;
    for (Index i = 0; i < k; ++i)
        s *= channels;
    return s;
}

///
/// A word (i_1, ..., i_k) over the channel alphabet and its position in the
/// stacked signature. Levels are stored in increasing order, and words inside a
/// level lexicographically, which is the Kronecker-product order.
///
struct WordIndex
{
    Index level = 0;
    std::vector<int> letters;
    Index flat_offset = 0;

    static WordIndex from_letters(std::vector<int> letters, Index channels)
    {
        WordIndex w;
        w.level = static_cast<Index>(letters.size());
        Index within = 0;
        for (int l : letters)
        {
            if (l < 0 || l >= channels)
                throw ShapeError("word letter " + std::to_string(l) + " outside channel range");
            within = within * channels + l;
        }
        w.flat_offset = level_offset(channels, w.level) + within;
        w.letters = std::move(letters);
        return w;
    }

    static WordIndex from_offset(Index offset, Index channels)
    {
        if (offset < 0)
            throw ShapeError("negative word offset");
        Index k = 0;
        while (level_offset(channels, k + 1) <= offset)
            ++k;
        Index within = offset - level_offset(channels, k);
        std::vector<int> letters(static_cast<std::size_t>(k));
        for (Index j = k - 1; j >= 0; --j)
        {
            letters[static_cast<std::size_t>(j)] = static_cast<int>(within % channels);
            within /= channels;
        }
        WordIndex w;
        w.level = k;
        w.letters = std::move(letters);
        w.flat_offset = offset;
        return w;
    }
};

///
/// Generator matrices A_0, ..., A_{channels-1} of the linear equation
/// satisfied by the truncated signature. A_i sends the entry of word w to the
/// entry of word (w, i); every matrix holds (channels^order - 1)/(channels - 1)
/// unit entries and has a zero first row and zero top-level columns.
///
template <typename Scalar = double>
std::vector<Eigen::SparseMatrix<Scalar>> build_generator_matrices(Index channels, Index order)
{
    if (channels < 1 || order < 1)
        throw ShapeError("generator matrices need channels >= 1 and order >= 1");
    const Index n = signature_dimension(channels, order);
    const Index n_tilde = signature_dimension(channels, order - 1);
    std::vector<Eigen::SparseMatrix<Scalar>> out;
    out.reserve(static_cast<std::size_t>(channels));
    for (Index i = 0; i < channels; ++i)
    {
        std::vector<Eigen::Triplet<Scalar>> entries;
        entries.reserve(static_cast<std::size_t>(n_tilde));
        for (Index col = 0; col < n_tilde; ++col)
            entries.emplace_back(1 + col * channels + i, col, Scalar(1));
        Eigen::SparseMatrix<Scalar> a(n, n);
        a.setFromTriplets(entries.begin(), entries.end());
        out.push_back(std::move(a));
    }
    return out;
}

///
/// Truncated signature as a flat vector; entry 0 is the level-0 term 1.
///
template <typename Scalar>
class SignatureVector
{
public:
    using VectorType = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    SignatureVector(Index channels, Index order, VectorType data)
        : m_channels(channels), m_order(order), m_data(std::move(data))
    {
        if (m_data.size() != signature_dimension(channels, order))
            throw ShapeError("signature vector length does not match channels/order");
    }

    /// The signature of a constant path: (1, 0, ..., 0).
    static SignatureVector trivial(Index channels, Index order)
    {
        VectorType d = VectorType::Zero(signature_dimension(channels, order));
        d(0) = Scalar(1);
        return SignatureVector(channels, order, std::move(d));
    }

    Index channels() const noexcept { return m_channels; }
    Index order() const noexcept { return m_order; }
    const VectorType& data() const noexcept { return m_data; }

    auto level(Index k) const { return m_data.segment(level_offset(m_channels, k), level_size(m_channels, k)); }

private:
    Index m_channels;
    Index m_order;
    VectorType m_data;
};

///
/// Chen's identity for truncated signatures: level k of the result is
/// sum_j level_j(a) (x) level_{k-j}(b).
///
template <typename Scalar>
SignatureVector<Scalar> chen_concatenate(const SignatureVector<Scalar>& a, const SignatureVector<Scalar>& b)
{
    if (a.channels() != b.channels() || a.order() != b.order())
        throw ShapeError("chen_concatenate: signatures differ in channels or order");
    const Index ch = a.channels();
    const Index order = a.order();
    typename SignatureVector<Scalar>::VectorType out =
        SignatureVector<Scalar>::VectorType::Zero(signature_dimension(ch, order));
    for (Index k = 0; k <= order; ++k)
    {
        auto dst = out.segment(level_offset(ch, k), level_size(ch, k));
        for (Index j = 0; j <= k; ++j)
        {
            const auto la = a.level(j);
            const auto lb = b.level(k - j);
            for (Index p = 0; p < la.size(); ++p)
                dst.segment(p * lb.size(), lb.size()) += la(p) * lb;
        }
    }
    return SignatureVector<Scalar>(ch, order, std::move(out));
}

///
/// Right-hand side of the signature equation written as the level recursion
/// d/dt X^{(k+1)} = X^{(k)} (x) d/dt Xhat: the entry of word (w, i) receives
/// entry w times the rate of channel i.
///
template <typename DerivedS, typename DerivedU, typename DerivedD>
void signature_derivative(Index channels, Index order, const Eigen::MatrixBase<DerivedS>& s,
                          const Eigen::MatrixBase<DerivedU>& rates, Eigen::MatrixBase<DerivedD>& ds)
{
    const Index n_tilde = signature_dimension(channels, order - 1);
    ds(0) = 0;
    for (Index col = 0; col < n_tilde; ++col)
    {
        const auto value = s(col);
        for (Index i = 0; i < channels; ++i)
            ds(1 + col * channels + i) = value * rates(i);
    }
}

///
/// Truncated signature S^N_{0,t}(Uhat) of the time-augmented integrated
/// control Uhat = (t, U(t)) at every grid point, with RK4 on the level
/// recursion. Channel 0 is time.
///
inline Trajectoryd compute_signature(const ControlSignal& u, Index order, const TimeGrid& grid)
{
    if (!(grid == u.grid()))
        throw ShapeError("compute_signature: control is not sampled on the requested grid");
    if (order < 1)
        throw ShapeError("compute_signature needs order >= 1");
    const Index channels = u.inputs() + 1;
    const Index n = signature_dimension(channels, order);

    Eigen::MatrixXd values(grid.points(), n);
    Eigen::VectorXd s = Eigen::VectorXd::Zero(n);
    s(0) = 1.0;
    Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), tmp(n);
    Eigen::VectorXd u0(u.inputs()), uh(u.inputs()), u1(u.inputs());
    Eigen::VectorXd rates(channels);
    rates(0) = 1.0;
    const auto deriv = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& in, Eigen::VectorXd& dx) {
        rates.tail(in.size()) = in;
        signature_derivative(channels, order, x, rates, dx);
    };

    values.row(0) = s.transpose();
    for (Index j = 0; j < grid.intervals(); ++j)
    {
        u.step_inputs(j, u0, uh, u1);
        detail::rk4_cell(s, u0, uh, u1, grid.step(), 1, deriv, k1, k2, k3, k4, tmp);
        detail::guard_state(s, 1e12, j + 1, grid[j + 1]);
        values.row(j + 1) = s.transpose();
    }
    return Trajectoryd(grid, std::move(values));
}

inline Trajectoryd compute_signature(const ControlSignal& u, Index order)
{
    return compute_signature(u, order, u.grid());
}

///
/// Iterated integral of one word over the simplex 0 < s_1 < ... < s_k < horizon,
/// evaluated by nested cumulative trapezoid sums on a grid that is doubled
/// until two successive values agree to `rel_tol`. Independent of the ODE path.
///
inline double quadrature_oracle_signature(const ControlSignal& u, const WordIndex& word, double horizon,
                                          double rel_tol = 1e-9, int max_refinements = 16)
{
    if (word.level == 0)
        return 1.0;
    if (word.level > 4)
        throw ShapeError("quadrature oracle supports words up to level 4");
    for (int l : word.letters)
        if (l < 0 || l > u.inputs())
            throw ShapeError("word letter outside channel range");

    const auto evaluate = [&](Index intervals) {
        const double h = horizon / static_cast<double>(intervals);
        Eigen::MatrixXd rates(intervals + 1, u.inputs() + 1);
        Eigen::VectorXd row(u.inputs());
        for (Index i = 0; i <= intervals; ++i)
        {
            u.value(static_cast<double>(i) * h, row);
            rates(i, 0) = 1.0;
            rates.row(i).tail(u.inputs()) = row.transpose();
        }
        Eigen::VectorXd f = Eigen::VectorXd::Ones(intervals + 1);
        Eigen::VectorXd g(intervals + 1);
        for (int letter : word.letters)
        {
            g(0) = 0.0;
            for (Index i = 1; i <= intervals; ++i)
                g(i) = g(i - 1) + 0.5 * h * (f(i - 1) * rates(i - 1, letter) + f(i) * rates(i, letter));
            f.swap(g);
        }
        return f(intervals);
    };

    Index intervals = 32;
    double previous = evaluate(intervals);
    for (int r = 0; r < max_refinements; ++r)
    {
        intervals *= 2;
        const double current = evaluate(intervals);
        if (std::abs(current - previous) <= rel_tol * std::abs(current) + 1e-15)
            return current;
        previous = current;
    }
    throw NumericalError("quadrature oracle did not converge for word at offset " + std::to_string(word.flat_offset));
}

///
/// The universal bilinear model: generators of the signature equation for
/// m inputs plus time, initial state e_1, and (after learning) the output map C.
///
struct SignatureSystem
{
    Index inputs = 0;
    Index order = 0;
    BilinearSystemd system;

    Index channels() const noexcept { return inputs + 1; }
    Index dim() const noexcept { return system.dim(); }
};

inline SignatureSystem make_signature_system(Index inputs, Index order,
                                             std::optional<Eigen::MatrixXd> output = std::nullopt)
{
    if (inputs < 0)
        throw ShapeError("negative input count");
    const Index channels = inputs + 1;
    auto mats = build_generator_matrices<double>(channels, order);
    std::vector<Generator<double>> gens;
    gens.reserve(mats.size());
    for (auto& a : mats)
        gens.emplace_back(std::move(a));
    const Index n = signature_dimension(channels, order);
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(n);
    e1(0) = 1.0;
    return SignatureSystem{inputs, order, BilinearSystemd(std::move(gens), e1, std::move(output))};
}

} // namespace sigmor

#endif
