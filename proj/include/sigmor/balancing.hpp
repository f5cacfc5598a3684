#ifndef SIGMOR_BALANCING_HPP
#define SIGMOR_BALANCING_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <sigmor/bilinear.hpp>
#include <sigmor/errors.hpp>

namespace sigmor
{

struct BalanceOptions
{
    /// Gramian eigenvalues below clip * lambda_max are treated as zero.
    double clip = 1e-12;
    /// Hankel values below rank_tol * sigma_1 are outside the retained subspace.
    double rank_tol = 1e-7;
};

///
/// ### Balancing
///
/// Balancing transform T (rows: retained balanced coordinates), its right
/// inverse T_inv, and the Hankel singular values sigma (length n, descending,
/// zero-padded past the numerical rank of P and Q).
///
/// On the retained subspace T P T^T = T_inv^T Q T_inv = diag(sigma) and
/// T T_inv = I.
///
template <typename Scalar>
struct Balancing
{
    using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using VectorType = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    MatrixType transform;
    MatrixType inverse;
    VectorType sigma;
    Index rank_p = 0;
    Index rank_q = 0;

    Index dim() const noexcept { return sigma.size(); }
    Index effective_rank() const noexcept { return transform.rows(); }
    /// Gramians had numerically zero directions.
    bool rank_deficient() const noexcept { return effective_rank() < dim(); }
};

namespace detail
{

template <typename Matrix>
void require_symmetric(const Matrix& x, const char* name)
{
    const double scale = std::max(1.0, static_cast<double>(x.norm()));
    if (static_cast<double>((x - x.transpose()).norm()) > 1e-10 * scale)
        throw ShapeError(std::string("balance: ") + name + " is not symmetric");
}

/// Spectral square root L with L L^T = X restricted to eigenvalues above the clip level.
template <typename Matrix>
Matrix clipped_square_root(const Matrix& x, double clip, Index& rank)
{
    using Scalar = typename Matrix::Scalar;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(x);
    if (eig.info() != Eigen::Success)
        throw NumericalError("symmetric eigensolver failed");
    const auto& lambda = eig.eigenvalues(); // ascending
    const Index n = lambda.size();
    const Scalar top = std::max(Scalar(0), lambda(n - 1));
    const Scalar cut = static_cast<Scalar>(clip) * top;
    rank = 0;
    for (Index i = 0; i < n; ++i)
        if (lambda(i) > cut && lambda(i) > Scalar(0))
            ++rank;
    // largest eigenvalues first
    Matrix l(n, rank);
    for (Index k = 0; k < rank; ++k)
    {
        const Index src = n - 1 - k;
        l.col(k) = eig.eigenvectors().col(src) * std::sqrt(lambda(src));
    }
    return l;
}

} // namespace detail

///
/// Balancing transformation T = Sigma^{1/2} V^T L_P^{-1} with P = L_P L_P^T and
/// L_P^T Q L_P = V Sigma^2 V^T. Both square roots come from clipped symmetric
/// eigendecompositions; V and Sigma are read off the SVD of L_Q^T L_P, whose
/// right singular vectors and squared singular values are exactly the
/// eigenpairs of L_P^T Q L_P. T_inv = L_P V Sigma^{-1/2}.
///
template <typename Scalar>
Balancing<Scalar> balance(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& P,
                          const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& Q,
                          const BalanceOptions& opts = {})
{
    using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using VectorType = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    if (P.rows() != P.cols() || Q.rows() != Q.cols() || P.rows() != Q.rows())
        throw ShapeError("balance: P and Q must be square of equal size");
    detail::require_symmetric(P, "P");
    detail::require_symmetric(Q, "Q");
    const Index n = P.rows();

    Balancing<Scalar> out;
    const MatrixType lp = detail::clipped_square_root(P, opts.clip, out.rank_p);
    const MatrixType lq = detail::clipped_square_root(Q, opts.clip, out.rank_q);
    out.sigma = VectorType::Zero(n);
    if (out.rank_p == 0 || out.rank_q == 0)
    {
        out.transform.resize(0, n);
        out.inverse.resize(n, 0);
        return out;
    }

    Eigen::JacobiSVD<MatrixType> svd(lq.transpose() * lp, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VectorType s = svd.singularValues(); // descending
    out.sigma.head(s.size()) = s;

    Index keep = 0;
    while (keep < s.size() && s(keep) > static_cast<Scalar>(opts.rank_tol) * s(0))
        ++keep;

    const MatrixType v = svd.matrixV().leftCols(keep);
    const VectorType root = s.head(keep).cwiseSqrt();
    // L_P^+ = diag(1/lambda^{1/2}) U^T = (L_P^T L_P)^{-1} L_P^T, diagonal Gram matrix
    const VectorType col_norms2 = lp.colwise().squaredNorm().transpose();
    const MatrixType lp_pinv = col_norms2.cwiseInverse().asDiagonal() * lp.transpose();
    out.transform = root.asDiagonal() * (v.transpose() * lp_pinv);
    out.inverse = (lp * v) * root.cwiseInverse().asDiagonal();
    return out;
}

///
/// Balanced truncation: keep the leading r balanced coordinates,
///   A_i -> T_r A_i T_inv_r,  S_0 -> T_r S_0,  C -> C T_inv_r.
///
template <typename Scalar>
BilinearSystem<Scalar> reduce(const BilinearSystem<Scalar>& sys, const Balancing<Scalar>& bal, Index r)
{
    using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    if (bal.dim() != sys.dim())
        throw ShapeError("balancing does not match the system dimension");
    if (r < 1)
        throw ShapeError("reduced order must be at least 1");
    if (r > bal.effective_rank())
        throw RankDeficientError("reduced order " + std::to_string(r) + " exceeds the effective rank " +
                                     std::to_string(bal.effective_rank()) + " of the Gramians",
                                 static_cast<long>(bal.effective_rank()));
    const MatrixType t = bal.transform.topRows(r);
    const MatrixType ti = bal.inverse.leftCols(r);

    std::vector<Generator<Scalar>> gens;
    gens.reserve(sys.generators().size());
    for (const auto& a : sys.generators())
    {
        MatrixType ati = a * ti;
        gens.emplace_back(MatrixType(t * ati));
    }
    std::optional<MatrixType> c;
    if (sys.has_output())
        c = sys.output_matrix() * ti;
    return BilinearSystem<Scalar>(std::move(gens), MatrixType(t * sys.initial_basis()), sys.initial_coeffs(),
                                  std::move(c));
}

/// Deviation of the balancing identities on the retained subspace, as
/// relative Frobenius errors of T P T^T and T_inv^T Q T_inv against diag(sigma).
struct BalancingResidual
{
    double reachability = 0.0;
    double observability = 0.0;
    double inverse = 0.0; // |T T_inv - I|_max
};

template <typename Scalar>
BalancingResidual balancing_residual(const Balancing<Scalar>& bal,
                                     const std::type_identity_t<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>& P,
                                     const std::type_identity_t<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>& Q)
{
    using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const Index k = bal.effective_rank();
    BalancingResidual r;
    if (k == 0)
        return r;
    const MatrixType sig = bal.sigma.head(k).asDiagonal();
    const double scale = static_cast<double>(bal.sigma.head(k).norm());
    r.reachability = static_cast<double>((bal.transform * P * bal.transform.transpose() - sig).norm()) / scale;
    r.observability = static_cast<double>((bal.inverse.transpose() * Q * bal.inverse - sig).norm()) / scale;
    r.inverse = static_cast<double>(
        (bal.transform * bal.inverse - MatrixType::Identity(k, k)).template lpNorm<Eigen::Infinity>());
    return r;
}

/// One row of the Hankel report: (index, sigma_i, sigma_i / sigma_1).
struct HankelRow
{
    Index index;
    double value;
    double ratio;
};

template <typename Derived>
std::vector<HankelRow> hankel_report(const Eigen::MatrixBase<Derived>& sigma)
{
    if (sigma.size() == 0)
        throw ShapeError("hankel_report: empty spectrum");
    std::vector<HankelRow> rows;
    rows.reserve(static_cast<std::size_t>(sigma.size()));
    const double first = static_cast<double>(sigma(0));
    for (Index i = 0; i < sigma.size(); ++i)
    {
        const double v = static_cast<double>(sigma(i));
        rows.push_back({i + 1, v, first > 0 ? v / first : 0.0});
    }
    return rows;
}

} // namespace sigmor

#endif
