#ifndef SIGMOR_TESTS_SUPPORT_HPP
#define SIGMOR_TESTS_SUPPORT_HPP

#include <cmath>
#include <random>

#include <sigmor/control.hpp>

namespace testing_support
{

/// Random trigonometric control with m inputs, known in closed form.
inline sigmor::ControlSignal random_smooth_control(std::mt19937_64& rng, const sigmor::TimeGrid& grid, Eigen::Index m,
                                                   double scale = 1.0)
{
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
    Eigen::MatrixXd amp(m, 4);
    Eigen::MatrixXd ph(m, 4);
    for (Eigen::Index i = 0; i < m; ++i)
        for (int j = 0; j < 4; ++j)
        {
            amp(i, j) = scale * normal(rng) / (1.0 + j);
            ph(i, j) = phase(rng);
        }
    return sigmor::ControlSignal(grid, m, [amp, ph](double t, Eigen::Ref<Eigen::VectorXd> out) {
        for (Eigen::Index i = 0; i < amp.rows(); ++i)
        {
            out(i) = amp(i, 0);
            for (int j = 1; j < 4; ++j)
                out(i) += amp(i, j) * std::cos(2.0 * M_PI * j * t + ph(i, j));
        }
    });
}

inline double max_rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b)
{
    return (a - b).norm() / std::max(b.norm(), 1e-300);
}

} // namespace testing_support

#endif
