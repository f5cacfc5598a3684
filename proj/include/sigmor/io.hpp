#ifndef SIGMOR_IO_HPP
#define SIGMOR_IO_HPP

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include <sigmor/balancing.hpp>
#include <sigmor/bilinear.hpp>
#include <sigmor/trajectory.hpp>

namespace sigmor
{

/// Shortest round-trip-safe decimal form used everywhere: 17 significant digits.
std::string format_double(double x);

struct CsvTable
{
    std::vector<std::string> header;
    Eigen::MatrixXd values;
};

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const Eigen::Ref<const Eigen::MatrixXd>& values);
CsvTable read_csv(const std::filesystem::path& path, bool has_header = true);

/// Column 0 is time, the remaining columns the trajectory values.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectoryd& traj, const std::string& prefix = "x");
Trajectoryd read_trajectory_csv(const std::filesystem::path& path);

///
/// Text container for a bilinear system:
///
///     sigmor-bilinear 1
///     dim <n> inputs <m> outputs <p> initial_columns <k>
///     generator <i> sparse <nnz>        followed by nnz lines "row col value"
///     generator <i> dense               followed by n rows of n values
///     initial_basis                     n rows of k values
///     initial_coeffs                    k values
///     output                            p rows of n values (absent when p = 0)
///
void write_system(std::ostream& os, const BilinearSystemd& sys);
BilinearSystemd read_system(std::istream& is);
void write_system(const std::filesystem::path& path, const BilinearSystemd& sys);
BilinearSystemd read_system(const std::filesystem::path& path);

/// Learned output matrix with its signature shape. The CSV starts with the
/// row "n,p,N,m" followed by p rows of n entries.
struct OutputMatrixFile
{
    Eigen::MatrixXd C;
    Index order = 0;
    Index inputs = 0;
};

void write_output_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& c, Index order, Index inputs);
OutputMatrixFile read_output_matrix(const std::filesystem::path& path);

/// Two-column (index, value) spectrum, 1-based index.
void write_spectrum_csv(const std::filesystem::path& path, const Eigen::Ref<const Eigen::VectorXd>& values);

void write_hankel_csv(const std::filesystem::path& path, const std::vector<HankelRow>& rows);

} // namespace sigmor

#endif
