#include <sigmor/io.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include <sigmor/errors.hpp>

namespace sigmor
{

std::string format_double(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace
{

std::ofstream open_out(const std::filesystem::path& path)
{
    if (path.has_parent_path())
    {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec)
            throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw IoError("cannot open " + path.string() + " for writing");
    return os;
}

std::ifstream open_in(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw IoError("cannot open " + path.string());
    return is;
}

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, sep))
        out.push_back(cell);
    if (!line.empty() && line.back() == sep)
        out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const std::string& where)
{
    try
    {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        while (used < s.size() && (s[used] == ' ' || s[used] == '\r'))
            ++used;
        if (used != s.size())
            throw IoError("trailing characters");
        return v;
    }
    catch (const std::exception&)
    {
        throw IoError("malformed number '" + s + "' in " + where);
    }
}

void write_row(std::ostream& os, const Eigen::Ref<const Eigen::RowVectorXd>& row, char sep)
{
    for (Index j = 0; j < row.size(); ++j)
    {
        if (j)
            os << sep;
        os << format_double(row(j));
    }
    os << '\n';
}

template <typename T>
T expect(std::istream& is, const char* what)
{
    T v;
    if (!(is >> v))
        throw IoError(std::string("system file: expected ") + what);
    return v;
}

void expect_word(std::istream& is, const std::string& word)
{
    std::string got;
    if (!(is >> got) || got != word)
        throw IoError("system file: expected '" + word + "', got '" + got + "'");
}

Eigen::MatrixXd read_dense(std::istream& is, Index rows, Index cols)
{
    Eigen::MatrixXd m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j)
            m(i, j) = parse_double(expect<std::string>(is, "matrix entry"), "system file");
    return m;
}

void write_dense(std::ostream& os, const Eigen::MatrixXd& m)
{
    for (Index i = 0; i < m.rows(); ++i)
        write_row(os, m.row(i), ' ');
}

} // namespace

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const Eigen::Ref<const Eigen::MatrixXd>& values)
{
    if (!header.empty() && static_cast<Index>(header.size()) != values.cols())
        throw ShapeError("CSV header does not match the column count");
    auto os = open_out(path);
    for (std::size_t j = 0; j < header.size(); ++j)
        os << (j ? "," : "") << header[j];
    if (!header.empty())
        os << '\n';
    for (Index i = 0; i < values.rows(); ++i)
        write_row(os, values.row(i), ',');
    if (!os)
        throw IoError("write failed for " + path.string());
}

CsvTable read_csv(const std::filesystem::path& path, bool has_header)
{
    auto is = open_in(path);
    CsvTable table;
    std::string line;
    std::vector<std::vector<double>> rows;
    bool first = true;
    while (std::getline(is, line))
    {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (first && has_header)
        {
            table.header = split(line, ',');
            first = false;
            continue;
        }
        first = false;
        std::vector<double> row;
        for (const auto& cell : split(line, ','))
            row.push_back(parse_double(cell, path.string()));
        if (!rows.empty() && row.size() != rows.front().size())
            throw IoError("ragged CSV rows in " + path.string());
        rows.push_back(std::move(row));
    }
    const Index cols = rows.empty() ? static_cast<Index>(table.header.size()) : static_cast<Index>(rows.front().size());
    table.values.resize(static_cast<Index>(rows.size()), cols);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (Index j = 0; j < cols; ++j)
            table.values(static_cast<Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
    return table;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectoryd& traj, const std::string& prefix)
{
    std::vector<std::string> header{"time"};
    for (Index j = 0; j < traj.dim(); ++j)
        header.push_back(prefix + std::to_string(j + 1));
    Eigen::MatrixXd table(traj.points(), traj.dim() + 1);
    table.col(0) = traj.grid.times();
    table.rightCols(traj.dim()) = traj.values;
    write_csv(path, header, table);
}

Trajectoryd read_trajectory_csv(const std::filesystem::path& path)
{
    CsvTable t = read_csv(path);
    if (t.values.cols() < 2)
        throw IoError("trajectory CSV needs a time column and at least one value column");
    TimeGrid grid = TimeGrid::from_times(t.values.col(0));
    return Trajectoryd(grid, t.values.rightCols(t.values.cols() - 1));
}

void write_system(std::ostream& os, const BilinearSystemd& sys)
{
    os << "sigmor-bilinear 1\n";
    os << "dim " << sys.dim() << " inputs " << sys.inputs() << " outputs " << sys.outputs() << " initial_columns "
       << sys.initial_basis().cols() << '\n';
    for (Index i = 0; i < static_cast<Index>(sys.generators().size()); ++i)
    {
        const auto& g = sys.generator(i);
        if (g.is_sparse())
        {
            const auto& a = g.sparse();
            os << "generator " << i << " sparse " << a.nonZeros() << '\n';
            for (Index k = 0; k < a.outerSize(); ++k)
                for (Eigen::SparseMatrix<double>::InnerIterator it(a, k); it; ++it)
                    os << it.row() << ' ' << it.col() << ' ' << format_double(it.value()) << '\n';
        }
        else
        {
            os << "generator " << i << " dense\n";
            write_dense(os, g.dense_ref());
        }
    }
    os << "initial_basis\n";
    write_dense(os, sys.initial_basis());
    os << "initial_coeffs\n";
    write_row(os, sys.initial_coeffs().transpose(), ' ');
    if (sys.has_output())
    {
        os << "output\n";
        write_dense(os, sys.output_matrix());
    }
}

BilinearSystemd read_system(std::istream& is)
{
    expect_word(is, "sigmor-bilinear");
    if (expect<int>(is, "format version") != 1)
        throw IoError("system file: unsupported format version");
    expect_word(is, "dim");
    const auto n = expect<Index>(is, "dimension");
    expect_word(is, "inputs");
    const auto m = expect<Index>(is, "input count");
    expect_word(is, "outputs");
    const auto p = expect<Index>(is, "output count");
    expect_word(is, "initial_columns");
    const auto k = expect<Index>(is, "initial column count");
    if (n < 1 || m < 0 || p < 0 || k < 1)
        throw IoError("system file: invalid header");

    std::vector<Generator<double>> gens;
    for (Index i = 0; i <= m; ++i)
    {
        expect_word(is, "generator");
        if (expect<Index>(is, "generator index") != i)
            throw IoError("system file: generators out of order");
        const auto kind = expect<std::string>(is, "storage kind");
        if (kind == "sparse")
        {
            const auto nnz = expect<Index>(is, "nonzero count");
            std::vector<Eigen::Triplet<double>> entries;
            entries.reserve(static_cast<std::size_t>(nnz));
            for (Index e = 0; e < nnz; ++e)
            {
                const auto r = expect<Index>(is, "row index");
                const auto c = expect<Index>(is, "column index");
                const double v = parse_double(expect<std::string>(is, "value"), "system file");
                if (r < 0 || r >= n || c < 0 || c >= n)
                    throw IoError("system file: sparse entry out of range");
                entries.emplace_back(r, c, v);
            }
            Eigen::SparseMatrix<double> a(n, n);
            a.setFromTriplets(entries.begin(), entries.end());
            gens.emplace_back(std::move(a));
        }
        else if (kind == "dense")
        {
            gens.emplace_back(read_dense(is, n, n));
        }
        else
        {
            throw IoError("system file: unknown storage kind '" + kind + "'");
        }
    }
    expect_word(is, "initial_basis");
    Eigen::MatrixXd s0 = read_dense(is, n, k);
    expect_word(is, "initial_coeffs");
    Eigen::VectorXd v = read_dense(is, k, 1);
    std::optional<Eigen::MatrixXd> c;
    if (p > 0)
    {
        expect_word(is, "output");
        c = read_dense(is, p, n);
    }
    return BilinearSystemd(std::move(gens), std::move(s0), std::move(v), std::move(c));
}

void write_system(const std::filesystem::path& path, const BilinearSystemd& sys)
{
    auto os = open_out(path);
    write_system(os, sys);
    if (!os)
        throw IoError("write failed for " + path.string());
}

BilinearSystemd read_system(const std::filesystem::path& path)
{
    auto is = open_in(path);
    return read_system(is);
}

void write_output_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& c, Index order, Index inputs)
{
    auto os = open_out(path);
    os << c.cols() << ',' << c.rows() << ',' << order << ',' << inputs << '\n';
    for (Index i = 0; i < c.rows(); ++i)
        write_row(os, c.row(i), ',');
    if (!os)
        throw IoError("write failed for " + path.string());
}

OutputMatrixFile read_output_matrix(const std::filesystem::path& path)
{
    CsvTable t = read_csv(path, true);
    if (t.header.size() != 4)
        throw IoError(path.string() + ": header row must be n,p,N,m");
    Index shape[4];
    for (int i = 0; i < 4; ++i)
        shape[i] = static_cast<Index>(parse_double(t.header[static_cast<std::size_t>(i)], path.string()));
    const auto [n, p, order, inputs] = std::tuple{shape[0], shape[1], shape[2], shape[3]};
    if (t.values.rows() != p || t.values.cols() != n)
        throw IoError(path.string() + ": matrix shape does not match its header");
    return OutputMatrixFile{t.values, order, inputs};
}

void write_spectrum_csv(const std::filesystem::path& path, const Eigen::Ref<const Eigen::VectorXd>& values)
{
    Eigen::MatrixXd table(values.size(), 2);
    for (Index i = 0; i < values.size(); ++i)
    {
        table(i, 0) = static_cast<double>(i + 1);
        table(i, 1) = values(i);
    }
    write_csv(path, {"index", "value"}, table);
}

void write_hankel_csv(const std::filesystem::path& path, const std::vector<HankelRow>& rows)
{
    Eigen::MatrixXd table(static_cast<Index>(rows.size()), 3);
    for (std::size_t i = 0; i < rows.size(); ++i)
    {
        table(static_cast<Index>(i), 0) = static_cast<double>(rows[i].index);
        table(static_cast<Index>(i), 1) = rows[i].value;
        table(static_cast<Index>(i), 2) = rows[i].ratio;
    }
    write_csv(path, {"index", "sigma", "sigma_over_sigma1"}, table);
}

} // namespace sigmor
