#include <sigmor/config.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sigmor/errors.hpp>
#include <sigmor/io.hpp>
#include <sigmor/signature.hpp>

namespace sigmor
{

namespace
{

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& text)
{
    const std::string s = trim(text);
    Int v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
        throw ConfigError(key, "expected an integer, got '" + text + "'");
    return v;
}

double parse_real(const std::string& key, const std::string& text)
{
    const std::string s = trim(text);
    try
    {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size())
            return v;
    }
    catch (const std::exception&)
    {
    }
    throw ConfigError(key, "expected a number, got '" + text + "'");
}

template <typename Int>
std::vector<Int> parse_list(const std::string& key, const std::string& text)
{
    std::vector<Int> out;
    std::istringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
    {
        item = trim(item);
        if (item.empty())
            continue;
        const auto dash = item.find('-', 1);
        if (dash == std::string::npos)
        {
            out.push_back(parse_int<Int>(key, item));
            continue;
        }
        const Int a = parse_int<Int>(key, item.substr(0, dash));
        const Int b = parse_int<Int>(key, item.substr(dash + 1));
        if (b < a)
            throw ConfigError(key, "empty range '" + item + "'");
        for (Int v = a; v <= b; ++v)
            out.push_back(v);
    }
    return out;
}

template <typename Int>
std::string join(const std::vector<Int>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

} // namespace

std::vector<Index> ExperimentConfig::orders() const
{
    if (!r_list.empty())
        return r_list;
    std::vector<Index> r;
    const Index top = std::min<Index>(40, signature_dim());
    for (Index i = 1; i <= top; ++i)
        r.push_back(i);
    return r;
}

Index ExperimentConfig::signature_dim() const
{
    return signature_dimension(m + 1, N);
}

const std::vector<std::string>& config_keys()
{
    static const std::vector<std::string> keys{"d",          "m",       "T",      "grid_points",  "N",
                                               "c_w",        "n_train", "n_test", "ridge_lambda", "r_list",
                                               "seed",       "simulate_k", "truth", "out",        "threads"};
    return keys;
}

void ExperimentConfig::set(const std::string& key, const std::string& value)
{
    if (key == "d")
        d = parse_int<Index>(key, value);
    else if (key == "m")
        m = parse_int<Index>(key, value);
    else if (key == "T")
        T = parse_real(key, value);
    else if (key == "grid_points")
        grid_points = parse_int<Index>(key, value);
    else if (key == "N")
        N = parse_int<Index>(key, value);
    else if (key == "c_w")
        c_w = parse_real(key, value);
    else if (key == "n_train")
        n_train = parse_int<Index>(key, value);
    else if (key == "n_test")
        n_test = parse_int<Index>(key, value);
    else if (key == "ridge_lambda")
        ridge_lambda = parse_real(key, value);
    else if (key == "r_list")
        r_list = parse_list<Index>(key, value);
    else if (key == "seed")
        seed = parse_int<std::uint64_t>(key, value);
    else if (key == "simulate_k")
        simulate_k = parse_list<int>(key, value);
    else if (key == "truth")
    {
        const std::string v = trim(value);
        if (v == "reaction_diffusion")
            truth = TruthModel::reaction_diffusion;
        else if (v == "signature_linear")
            truth = TruthModel::signature_linear;
        else
            throw ConfigError(key, "expected reaction_diffusion or signature_linear, got '" + v + "'");
    }
    else if (key == "out")
        out = trim(value);
    else if (key == "threads")
        threads = parse_int<int>(key, value);
    else
        throw ConfigError(key, "unknown key");
}

void ExperimentConfig::validate() const
{
    if (d < 2)
        throw ConfigError("d", "must be at least 2, got " + std::to_string(d));
    if (m < 1)
        throw ConfigError("m", "must be at least 1");
    if (truth == TruthModel::reaction_diffusion && m != 2)
        throw ConfigError("m", "the reaction-diffusion system has exactly 2 inputs");
    if (!(T > 0.0) || !std::isfinite(T))
        throw ConfigError("T", "horizon must be positive");
    if (grid_points < 2)
        throw ConfigError("grid_points", "need at least 2 grid points");
    if (N < 1)
        throw ConfigError("N", "truncation order must be at least 1");
    Index n = 0;
    try
    {
        n = signature_dim();
    }
    catch (const std::exception&)
    {
        throw ConfigError("N", "signature dimension overflows");
    }
    if (!(c_w >= 0.0) || !std::isfinite(c_w))
        throw ConfigError("c_w", "noise scale must be nonnegative");
    if (n_train < 1)
        throw ConfigError("n_train", "need at least one training control");
    if (n_test < 1)
        throw ConfigError("n_test", "need at least one test control");
    if (!(ridge_lambda >= 0.0) || !std::isfinite(ridge_lambda))
        throw ConfigError("ridge_lambda", "must be nonnegative");
    for (Index r : r_list)
        if (r < 1 || r > n)
            throw ConfigError("r_list", "entry " + std::to_string(r) + " outside [1, " + std::to_string(n) + "]");
    for (int k : simulate_k)
        if (k < 0)
            throw ConfigError("simulate_k", "frequencies must be nonnegative");
    if (out.empty())
        throw ConfigError("out", "output directory must not be empty");
    if (threads < 1)
        throw ConfigError("threads", "must be at least 1");
}

void ExperimentConfig::apply_full_scale()
{
    d = 1000;
    N = 5;
    n_train = 1000;
    n_test = 1000;
}

void ExperimentConfig::apply_environment()
{
    for (const auto& key : config_keys())
    {
        std::string name = "SIGMOR_";
        for (char c : key)
            name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if (const char* v = std::getenv(name.c_str()))
            set(key, v);
    }
}

std::string ExperimentConfig::to_text() const
{
    std::ostringstream os;
    os << "d = " << d << '\n'
       << "m = " << m << '\n'
       << "T = " << format_double(T) << '\n'
       << "grid_points = " << grid_points << '\n'
       << "N = " << N << '\n'
       << "c_w = " << format_double(c_w) << '\n'
       << "n_train = " << n_train << '\n'
       << "n_test = " << n_test << '\n'
       << "ridge_lambda = " << format_double(ridge_lambda) << '\n'
       << "r_list = " << join(r_list) << '\n'
       << "seed = " << seed << '\n'
       << "simulate_k = " << join(simulate_k) << '\n'
       << "truth = " << (truth == TruthModel::reaction_diffusion ? "reaction_diffusion" : "signature_linear") << '\n';
    return os.str();
}

ExperimentConfig parse_config(std::istream& is)
{
    ExperimentConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line))
    {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(line, "line " + std::to_string(lineno) + " is not of the form key = value");
        cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is)
        throw IoError("cannot open config " + path.string());
    return parse_config(is);
}

} // namespace sigmor
