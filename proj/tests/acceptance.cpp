// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.
// Needs the CLI path (SIGMOR_EXE) for the benchmark and determinism runs.
// SIGMOR_ACCEPTANCE_FULL_SCALE=1 also runs the large benchmark (hours).

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include <Eigen/Eigenvalues>

#include <sigmor/balancing.hpp>
#include <sigmor/dynamics.hpp>
#include <sigmor/gramians.hpp>
#include <sigmor/io.hpp>
#include <sigmor/learning.hpp>
#include <sigmor/pipeline.hpp>
#include <sigmor/signature.hpp>

#include "support.hpp"

using namespace sigmor;
namespace fs = std::filesystem;

namespace
{

struct Outcome
{
    bool pass = true;
    std::vector<std::string> notes;

    void require(bool ok, const std::string& what)
    {
        pass = pass && ok;
        notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
    }
    void note(const std::string& what) { notes.push_back("     " + what); }
};

std::string sci(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", x);
    return buf;
}

const fs::path work_root = fs::temp_directory_path() / ("sigmor_acceptance_" + std::to_string(::getpid()));

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(SIGMOR_EXE) + " -q " + args;
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Eigen::Index column(const CsvTable& t, const std::string& name)
{
    for (std::size_t j = 0; j < t.header.size(); ++j)
        if (t.header[j] == name)
            return static_cast<Eigen::Index>(j);
    throw IoError("column " + name + " missing");
}

std::string slurp(const fs::path& p)
{
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

Eigen::MatrixXd random_output(std::mt19937_64& rng, Index p, Index n)
{
    std::normal_distribution<double> nd;
    Eigen::MatrixXd c(p, n);
    for (Index i = 0; i < c.size(); ++i)
        c(i) = nd(rng);
    return c;
}

// ---------------------------------------------------------------------------

Outcome signature_correctness()
{
    Outcome out;
    std::mt19937_64 rng(101);
    const TimeGrid grid = TimeGrid::uniform(1.0, 1001);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial)
    {
        const auto u = testing_support::random_smooth_control(rng, grid, 2);
        const auto sig = compute_signature(u, 3);
        for (Index w = 0; w < sig.dim(); ++w)
        {
            const double oracle = quadrature_oracle_signature(u, WordIndex::from_offset(w, 3), 1.0);
            const double got = sig.values(grid.intervals(), w);
            worst = std::max(worst, std::abs(got - oracle) / std::abs(oracle));
        }
    }
    out.require(worst < 1e-6, "max relative error over 20 controls x 40 words = " + sci(worst) + " (< 1e-6)");
    return out;
}

Outcome nilpotency()
{
    Outcome out;
    int failures = 0, missing_witness = 0, products = 0;
    for (Index ch = 1; ch <= 4; ++ch)
        for (Index order = 1; order <= 4; ++order)
        {
            const auto a = build_generator_matrices<int>(ch, order);
            const Index n = signature_dimension(ch, order);
            bool witness = false;
            const Index total = static_cast<Index>(std::pow(ch, order + 1));
            for (Index code = 0; code < total; ++code)
            {
                Index c = code;
                Eigen::SparseMatrix<int> prod(n, n);
                prod.setIdentity();
                for (Index j = 0; j <= order; ++j)
                {
                    if (j == order && prod.nonZeros() > 0)
                        witness = true;
                    prod = (a[static_cast<std::size_t>(c % ch)] * prod).pruned();
                    c /= ch;
                }
                failures += prod.nonZeros() > 0;
                ++products;
            }
            missing_witness += !witness;
        }
    out.require(failures == 0, std::to_string(products) + " products of N+1 generators, nonzero: " +
                                   std::to_string(failures));
    out.require(missing_witness == 0, "every (m_ch, N) has a nonzero length-N product");
    return out;
}

Outcome gramian_equivalence()
{
    Outcome out;
    std::mt19937_64 rng(303);
    for (Index order = 1; order <= 4; ++order)
    {
        const auto sig = make_signature_system(2, order, random_output(rng, 1, signature_dimension(3, order)));
        const auto series = gramian_series(sig.system, order, 1.0);
        const auto ode = gramian_ode(sig.system, 1.0, 2000);
        const double ep = testing_support::max_rel(series.P, ode.P);
        const double eq = testing_support::max_rel(series.Q, ode.Q);
        out.require(ep < 1e-6 && eq < 1e-6, "N = " + std::to_string(order) + " (n = " + std::to_string(sig.dim()) +
                                                "): P err " + sci(ep) + ", Q err " + sci(eq));
    }
    const auto shift = make_signature_system(0, 2).system; // S = (1, t, t^2/2)
    const auto toy = gramian_series(shift, 2, 1.0);
    Eigen::Matrix3d exact;
    exact << 1.0, 1.0 / 2.0, 1.0 / 6.0, 1.0 / 2.0, 1.0 / 3.0, 1.0 / 8.0, 1.0 / 6.0, 1.0 / 8.0, 1.0 / 20.0;
    const double toy_err = (toy.P - exact).cwiseAbs().maxCoeff();
    out.require(toy_err < 1e-12, "3x3 toy P entries {1, 1/2, 1/3, 1/20, ...}: max abs error " + sci(toy_err));
    return out;
}

Outcome energy_bounds()
{
    Outcome out;
    std::mt19937_64 rng(404);
    const Index order = 4;
    const auto sig = make_signature_system(2, order, random_output(rng, 1, signature_dimension(3, order)));
    const auto g = gramian_series(sig.system, order, 1.0);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ep(g.P), eq(g.Q);
    const TimeGrid grid = TimeGrid::uniform(1.0, 1001);

    // eigenvalues at roundoff level carry no direction; sample the numerically nonzero spectrum
    const auto nonzero = [](const Eigen::VectorXd& ev) {
        std::vector<Index> idx;
        for (Index i = 0; i < ev.size(); ++i)
            if (ev(i) > 1e-12 * ev.maxCoeff())
                idx.push_back(i);
        return idx;
    };
    const auto p_idx = nonzero(ep.eigenvalues());
    const auto q_idx = nonzero(eq.eigenvalues());
    std::uniform_int_distribution<std::size_t> pick_p(0, p_idx.size() - 1), pick_q(0, q_idx.size() - 1);
    std::uniform_int_distribution<int> freq(1, 100);
    std::uniform_int_distribution<Index> start(0, grid.intervals() - 1);

    const auto control = [&](int i) {
        switch (i % 3)
        {
        case 0:
            return test_control(freq(rng), grid);
        case 1:
            return training_control(static_cast<std::uint64_t>(i), 0.2, grid, 2);
        default:
            return testing_support::random_smooth_control(rng, grid, 2);
        }
    };

    int reach_ok = 0, obs_ok = 0;
    double reach_worst = 0.0, obs_worst = 0.0;
    for (int i = 0; i < 25; ++i)
    {
        const Index k = p_idx[pick_p(rng)];
        const auto r = reachability_energy_check(sig.system, control(i), Eigen::VectorXd(ep.eigenvectors().col(k)),
                                                 ep.eigenvalues()(k));
        reach_ok += r.holds;
        reach_worst = std::max(reach_worst, r.lhs / r.rhs);
    }
    for (int i = 0; i < 25; ++i)
    {
        const Index k = q_idx[pick_q(rng)];
        const double t0 = (i % 2 == 0) ? 0.0 : grid[start(rng)];
        const auto r = observability_energy_check(sig.system, control(i), Eigen::VectorXd(eq.eigenvectors().col(k)),
                                                  eq.eigenvalues()(k), t0);
        obs_ok += r.holds;
        obs_worst = std::max(obs_worst, r.lhs / r.rhs);
    }
    out.require(reach_ok == 25, "reachability bound: " + std::to_string(reach_ok) + "/25, max lhs/rhs " +
                                    sci(reach_worst));
    out.require(obs_ok == 25, "observability bound: " + std::to_string(obs_ok) + "/25, max lhs/rhs " + sci(obs_worst));
    out.note("eigenpairs drawn from " + std::to_string(p_idx.size()) + " nonzero P and " +
             std::to_string(q_idx.size()) + " nonzero Q eigenvalues of " + std::to_string(sig.dim()));
    return out;
}

struct BenchmarkRun
{
    fs::path dir;
    bool ok = false;
    double seconds = 0.0;
};

BenchmarkRun run_benchmark(const std::string& name, const std::string& extra)
{
    BenchmarkRun b;
    b.dir = work_root / name;
    const auto t0 = std::chrono::steady_clock::now();
    b.ok = run_cli("pipeline --threads 1 --out " + b.dir.string() + " " + extra) == 0;
    b.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return b;
}

Outcome balancing_identities(const BenchmarkRun& desk)
{
    Outcome out;
    if (desk.ok)
    {
        const auto t = read_csv(desk.dir / "balancing_check.csv");
        const double r1 = t.values(0, column(t, "reachability_residual"));
        const double r2 = t.values(0, column(t, "observability_residual"));
        const double r3 = t.values(0, column(t, "spectrum_residual"));
        out.require(r1 < 1e-8 && r2 < 1e-8 && r3 < 1e-8, "benchmark run: TPT^T " + sci(r1) + ", T^-T Q T^-1 " +
                                                             sci(r2) + ", sigma^2 vs eig(PQ) " + sci(r3));
    }
    else
        out.require(false, "benchmark run did not complete");

    std::mt19937_64 rng(505);
    for (Index order = 2; order <= 4; ++order)
    {
        const auto sig = make_signature_system(2, order, random_output(rng, 1, signature_dimension(3, order)));
        const auto g = gramian_series(sig.system, order, 1.0);
        const auto bal = balance<double>(g.P, g.Q);
        const auto res = balancing_residual(bal, g.P, g.Q);
        const double spec = hankel_spectrum_residual(bal.sigma, g.P, g.Q);
        out.require(res.reachability < 1e-8 && res.observability < 1e-8 && spec < 1e-8,
                    "random C, N = " + std::to_string(order) + ": " + sci(res.reachability) + ", " +
                        sci(res.observability) + ", " + sci(spec));
    }
    return out;
}

Outcome desk_benchmark(const BenchmarkRun& desk)
{
    Outcome out;
    if (!desk.ok)
    {
        out.require(false, "desk pipeline did not complete");
        return out;
    }
    out.note("desk pipeline wall time " + sci(desk.seconds) + " s");
    const auto learn = read_csv(desk.dir / "learn_report.csv");
    const double e_sig = learn.values(0, column(learn, "E_sig"));
    out.require(e_sig < 5e-2, "E_sig = " + sci(e_sig) + " (< 5e-2)");

    const auto err = read_csv(desk.dir / "error_vs_r.csv");
    const Eigen::VectorXd r = err.values.col(column(err, "r"));
    const Eigen::VectorXd mor = err.values.col(column(err, "E_MOR"));
    const Eigen::VectorXd red = err.values.col(column(err, "E_red_sig"));
    const Eigen::VectorXd sig = err.values.col(column(err, "E_sig"));
    std::vector<std::string> rises;
    for (Index i = 1; i < mor.size(); ++i)
        if (mor(i) > mor(i - 1) + 1e-12) // roundoff allowance once the error has plateaued at ~1e-15
            rises.push_back("r=" + std::to_string(static_cast<int>(r(i))) + ": " + sci(mor(i - 1)) + " -> " +
                            sci(mor(i)));
    std::string detail = "E_MOR(r) non-increasing over r = 1.." + std::to_string(static_cast<int>(r(r.size() - 1)));
    if (!rises.empty())
    {
        detail += "; " + std::to_string(rises.size()) + " increases, first " + rises.front();
        for (std::size_t i = 1; i < std::min<std::size_t>(rises.size(), 4); ++i)
            detail += ", " + rises[i];
    }
    out.require(rises.empty(), detail);
    const Index last = red.size() - 1;
    const double plateau_gap = std::abs(red(last) - sig(last)) / sig(last);
    out.require(plateau_gap <= 0.1, "plateau at r = " + std::to_string(static_cast<int>(r(last))) + ": E_red_sig " +
                                        sci(red(last)) + " vs E_sig " + sci(sig(last)) + " (gap " +
                                        sci(plateau_gap) + ")");
    out.note("E_MOR at r = 1, 5, 10, 17: " + sci(mor(0)) + ", " + sci(mor(std::min<Index>(4, last))) + ", " +
             sci(mor(std::min<Index>(9, last))) + ", " + sci(mor(std::min<Index>(16, last))));

    const auto hankel = read_csv(desk.dir / "hankel.csv");
    const Eigen::VectorXd ratio = hankel.values.col(column(hankel, "sigma_over_sigma1"));
    const Index first40 = std::min<Index>(40, ratio.size());
    const double smallest = ratio.head(first40).minCoeff();
    Index positive = 0;
    for (Index i = 0; i < first40; ++i)
        positive += ratio(i) > 0.0;
    out.require(smallest <= 1e-6, "sigma_k/sigma_1 reaches " + sci(smallest) + " within the first 40 (<= 1e-6); " +
                                      std::to_string(positive) + " values above the numerical rank cut");
    out.note("smallest retained sigma_k/sigma_1 = " + sci(ratio(std::max<Index>(0, positive - 1))));

    if (const char* full = std::getenv("SIGMOR_ACCEPTANCE_FULL_SCALE"); full && std::string(full) == "1")
    {
        const auto big = run_benchmark("full", "--full-scale");
        if (!big.ok)
            out.require(false, "full-scale pipeline did not complete");
        else
        {
            const auto t = read_csv(big.dir / "learn_report.csv");
            const double e = t.values(0, column(t, "E_sig"));
            out.require(e >= 5e-4 && e <= 1e-2, "full scale E_sig = " + sci(e) + " in [5e-4, 1e-2], wall time " +
                                                    sci(big.seconds) + " s");
        }
    }
    else
        out.note("full-scale run skipped (set SIGMOR_ACCEPTANCE_FULL_SCALE=1)");
    return out;
}

Outcome dimension_check()
{
    Outcome out;
    const Index n = signature_dimension(3, 5);
    out.require(n == 364, "signature_dimension(3, 5) = " + std::to_string(n));
    return out;
}

Outcome regression_exactness()
{
    Outcome out;
    std::mt19937_64 rng(808);
    // benchmark shape: 2 inputs, N = 4, white-noise training paths on the 1001-point grid
    const Index m = 2, order = 4;
    const Index n = signature_dimension(m + 1, order);
    const TimeGrid grid = TimeGrid::uniform(1.0, 1001);
    const Eigen::MatrixXd c_star = random_output(rng, 1, n);
    LeastSquaresAccumulator acc(n, 1);
    for (int k = 0; k < 200; ++k)
    {
        const auto s = compute_signature(training_control(static_cast<std::uint64_t>(k), 0.2, grid, m), order);
        acc.add(s.values, s.values * c_star.transpose());
    }
    const auto fit = acc.solve(0.0);
    const double err = testing_support::max_rel(fit.C, c_star);
    out.require(err < 1e-8, "|C - C*|/|C*| = " + sci(err) + " (< 1e-8), rank " +
                                std::to_string(fit.effective_rank) + "/" + std::to_string(n));
    return out;
}

Outcome lipschitz_suite()
{
    Outcome out;
    std::mt19937_64 rng(909);
    std::normal_distribution<double> nd;
    const Index d = 10;
    Eigen::MatrixXd a(d, d);
    for (Index i = 0; i < a.size(); ++i)
        a(i) = nd(rng) / std::sqrt(static_cast<double>(d));
    const auto sys = make_cubic_example(d, a);
    const double l =
        2.0 * Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (a + a.transpose())).eigenvalues().maxCoeff();

    int holds = 0;
    for (int i = 0; i < 1000; ++i)
    {
        Eigen::VectorXd x(d), z(d);
        for (Index j = 0; j < d; ++j)
        {
            x(j) = 2.0 * nd(rng);
            z(j) = 2.0 * nd(rng);
        }
        const double lhs = 2.0 * (x - z).dot(sys.drift(x) - sys.drift(z)) +
                           (sys.input_field(1, x) - sys.input_field(1, z)).squaredNorm();
        holds += lhs <= l * (x - z).squaredNorm() + 1e-12 * (1.0 + std::abs(lhs));
    }
    out.require(holds == 1000, "one-sided Lipschitz inequality: " + std::to_string(holds) + "/1000 pairs, L = " + sci(l));

    // the same control functions sampled on a grid and on its refinement
    const TimeGrid coarse = TimeGrid::uniform(1.0, 201), fine = TimeGrid::uniform(1.0, 401);
    std::uniform_real_distribution<double> target(0.1, 2.0);
    const auto draw = [&](double norm) {
        std::mt19937_64 snapshot = rng;
        const double raw = std::sqrt(testing_support::random_smooth_control(snapshot, fine, 1).l2_norm_squared());
        snapshot = rng;
        auto u = testing_support::random_smooth_control(snapshot, coarse, 1, norm / raw);
        auto v = testing_support::random_smooth_control(rng, fine, 1, norm / raw);
        return std::make_pair(u, v);
    };
    double worst_change = 0.0, max_ratio = 0.0;
    bool finite = true;
    for (int i = 0; i < 100; ++i)
    {
        const auto [u_c, u_f] = draw(target(rng));
        const auto [v_c, v_f] = draw(target(rng));
        const double rc = lipschitz_probe(sys, u_c, v_c);
        const double rf = lipschitz_probe(sys, u_f, v_f);
        finite = finite && std::isfinite(rc) && std::isfinite(rf);
        worst_change = std::max(worst_change, std::abs(rf - rc) / rf);
        max_ratio = std::max({max_ratio, rc, rf});
    }
    out.require(finite, "probe ratios finite on 100 pairs, max ratio " + sci(max_ratio));
    out.require(worst_change < 0.05, "largest change under step halving " + sci(worst_change) + " (< 5e-2)");
    return out;
}

Outcome determinism(const BenchmarkRun& first)
{
    Outcome out;
    const auto second = run_benchmark("desk_repeat", "");
    if (!first.ok || !second.ok)
    {
        out.require(false, "pipeline run did not complete");
        return out;
    }
    std::size_t files = 0, differ = 0;
    for (const auto& e : fs::recursive_directory_iterator(first.dir))
    {
        if (!e.is_regular_file() || e.path().extension() != ".csv")
            continue;
        const fs::path rel = fs::relative(e.path(), first.dir);
        ++files;
        if (slurp(e.path()) != slurp(second.dir / rel))
        {
            ++differ;
            out.note("differs: " + rel.string());
        }
    }
    out.require(files > 0 && differ == 0,
                std::to_string(files) + " CSV files compared across two --threads 1 runs, " + std::to_string(differ) +
                    " differ");
    return out;
}

} // namespace

int main()
{
    fs::remove_all(work_root);
    fs::create_directories(work_root);
    std::cout << "sigmor acceptance suite\n";

    struct Criterion
    {
        int id;
        const char* title;
        std::function<Outcome()> body;
    };
    BenchmarkRun desk;
    const auto desk_once = [&]() -> const BenchmarkRun& {
        if (desk.dir.empty())
            desk = run_benchmark("desk", "");
        return desk;
    };
    const std::vector<Criterion> criteria{
        {1, "signature correctness", signature_correctness},
        {2, "nilpotency", nilpotency},
        {3, "Gramian oracle equivalence", gramian_equivalence},
        {4, "energy bounds", energy_bounds},
        {5, "balancing identities", [&] { return balancing_identities(desk_once()); }},
        {6, "desk-scale benchmark", [&] { return desk_benchmark(desk_once()); }},
        {7, "dimension check", dimension_check},
        {8, "regression exactness", regression_exactness},
        {9, "Lipschitz property suite", lipschitz_suite},
        {10, "determinism", [&] { return determinism(desk_once()); }},
    };

    int failed = 0;
    for (const auto& c : criteria)
    {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try
        {
            o = c.body();
        }
        catch (const std::exception& e)
        {
            o.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !o.pass;
        std::printf("%s criterion %d: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.title, secs);
        for (const auto& n : o.notes)
            std::printf("    %s\n", n.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    fs::remove_all(work_root);
    return failed == 0 ? 0 : 1;
}
