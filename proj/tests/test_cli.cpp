#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <sigmor/io.hpp>

namespace fs = std::filesystem;

namespace
{

const fs::path work_root = fs::temp_directory_path() / ("sigmor_cli_" + std::to_string(::getpid()));

int run(const std::string& args, const std::string& env = {})
{
    const std::string cmd = env + (env.empty() ? "" : " ") + std::string(SIGMOR_EXE) + " -q " + args + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const std::string& name, const std::string& text)
{
    fs::create_directories(work_root);
    const fs::path p = work_root / name;
    std::ofstream(p) << text;
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// small, fast run whose truth lies in the model class
const std::string smoke = "truth = signature_linear\nN = 2\ngrid_points = 101\nn_train = 12\nn_test = 3\n"
                          "c_w = 0.5\nsimulate_k = 1, 10\n";

} // namespace

TEST_CASE("exit codes")
{
    CHECK(run("") != 0);
    CHECK(run("pipeline --config " + (work_root / "absent.cfg").string()) == 4);
    CHECK(run("simulate --config " + write_config("bad_d.cfg", "d = 1\n").string()) == 2);
    CHECK(run("simulate --config " + write_config("bad_key.cfg", "colour = blue\n").string()) == 2);
    CHECK(run("simulate", "SIGMOR_N=0") == 2);
    CHECK(run("simulate --threads 0") != 0);
    // reduce before learn: no C.csv to read
    CHECK(run("reduce --out " + (work_root / "empty").string()) == 4);
}

TEST_CASE("simulate with no frequencies writes nothing")
{
    const fs::path out = work_root / "nosim";
    const auto cfg = write_config("nosim.cfg", "simulate_k =\nd = 10\n");
    CHECK(run("simulate --config " + cfg.string() + " --out " + out.string()) == 0);
    CHECK((!fs::exists(out / "simulate") || fs::is_empty(out / "simulate")));
}

TEST_CASE("simulate writes the requested trajectories")
{
    const fs::path out = work_root / "sim";
    const auto cfg = write_config("sim.cfg", "simulate_k = 1, 10, 50\nd = 20\ngrid_points = 201\n");
    REQUIRE(run("simulate --config " + cfg.string() + " --out " + out.string()) == 0);
    for (int k : {1, 10, 50})
    {
        const auto traj = sigmor::read_trajectory_csv(out / "simulate" / ("y_k" + std::to_string(k) + ".csv"));
        CHECK(traj.grid.points() == 201);
        CHECK(traj.values.cols() == 1);
        CHECK(traj.values(0, 0) > 0.0);
    }
}

TEST_CASE("smoke pipeline on a signature-linear truth")
{
    const fs::path out = work_root / "smoke";
    const auto cfg = write_config("smoke.cfg", smoke);
    REQUIRE(run("pipeline --config " + cfg.string() + " --out " + out.string()) == 0);

    const auto report = sigmor::read_csv(out / "learn_report.csv");
    const auto col = [&](const sigmor::CsvTable& t, const std::string& name) {
        for (std::size_t j = 0; j < t.header.size(); ++j)
            if (t.header[j] == name)
                return static_cast<Eigen::Index>(j);
        FAIL("missing column " << name);
        return Eigen::Index{-1};
    };
    CHECK(report.values(0, col(report, "residual")) < 1e-8);
    CHECK(report.values(0, col(report, "n")) == 13);
    CHECK(report.values(0, col(report, "E_sig")) < 1e-8);

    const auto errors = sigmor::read_csv(out / "error_vs_r.csv");
    CHECK(errors.values.rows() == 13);
    const Eigen::Index last = errors.values.rows() - 1;
    CHECK(errors.values(last, col(errors, "r")) == 13);
    CHECK(errors.values(last, col(errors, "E_MOR")) < 1e-8);
    for (Eigen::Index i = 0; i < errors.values.rows(); ++i)
        CHECK(errors.values(i, col(errors, "E_red_sig")) <=
              errors.values(i, col(errors, "E_sig")) + errors.values(i, col(errors, "E_MOR")) + 1e-12);

    const auto check = sigmor::read_csv(out / "balancing_check.csv");
    CHECK(check.values(0, col(check, "reachability_residual")) < 1e-8);
    CHECK(check.values(0, col(check, "observability_residual")) < 1e-8);
    CHECK(fs::exists(out / "hankel.csv"));
    CHECK(fs::exists(out / "P_spectrum.csv"));
    CHECK(fs::exists(out / "Q_spectrum.csv"));
    CHECK(fs::exists(out / "simulate" / "y_k10.csv"));

    // stages can be rerun separately against the same directory
    CHECK(run("evaluate --config " + cfg.string() + " --out " + out.string()) == 0);
}

TEST_CASE("reduce honours r_list")
{
    const fs::path out = work_root / "rlist";
    const auto cfg = write_config("rlist.cfg", smoke + "N = 3\nr_list = 2-30\n");
    REQUIRE(run("learn --config " + cfg.string() + " --out " + out.string()) == 0);
    REQUIRE(run("reduce --config " + cfg.string() + " --out " + out.string()) == 0);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(out / "reduced"))
        files += e.path().extension() == ".txt";
    CHECK(files == 29);
    CHECK(fs::exists(out / "reduced" / "rom_r2.txt"));
    CHECK(fs::exists(out / "reduced" / "rom_r30.txt"));
    CHECK_FALSE(fs::exists(out / "reduced" / "rom_r1.txt"));

    // explicit C file
    const fs::path other = work_root / "rlist_copy";
    CHECK(run("reduce --config " + cfg.string() + " --out " + other.string() + " --C-file " +
              (out / "C.csv").string()) == 0);
    CHECK(slurp(other / "hankel.csv") == slurp(out / "hankel.csv"));
}

TEST_CASE("repeated runs are byte-identical")
{
    const auto cfg = write_config("det.cfg", smoke + "n_train = 70\n");
    const fs::path a = work_root / "det_a", b = work_root / "det_b", c = work_root / "det_c";
    REQUIRE(run("pipeline --threads 1 --config " + cfg.string() + " --out " + a.string()) == 0);
    REQUIRE(run("pipeline --threads 1 --config " + cfg.string() + " --out " + b.string()) == 0);
    REQUIRE(run("pipeline --threads 3 --config " + cfg.string() + " --out " + c.string()) == 0);
    for (const char* f : {"C.csv", "hankel.csv", "error_vs_r.csv", "test_outputs.csv", "reduced/rom_r5.txt"})
    {
        CAPTURE(f);
        CHECK(slurp(a / f) == slurp(b / f));
        CHECK(slurp(a / f) == slurp(c / f));
        CHECK_FALSE(slurp(a / f).empty());
    }
    fs::remove_all(work_root);
}
