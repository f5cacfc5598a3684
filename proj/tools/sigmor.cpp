// Command-line front end: simulate | learn | reduce | evaluate | pipeline.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <sigmor/errors.hpp>
#include <sigmor/io.hpp>
#include <sigmor/pipeline.hpp>

namespace
{

enum ExitCode
{
    ok = 0,
    config_error = 2,
    numerical_failure = 3,
    io_error = 4
};

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Signature-based bilinear surrogates with balanced truncation"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<int> threads;
    bool full_scale = false;
    bool quiet = false;
    app.add_option("--config", config_path, "key = value configuration file");
    app.add_option("--out", out_dir, "output directory (overrides the config)");
    app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--full-scale", full_scale, "d = 1000, N = 5, 1000 training and 1000 test controls");
    app.add_flag("-q,--quiet", quiet, "suppress progress messages");

    auto* simulate = app.add_subcommand("simulate", "truth outputs for the configured test frequencies");
    auto* learn = app.add_subcommand("learn", "fit the signature output matrix C");
    auto* reduce = app.add_subcommand("reduce", "Gramians, balancing and reduced systems");
    std::string c_file;
    reduce->add_option("--C-file", c_file, "learned output matrix (default <out>/C.csv)");
    auto* evaluate = app.add_subcommand("evaluate", "error of the full and reduced models against the truth");
    auto* pipeline = app.add_subcommand("pipeline", "run every stage in sequence");
    for (auto* sub : {simulate, learn, reduce, evaluate, pipeline})
        sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try
    {
        sigmor::ExperimentConfig cfg;
        if (!config_path.empty())
            cfg = sigmor::load_config(config_path);
        if (full_scale)
            cfg.apply_full_scale();
        cfg.apply_environment();
        if (!out_dir.empty())
            cfg.out = out_dir;
        if (threads)
            cfg.threads = *threads;
        cfg.validate();

        const sigmor::RunContext ctx = sigmor::make_context(cfg, quiet ? nullptr : &std::cerr);
        if (simulate->parsed())
            sigmor::cmd_simulate(cfg, ctx);
        else if (learn->parsed())
            sigmor::cmd_learn(cfg, ctx);
        else if (reduce->parsed())
            sigmor::cmd_reduce(cfg, ctx, c_file.empty() ? ctx.out / "C.csv" : std::filesystem::path(c_file));
        else if (evaluate->parsed())
            sigmor::cmd_evaluate(cfg, ctx);
        else if (pipeline->parsed())
            sigmor::cmd_pipeline(cfg, ctx);
        return ok;
    }
    catch (const sigmor::ConfigError& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return config_error;
    }
    catch (const sigmor::IoError& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return io_error;
    }
    catch (const sigmor::NumericalError& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return numerical_failure;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return numerical_failure;
    }
}
