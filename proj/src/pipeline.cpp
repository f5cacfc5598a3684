#include <sigmor/pipeline.hpp>

#include <algorithm>
#include <fstream>
#include <ostream>
#include <string>

#include <Eigen/Eigenvalues>

#include <sigmor/errors.hpp>
#include <sigmor/gramians.hpp>
#include <sigmor/io.hpp>
#include <sigmor/random.hpp>
#include <sigmor/signature.hpp>

namespace sigmor
{

namespace
{

// Stream tags keep the training, test and model draws independent.
constexpr std::uint64_t training_stream = 1;
constexpr std::uint64_t model_stream = 2;

void note(const RunContext& ctx, const std::string& msg)
{
    if (ctx.log)
        *ctx.log << msg << '\n';
}

std::filesystem::path rom_path(const RunContext& ctx, Index r)
{
    return ctx.out / "reduced" / ("rom_r" + std::to_string(r) + ".txt");
}

// Output matrix of the synthetic signature-model truth.
Eigen::MatrixXd reference_output_matrix(const ExperimentConfig& cfg)
{
    const Index n = cfg.signature_dim();
    Eigen::MatrixXd c(1, n);
    for (Index j = 0; j < n; ++j)
        c(0, j) = counter_normal(hash_key(cfg.seed, model_stream, static_cast<std::uint64_t>(j)));
    return c;
}

// Output family as one table: time column, then k<idx>_<channel> columns.
void write_output_family(const std::filesystem::path& path, const std::vector<Trajectoryd>& ys)
{
    const TimeGrid& grid = ys.front().grid;
    const Index p = ys.front().dim();
    std::vector<std::string> header{"time"};
    Eigen::MatrixXd table(grid.points(), 1 + p * static_cast<Index>(ys.size()));
    table.col(0) = grid.times();
    for (std::size_t k = 0; k < ys.size(); ++k)
        for (Index j = 0; j < p; ++j)
        {
            header.push_back("k" + std::to_string(k + 1) + "_" + std::to_string(j + 1));
            table.col(1 + static_cast<Index>(k) * p + j) = ys[k].values.col(j);
        }
    write_csv(path, header, table);
}

std::vector<Trajectoryd> read_output_family(const std::filesystem::path& path, Index count, const TimeGrid& grid)
{
    const CsvTable t = read_csv(path);
    if (t.values.cols() < 2 || (t.values.cols() - 1) % count != 0)
        throw IoError(path.string() + ": column count does not match n_test");
    const TimeGrid file_grid = TimeGrid::from_times(t.values.col(0));
    if (file_grid.points() != grid.points() || std::abs(file_grid.end() - grid.end()) > 1e-12 * grid.horizon())
        throw IoError(path.string() + ": time grid does not match the configuration");
    const Index p = (t.values.cols() - 1) / count;
    std::vector<Trajectoryd> ys;
    ys.reserve(static_cast<std::size_t>(count));
    for (Index k = 0; k < count; ++k)
        ys.emplace_back(grid, t.values.middleCols(1 + k * p, p));
    return ys;
}

} // namespace

RunContext make_context(const ExperimentConfig& cfg, std::ostream* log)
{
    return RunContext{cfg.out, cfg.threads, log};
}

TimeGrid config_grid(const ExperimentConfig& cfg)
{
    return TimeGrid::uniform(cfg.T, cfg.grid_points);
}

NonlinearSystem make_truth(const ExperimentConfig& cfg)
{
    if (cfg.truth == TruthModel::reaction_diffusion)
        return make_reaction_diffusion(cfg.d);

    // The signature ODE itself, written as a control-affine system.
    auto gens = build_generator_matrices<double>(cfg.m + 1, cfg.N);
    const Index n = cfg.signature_dim();
    NonlinearSystem sys;
    sys.linear = gens.front();
    sys.reaction = [](const Eigen::VectorXd&, Eigen::Ref<Eigen::VectorXd> out) { out.setZero(); };
    for (std::size_t i = 1; i < gens.size(); ++i)
        sys.input_fields.push_back([a = gens[i]](const Eigen::VectorXd& x, Eigen::Ref<Eigen::VectorXd> out) {
            out = a * x;
        });
    const Eigen::MatrixXd c = reference_output_matrix(cfg);
    sys.output = [c](const Eigen::VectorXd& x) -> Eigen::VectorXd { return c * x; };
    sys.outputs = 1;
    sys.x0 = Eigen::VectorXd::Zero(n);
    sys.x0(0) = 1.0;
    sys.reaction_stiffness = 1.0;
    return sys;
}

NonlinearOptions truth_options(const ExperimentConfig& cfg, const NonlinearSystem& truth)
{
    NonlinearOptions opts;
    const double h = config_grid(cfg).step();
    if (explicit_substeps(truth, h, opts.stability) > opts.lawson_threshold)
    {
        opts.method = Integrator::lawson_rk4;
        opts.propagator = make_lawson_propagator(truth, h);
    }
    return opts;
}

std::vector<ControlSignal> training_controls(const ExperimentConfig& cfg)
{
    const TimeGrid grid = config_grid(cfg);
    std::vector<ControlSignal> us;
    us.reserve(static_cast<std::size_t>(cfg.n_train));
    for (Index k = 0; k < cfg.n_train; ++k)
        us.push_back(training_control(hash_key(cfg.seed, training_stream, static_cast<std::uint64_t>(k)), cfg.c_w,
                                      grid, cfg.m));
    return us;
}

std::vector<ControlSignal> test_controls(const ExperimentConfig& cfg)
{
    if (cfg.m != 2)
        throw ConfigError("m", "the sinusoidal test family has 2 inputs");
    const TimeGrid grid = config_grid(cfg);
    std::vector<ControlSignal> us;
    us.reserve(static_cast<std::size_t>(cfg.n_test));
    for (Index k = 1; k <= cfg.n_test; ++k)
        us.push_back(test_control(static_cast<int>(k), grid));
    return us;
}

std::size_t cmd_simulate(const ExperimentConfig& cfg, const RunContext& ctx)
{
    cfg.validate();
    if (cfg.simulate_k.empty())
        return 0;
    const NonlinearSystem truth = make_truth(cfg);
    const NonlinearOptions opts = truth_options(cfg, truth);
    const TimeGrid grid = config_grid(cfg);
    std::vector<ControlSignal> us;
    for (int k : cfg.simulate_k)
        us.push_back(test_control(k, grid));
    const auto ys = truth_outputs(truth, us, ctx.threads, opts);
    for (std::size_t i = 0; i < ys.size(); ++i)
    {
        const auto path = ctx.out / "simulate" / ("y_k" + std::to_string(cfg.simulate_k[i]) + ".csv");
        write_trajectory_csv(path, ys[i], "y");
    }
    note(ctx, "simulate: wrote " + std::to_string(ys.size()) + " output trajectories");
    return ys.size();
}

LearnSummary cmd_learn(const ExperimentConfig& cfg, const RunContext& ctx)
{
    cfg.validate();
    const NonlinearSystem truth = make_truth(cfg);
    const NonlinearOptions opts = truth_options(cfg, truth);
    const Index n = cfg.signature_dim();

    // Blocks of controls are simulated in parallel and folded into the
    // factorization in control order. The block size is fixed: the fold
    // order changes the last bits, and output must not depend on threads.
    const auto train = training_controls(cfg);
    const Index block = 32;
    LeastSquaresAccumulator acc(n, truth.outputs);
    for (Index start = 0; start < cfg.n_train; start += block)
    {
        const Index len = std::min(block, cfg.n_train - start);
        std::vector<ControlSignal> chunk(train.begin() + start, train.begin() + start + len);
        const RegressionDataset data = assemble_dataset(chunk, truth, cfg.N, ctx.threads, opts);
        acc.add(data.features, data.targets);
    }
    LearnSummary summary;
    summary.fit = acc.solve(cfg.ridge_lambda);
    if (summary.fit.rank_deficient)
        note(ctx, "learn: warning: feature matrix has numerical rank " + std::to_string(summary.fit.effective_rank) +
                      " < " + std::to_string(n) + "; minimum-norm solution used");
    write_output_matrix(ctx.out / "C.csv", summary.fit.C, cfg.N, cfg.m);

    const auto tests = test_controls(cfg);
    const auto y = truth_outputs(truth, tests, ctx.threads, opts);
    write_output_family(ctx.out / "test_outputs.csv", y);
    const SignatureSystem full = make_signature_system(cfg.m, cfg.N, summary.fit.C);
    summary.e_sig = error_l2(y, model_outputs(full.system, tests, ctx.threads));

    Eigen::MatrixXd report(1, 7);
    report << static_cast<double>(summary.fit.rows), static_cast<double>(n), static_cast<double>(summary.fit.C.rows()),
        static_cast<double>(summary.fit.effective_rank), summary.fit.rank_deficient ? 1.0 : 0.0, summary.fit.residual,
        summary.e_sig;
    write_csv(ctx.out / "learn_report.csv",
              {"rows", "n", "p", "effective_rank", "rank_deficient", "residual", "E_sig"}, report);
    note(ctx, "learn: residual " + format_double(summary.fit.residual) + ", E_sig " + format_double(summary.e_sig));
    return summary;
}

double hankel_spectrum_residual(const Eigen::VectorXd& sigma, const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q)
{
    // PQ is similar to L_P^T Q L_P, which is symmetric; its eigenvalues are real.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ep(P);
    const Eigen::VectorXd lam = ep.eigenvalues().cwiseMax(0.0);
    const Eigen::MatrixXd root = ep.eigenvectors() * lam.cwiseSqrt().asDiagonal();
    Eigen::MatrixXd sym = root.transpose() * Q * root;
    detail::symmetrize(sym);
    Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly).eigenvalues();
    std::sort(ev.data(), ev.data() + ev.size(), std::greater<>());
    Eigen::VectorXd s2 = sigma.array().square();
    const Index n = std::max(ev.size(), s2.size());
    ev.conservativeResizeLike(Eigen::VectorXd::Zero(n));
    s2.conservativeResizeLike(Eigen::VectorXd::Zero(n));
    const double top = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
    return (ev - s2).cwiseAbs().maxCoeff() / top;
}

ReduceSummary cmd_reduce(const ExperimentConfig& cfg, const RunContext& ctx, const std::filesystem::path& c_file)
{
    cfg.validate();
    const OutputMatrixFile cf = read_output_matrix(c_file);
    if (cf.order != cfg.N || cf.inputs != cfg.m)
        throw IoError(c_file.string() + ": learned for N=" + std::to_string(cf.order) +
                      ", m=" + std::to_string(cf.inputs) + ", configuration differs");
    const SignatureSystem full = make_signature_system(cfg.m, cfg.N, cf.C);
    const Index n = full.system.dim();

    const GramianPair<double> g = gramian_series(full.system, cfg.N, cfg.T);
    ReduceSummary summary;
    summary.balancing = balance(g.P, g.Q);
    summary.residual = balancing_residual(summary.balancing, g.P, g.Q);
    summary.spectrum_residual = hankel_spectrum_residual(summary.balancing.sigma, g.P, g.Q);

    write_hankel_csv(ctx.out / "hankel.csv", hankel_report(summary.balancing.sigma));
    Eigen::VectorXd ep = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g.P, Eigen::EigenvaluesOnly).eigenvalues();
    Eigen::VectorXd eq = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g.Q, Eigen::EigenvaluesOnly).eigenvalues();
    write_spectrum_csv(ctx.out / "P_spectrum.csv", ep.reverse());
    write_spectrum_csv(ctx.out / "Q_spectrum.csv", eq.reverse());

    const Index rank = summary.balancing.effective_rank();
    Eigen::MatrixXd check(1, 7);
    check << static_cast<double>(rank), static_cast<double>(summary.balancing.rank_p),
        static_cast<double>(summary.balancing.rank_q), summary.residual.reachability,
        summary.residual.observability, summary.residual.inverse, summary.spectrum_residual;
    write_csv(ctx.out / "balancing_check.csv",
              {"effective_rank", "rank_P", "rank_Q", "reachability_residual", "observability_residual",
               "inverse_residual", "spectrum_residual"},
              check);
    if (rank < n)
        note(ctx, "reduce: Gramians have effective rank " + std::to_string(rank) + " < " + std::to_string(n));

    for (Index r : cfg.orders())
    {
        if (r == n)
        {
            // No truncation: the full model is its own order-n realization.
            write_system(rom_path(ctx, r), full.system);
        }
        else if (r > rank)
        {
            note(ctx, "reduce: r = " + std::to_string(r) + " exceeds the effective rank, truncating at " +
                          std::to_string(rank));
            write_system(rom_path(ctx, r), reduce(full.system, summary.balancing, rank));
        }
        else
        {
            write_system(rom_path(ctx, r), reduce(full.system, summary.balancing, r));
        }
        summary.orders.push_back(r);
    }
    note(ctx, "reduce: wrote " + std::to_string(summary.orders.size()) + " reduced systems");
    return summary;
}

std::vector<EvaluationRow> cmd_evaluate(const ExperimentConfig& cfg, const RunContext& ctx)
{
    cfg.validate();
    const OutputMatrixFile cf = read_output_matrix(ctx.out / "C.csv");
    if (cf.order != cfg.N || cf.inputs != cfg.m)
        throw IoError("C.csv was learned for a different (N, m)");
    const SignatureSystem full = make_signature_system(cfg.m, cfg.N, cf.C);
    const TimeGrid grid = config_grid(cfg);
    const auto tests = test_controls(cfg);
    const auto y = read_output_family(ctx.out / "test_outputs.csv", cfg.n_test, grid);
    const auto y_full = model_outputs(full.system, tests, ctx.threads);

    std::vector<EvaluationRow> rows;
    const std::vector<Index> orders = cfg.orders();
    Eigen::MatrixXd table(static_cast<Index>(orders.size()), 4);
    for (std::size_t i = 0; i < orders.size(); ++i)
    {
        const Index r = orders[i];
        const BilinearSystemd rom = read_system(rom_path(ctx, r));
        const auto y_red = model_outputs(rom, tests, ctx.threads);
        rows.push_back({r, compare_outputs(y, y_full, y_red)});
        table.row(static_cast<Index>(i)) << static_cast<double>(r), rows.back().errors.sig, rows.back().errors.mor,
            rows.back().errors.red_sig;
    }
    write_csv(ctx.out / "error_vs_r.csv", {"r", "E_sig", "E_MOR", "E_red_sig"}, table);
    note(ctx, "evaluate: wrote " + std::to_string(rows.size()) + " error rows");
    return rows;
}

std::vector<EvaluationRow> cmd_pipeline(const ExperimentConfig& cfg, const RunContext& ctx)
{
    cmd_simulate(cfg, ctx);
    cmd_learn(cfg, ctx);
    cmd_reduce(cfg, ctx, ctx.out / "C.csv");
    return cmd_evaluate(cfg, ctx);
}

} // namespace sigmor
