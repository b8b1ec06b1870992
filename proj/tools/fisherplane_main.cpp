// Command-line front end: train models, evaluate held-out NLL, emit
// Fisher-Shannon plane data, run the information-geometry oracle battery,
// and build the skewed training split.
//
// Exit codes: 0 ok, 1 check failure, 2 config error, 3 numeric error, 4 I/O.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fisherplane/estimators.hpp"
#include "fisherplane/info_geometry.hpp"
#include "fisherplane/trainer.hpp"

namespace fp = fisherplane;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

struct DataOptions {
    std::string data;  // directory of IDX files, "synthetic-digits" or "synthetic-gaussian"
    std::size_t n_train = 10000;
    std::size_t n_eval = 1000;
    std::size_t data_dim = 16;       // synthetic-gaussian only
    std::size_t components = 4;      // synthetic-gaussian only
    std::string binarize = "threshold";  // threshold | stochastic | none
    std::uint64_t seed = 1;
};

std::string resolve_data_arg(std::string data) {
    if (!data.empty()) return data;
    if (const char* env = std::getenv("FISHER_PLANE_DATA_DIR")) return env;
    throw fp::ContractError("--data is required (or set FISHER_PLANE_DATA_DIR)");
}

struct LoadedData {
    fp::Dataset train;
    fp::Dataset eval;
};

LoadedData load_data(const DataOptions& opt) {
    LoadedData out;
    const std::string data = resolve_data_arg(opt.data);
    if (data == "synthetic-digits") {
        out.train = fp::synthetic_digits(opt.n_train, fp::derive_seed(opt.seed, 0x7121));
        out.eval = fp::synthetic_digits(opt.n_eval, fp::derive_seed(opt.seed, 0x7122));
        out.eval.split = "test";
    } else if (data == "synthetic-gaussian") {
        out.train = fp::synthetic_gaussian_set(opt.n_train, opt.data_dim, opt.components,
                                               fp::derive_seed(opt.seed, 0x7123));
        out.eval = fp::synthetic_gaussian_set(opt.n_eval, opt.data_dim, opt.components,
                                              fp::derive_seed(opt.seed, 0x7124));
        out.eval.split = "test";
    } else {
        const std::filesystem::path dir(data);
        fp::Dataset train60k = fp::load_idx((dir / "train-images-idx3-ubyte").string(),
                                            (dir / "train-labels-idx1-ubyte").string());
        out.eval = fp::load_idx((dir / "t10k-images-idx3-ubyte").string(),
                                (dir / "t10k-labels-idx1-ubyte").string());
        out.eval.split = "test";
        out.train = std::move(train60k);
        if (opt.n_train > 0 && opt.n_train < out.train.size()) out.train = out.train.take(opt.n_train);
        if (opt.n_eval > 0 && opt.n_eval < out.eval.size()) out.eval = out.eval.take(opt.n_eval);
    }
    if (opt.binarize == "threshold") {
        out.train = fp::binarize(out.train, fp::BinarizeMode::kThreshold);
        out.eval = fp::binarize(out.eval, fp::BinarizeMode::kThreshold);
    } else if (opt.binarize == "stochastic") {
        out.train = fp::binarize(out.train, fp::BinarizeMode::kStochastic,
                                 fp::derive_seed(opt.seed, 0xb1));
        out.eval = fp::binarize(out.eval, fp::BinarizeMode::kStochastic,
                                fp::derive_seed(opt.seed, 0xb2));
    } else if (opt.binarize != "none") {
        throw fp::ContractError("--binarize must be threshold, stochastic, or none");
    }
    return out;
}

void write_manifest(const std::string& out_dir, const json& resolved) {
    json manifest = resolved;
    manifest["timestamp_unix"] =
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count();
    std::filesystem::create_directories(out_dir);
    std::ofstream f(out_dir + "/manifest.json", std::ios::trunc);
    if (!f) throw fp::IoError("cannot write manifest in '" + out_dir + "'");
    f << manifest.dump(2) << "\n";
}

fp::Checkpoint load_checkpoint_or_exit4(const std::string& path) {
    try {
        return fp::load_checkpoint(path);
    } catch (const fp::ContractError&) {
        throw;
    } catch (const std::exception& e) {
        throw fp::IoError("cannot read checkpoint '" + path + "': " + e.what());
    }
}

// ------------------------------------------------------------------ train ---

int cmd_train(const DataOptions& data_opt, fp::RunConfig run, const std::string& objective,
              const std::string& likelihood) {
    run.objective = fp::objective_from_name(objective);
    run.likelihood = fp::likelihood_from_name(likelihood);
    run.validate();
    if (run.out_dir.empty()) throw fp::ContractError("--out is required");

    LoadedData data = load_data(data_opt);
    if (run.likelihood == fp::Likelihood::kBernoulli && data_opt.binarize == "none") {
        throw fp::ContractError("bernoulli likelihood requires binarized data");
    }

    json resolved;
    resolved["subcommand"] = "train";
    resolved["objective"] = objective;
    resolved["likelihood"] = likelihood;
    resolved["data"] = resolve_data_arg(data_opt.data);
    resolved["binarize"] = data_opt.binarize;
    resolved["n_train"] = data.train.size();
    resolved["n_eval"] = data.eval.size();
    resolved["lambda_z"] = run.lambda_z;
    resolved["lambda_x"] = run.lambda_x;
    resolved["f_z"] = run.f_z;
    resolved["f_x"] = run.f_x;
    resolved["mae_c"] = run.mae_c;
    resolved["mae_m"] = run.mae_m;
    resolved["epochs"] = run.epochs;
    resolved["batch_size"] = run.batch_size;
    resolved["lr"] = run.lr;
    resolved["seed"] = run.seed;
    resolved["eval_every"] = run.eval_every;
    resolved["latent_dim"] = run.latent_dim;
    resolved["hidden"] = run.hidden_dims();
    resolved["final_nll_k"] = run.final_nll_k;
    resolved["out"] = run.out_dir;
    write_manifest(run.out_dir, resolved);

    const fp::TrainResult result = fp::train(run, data.train, data.eval);
    if (result.log.status == 3) {
        std::cerr << "numeric abort: " << result.log.status_message << "\n";
        return kExitNumeric;
    }
    if (!result.log.epochs.empty()) {
        const auto& last = result.log.epochs.back();
        std::cout << "trained " << result.log.epochs.size() << " epochs, final elbo "
                  << last.mean.elbo << ", wall " << result.log.wall_seconds << " s\n";
    } else {
        std::cout << "trained 0 epochs (initialized checkpoint written)\n";
    }
    return kExitOk;
}

// ------------------------------------------------------------------- eval ---

int cmd_eval(const std::string& checkpoint, const DataOptions& data_opt, std::size_t k,
             std::uint64_t seed, const std::string& out_dir) {
    const fp::Checkpoint ckpt = load_checkpoint_or_exit4(checkpoint);
    const fp::VaeModel model = fp::model_from_checkpoint(ckpt);
    LoadedData data = load_data(data_opt);
    const fp::NllEstimate est = fp::iwae_nll(model, data.eval, k, seed);
    const double elbo = fp::dataset_elbo(model, data.eval, seed);
    std::cout << "nll " << fp::format_double17(est.nll) << " +- "
              << fp::format_double17(est.std_err) << " nats (K=" << k << ", n=" << data.eval.size()
              << "), elbo " << fp::format_double17(elbo) << "\n";
    if (!out_dir.empty()) {
        json resolved;
        resolved["subcommand"] = "eval";
        resolved["checkpoint"] = checkpoint;
        resolved["k"] = k;
        resolved["seed"] = seed;
        resolved["n_eval"] = data.eval.size();
        write_manifest(out_dir, resolved);
        json r;
        r["nll"] = est.nll;
        r["std_err"] = est.std_err;
        r["k"] = k;
        r["elbo"] = elbo;
        std::ofstream f(out_dir + "/eval.json", std::ios::trunc);
        f << r.dump(2) << "\n";
    }
    return kExitOk;
}

// --------------------------------------------------------------- fs-plane ---

int cmd_fs_plane(const std::vector<std::string>& checkpoints, const DataOptions& data_opt,
                 const std::string& csv_path, std::size_t k, std::uint64_t seed) {
    if (checkpoints.empty()) throw fp::ContractError("fs-plane needs at least one checkpoint");
    LoadedData data = load_data(data_opt);

    std::string csv = "model,epoch,entropy_power,fisher_trace,product,elbo,nll\n";
    for (const std::string& path : checkpoints) {
        const fp::Checkpoint ckpt = load_checkpoint_or_exit4(path);
        const fp::VaeModel model = fp::model_from_checkpoint(ckpt);
        const fp::FsTraceEntry entry = fp::fs_trace_record(model, ckpt.epoch, data.eval, seed);
        std::string nll_field;
        if (k > 0) {
            nll_field = fp::format_double17(fp::iwae_nll(model, data.eval, k, seed).nll);
        }
        csv += std::filesystem::path(path).filename().string();
        csv += "," + std::to_string(entry.epoch);
        csv += "," + fp::format_double17(entry.point.entropy_power);
        csv += "," + fp::format_double17(entry.point.fisher_trace);
        csv += "," + fp::format_double17(entry.point.product);
        csv += "," + fp::format_double17(entry.elbo);
        csv += "," + nll_field + "\n";
    }
    {
        std::ofstream f(csv_path, std::ios::trunc);
        if (!f) throw fp::IoError("cannot write '" + csv_path + "'");
        f << csv;
    }

    // Reference NJ curve (product = 1) for plotting alongside model points.
    const std::string nj_path = csv_path + ".nj.csv";
    std::ofstream nj(nj_path, std::ios::trunc);
    if (!nj) throw fp::IoError("cannot write '" + nj_path + "'");
    nj << "entropy_power,fisher_trace,product\n";
    constexpr int kPoints = 200;
    for (int i = 0; i < kPoints; ++i) {
        const double t = static_cast<double>(i) / (kPoints - 1);
        const double n = std::pow(10.0, -2.0 + 4.0 * t);  // 1e-2 .. 1e2
        const double j = 1.0 / n;
        nj << fp::format_double17(n) << "," << fp::format_double17(j) << ","
           << fp::format_double17(n * j) << "\n";
    }
    std::cout << "wrote " << csv_path << " and " << nj_path << "\n";
    return kExitOk;
}

// -------------------------------------------------------------- info-check ---

struct CheckRow {
    std::string name;
    double value = 0.0;
    double want = 0.0;
    double tol = 0.0;
    bool lower_bound_only = false;
    bool pass = false;
};

int cmd_info_check(double grid_step) {
    if (!(grid_step > 0.0)) throw fp::ContractError("--grid-step must be positive");
    std::vector<CheckRow> rows;
    // Quadrature error in the numeric estimators is dominated by the O(h^2)
    // central difference, so tolerances widen by 10*h^2 past the defaults.
    const double widen = 10.0 * grid_step * grid_step;

    auto check_eq = [&](const std::string& name, double value, double want, double tol) {
        rows.push_back({name, value, want, tol, false, std::fabs(value - want) <= tol});
    };
    auto check_ge = [&](const std::string& name, double value, double bound, double tol) {
        rows.push_back({name, value, bound, tol, true, value >= bound - tol});
    };

    // Closed-form Gaussian products: equality for isotropic sigma, >= 1 always.
    {
        fp::Rng rng(7);
        double worst_eq = 0.0;
        double worst_lb = 1e300;
        for (int i = 0; i < 200; ++i) {
            const std::size_t d = 1 + rng.next_u64() % 8;
            const double s = rng.uniform(0.05, 20.0);
            fp::DiagGaussian iso{std::vector<double>(d, 0.0), std::vector<double>(d, s)};
            const fp::InfoPoint p = fp::fs_point_of_posterior({iso});
            worst_eq = std::max(worst_eq, std::fabs(p.product - 1.0));
            fp::DiagGaussian gen{std::vector<double>(d, 0.0), std::vector<double>(d, s)};
            for (double& sv : gen.sigma) sv = rng.uniform(0.05, 20.0);
            worst_lb = std::min(worst_lb, fp::fs_point_of_posterior({gen}).product);
        }
        check_eq("gaussian closed-form N*J (isotropic)", 1.0 + worst_eq, 1.0, 1e-12);
        check_ge("gaussian closed-form N*J (general)", worst_lb, 1.0, 1e-9);
    }
    // Numeric estimators on Gaussians.
    for (double s : {0.5, 1.0, 2.0}) {
        const fp::Density1D g = fp::gaussian_density(0.0, s);
        check_eq("gaussian N*J sigma=" + std::to_string(s).substr(0, 3),
                 fp::uncertainty_product(g, grid_step * s), 1.0, 1e-2 + widen);
    }
    // Laplace product 2e/pi.
    {
        const double want = 2.0 * std::numbers::e / std::numbers::pi;
        check_eq("laplace N*J", fp::uncertainty_product(fp::laplace_density(1.0), grid_step), want,
                 5e-2 + widen);
    }
    // Cramer-Rao over the 1-D family; equality for the Gaussian member.
    {
        const std::vector<fp::Density1D> family = {
            fp::gaussian_density(0.0, 0.7), fp::gaussian_density(0.3, 1.5),
            fp::laplace_density(1.0), fp::logistic_density(1.0),
            fp::gaussian_mixture_density(-2.0, 1.0, 2.0, 1.0, 0.5)};
        double worst = 1e300;
        for (const fp::Density1D& f : family) {
            const double step = grid_step;
            worst = std::min(worst,
                             fp::numeric_variance_1d(f, step) * fp::numeric_fisher_1d(f, step));
        }
        check_ge("cramer-rao var*J over family", worst, 1.0, 1e-2 + widen);
        const fp::Density1D g = fp::gaussian_density(0.0, 0.7);
        check_eq("cramer-rao gaussian equality",
                 fp::numeric_variance_1d(g, grid_step * 0.7) *
                     fp::numeric_fisher_1d(g, grid_step * 0.7),
                 1.0, 1e-2 + widen);
    }
    // Appendix-style parametric vs non-parametric FI: the two quadrature
    // routes must agree relatively regardless of grid.
    for (double s : {1.0, 3.0, 0.2}) {
        const auto [np, par] = fp::parametric_nonparametric_check(s, grid_step);
        check_eq("parametric/non-parametric FI sigma=" + std::to_string(s).substr(0, 3),
                 std::fabs(np - par) / std::fabs(np), 0.0, 1e-6);
    }
    // Gaussian log-FI / entropy duality.
    for (double s : {1.0, 2.0, 0.1}) {
        const auto [lhs, rhs] =
            fp::conditional_entropy_fi_duality({std::vector<double>{0.0}, std::vector<double>{s}});
        check_eq("log-J = -2H + c duality sigma=" + std::to_string(s).substr(0, 3), lhs - rhs, 0.0,
                 1e-9);
    }

    bool all_pass = true;
    for (const CheckRow& r : rows) {
        all_pass = all_pass && r.pass;
        std::printf("%s  %-46s value=%.6g  %s%.6g (tol %.3g)\n", r.pass ? "PASS" : "FAIL",
                    r.name.c_str(), r.value, r.lower_bound_only ? ">= " : "want ", r.want, r.tol);
    }
    if (!all_pass) {
        std::cerr << "info-check: one or more oracle checks failed\n";
        return kExitCheckFailure;
    }
    return kExitOk;
}

// -------------------------------------------------------------- make-skewed ---

int cmd_make_skewed(const DataOptions& data_opt, const std::string& out_dir, std::uint64_t seed) {
    LoadedData data = load_data(data_opt);
    const fp::Dataset skewed = fp::build_skewed_split(data.train, seed);
    std::filesystem::create_directories(out_dir);
    const std::size_t side = static_cast<std::size_t>(std::lround(std::sqrt(double(skewed.dim))));
    fp::save_idx(out_dir + "/skewed-images-idx3-ubyte", out_dir + "/skewed-labels-idx1-ubyte",
                 skewed, side, side);
    json resolved;
    resolved["subcommand"] = "make-skewed";
    resolved["data"] = resolve_data_arg(data_opt.data);
    resolved["seed"] = seed;
    resolved["size"] = skewed.size();
    write_manifest(out_dir, resolved);
    std::cout << "wrote skewed split of " << skewed.size() << " examples to " << out_dir << "\n";
    return kExitOk;
}

// ----------------------------------------------------------------- report ---

fp::RunLog read_runlog(const std::string& dir) {
    std::ifstream f(dir + "/runlog.jsonl");
    if (!f) throw fp::IoError("cannot open '" + dir + "/runlog.jsonl'");
    fp::RunLog log;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw fp::ParseError("bad runlog line in '" + dir + "': " + e.what());
        }
        fp::EpochRecord rec;
        rec.epoch = j.at("epoch").get<std::size_t>();
        rec.mean.elbo = j.at("elbo").get<double>();
        rec.mean.recon = j.at("recon").get<double>();
        rec.mean.kl = j.at("kl").get<double>();
        rec.mean.fi_term_z = j.at("fi_term_z").get<double>();
        rec.mean.fi_term_x = j.at("fi_term_x").get<double>();
        rec.mean.mi_term = j.at("mi_term").get<double>();
        if (j.contains("entropy_power")) {
            rec.has_eval = true;
            rec.point.entropy_power = j.at("entropy_power").get<double>();
            rec.point.fisher_trace = j.at("fisher_trace").get<double>();
            rec.point.product = j.at("product").get<double>();
            rec.eval_elbo = j.at("eval_elbo").get<double>();
        }
        if (j.contains("nll")) {
            fp::NllEstimate est;
            est.nll = j.at("nll").get<double>();
            est.std_err = j.at("nll_std_err").get<double>();
            rec.nll = est;
        }
        log.epochs.push_back(std::move(rec));
    }
    return log;
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& csv_path) {
    std::vector<std::pair<std::string, fp::RunLog>> logs;
    for (const std::string& dir : run_dirs) {
        logs.emplace_back(std::filesystem::path(dir).filename().string(), read_runlog(dir));
    }
    const std::vector<fp::RunSummary> rows = fp::compare_runs(logs);
    std::printf("%-24s %12s %10s %12s %10s %10s %6s\n", "run", "nll", "se", "elbo", "N", "trJ",
                "sig");
    std::string csv = "run,nll,nll_std_err,elbo,entropy_power,fisher_trace,product,sig_worse\n";
    for (const fp::RunSummary& r : rows) {
        std::printf("%-24s %12.4f %10.4f %12.4f %10.4f %10.4f %6s\n", r.name.c_str(), r.nll,
                    r.nll_std_err, r.elbo, r.point.entropy_power, r.point.fisher_trace,
                    r.significantly_worse_than_best ? "*" : "");
        csv += r.name + "," + fp::format_double17(r.nll) + "," + fp::format_double17(r.nll_std_err) +
               "," + fp::format_double17(r.elbo) + "," + fp::format_double17(r.point.entropy_power) +
               "," + fp::format_double17(r.point.fisher_trace) + "," +
               fp::format_double17(r.point.product) + "," +
               (r.significantly_worse_than_best ? "1" : "0") + "\n";
    }
    if (!csv_path.empty()) {
        std::ofstream f(csv_path, std::ios::trunc);
        if (!f) throw fp::IoError("cannot write '" + csv_path + "'");
        f << csv;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fisher auto-encoders and the Fisher-Shannon information plane"};
    app.require_subcommand(1);

    DataOptions data_opt;
    fp::RunConfig run;
    std::string objective = "vae";
    std::string likelihood = "bernoulli";
    std::size_t depth = 0;

    auto add_data_flags = [&](CLI::App* cmd, bool require_data) {
        auto* o = cmd->add_option("--data", data_opt.data,
                                  "IDX directory, synthetic-digits, or synthetic-gaussian");
        if (require_data && !std::getenv("FISHER_PLANE_DATA_DIR")) o->required();
        cmd->add_option("--n-train", data_opt.n_train, "training examples");
        cmd->add_option("--n-eval", data_opt.n_eval, "held-out examples");
        cmd->add_option("--data-dim", data_opt.data_dim, "synthetic-gaussian dimension");
        cmd->add_option("--components", data_opt.components, "synthetic-gaussian components");
        cmd->add_option("--binarize", data_opt.binarize, "threshold | stochastic | none");
    };

    CLI::App* t = app.add_subcommand("train", "train a vae/fae/mae model");
    add_data_flags(t, true);
    t->add_option("--objective", objective, "vae | fae | mae")->required();
    t->add_option("--out", run.out_dir, "output directory")->required();
    t->add_option("--likelihood", likelihood, "bernoulli | diag-gaussian");
    t->add_option("--fz", run.f_z, "encoder FI target per dimension");
    t->add_option("--fx", run.f_x, "decoder FI target per dimension");
    t->add_option("--lambda-z", run.lambda_z, "encoder FI penalty weight");
    t->add_option("--lambda-x", run.lambda_x, "decoder FI penalty weight");
    t->add_option("--c", run.mae_c, "MAE MI penalty weight");
    t->add_option("--m", run.mae_m, "MAE MI target");
    t->add_option("--epochs", run.epochs, "training epochs");
    t->add_option("--batch", run.batch_size, "batch size");
    t->add_option("--lr", run.lr, "Adam learning rate");
    t->add_option("--seed", run.seed, "run seed");
    t->add_option("--eval-every", run.eval_every, "evaluation cadence in epochs");
    t->add_option("--latent", run.latent_dim, "latent dimension");
    t->add_option("--hidden", run.hidden, "hidden widths")->delimiter(',');
    t->add_option("--depth", depth, "override: total linear layers of width 300");
    t->add_option("--nll-k", run.final_nll_k, "IWAE K for the final-epoch NLL (0 = skip)");
    t->add_option("--eval-subset", run.eval_subset, "eval examples for the FS trace");
    t->add_option("--max-steps", run.max_steps, "cap on optimizer steps (0 = none)");

    CLI::App* e = app.add_subcommand("eval", "importance-sampled NLL of a checkpoint");
    std::string checkpoint;
    std::size_t eval_k = 100;
    std::uint64_t eval_seed = 1;
    std::string eval_out;
    e->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    add_data_flags(e, true);
    e->add_option("--k", eval_k, "importance samples per example");
    e->add_option("--seed", eval_seed, "evaluation seed");
    e->add_option("--out", eval_out, "optional output directory");

    CLI::App* f = app.add_subcommand("fs-plane", "emit FS-plane CSV for checkpoints");
    std::vector<std::string> fs_checkpoints;
    std::string fs_csv;
    std::size_t fs_k = 0;
    std::uint64_t fs_seed = 1;
    f->add_option("checkpoints", fs_checkpoints, "checkpoint files")->required();
    add_data_flags(f, true);
    f->add_option("--csv", fs_csv, "output CSV path")->required();
    f->add_option("--k", fs_k, "importance samples for the nll column (0 = omit)");
    f->add_option("--seed", fs_seed, "evaluation seed");

    CLI::App* ic = app.add_subcommand("info-check", "run the information-geometry oracle battery");
    double grid_step = 1e-3;
    ic->add_option("--grid-step", grid_step, "quadrature grid step");

    CLI::App* mk = app.add_subcommand("make-skewed", "build the 5800/100x9 skewed training split");
    std::string mk_out;
    std::uint64_t mk_seed = 1;
    add_data_flags(mk, true);
    mk->add_option("--out", mk_out, "output directory")->required();
    mk->add_option("--seed", mk_seed, "shuffle seed");

    CLI::App* rp = app.add_subcommand("report", "rank finished runs by held-out NLL");
    std::vector<std::string> run_dirs;
    std::string report_csv;
    rp->add_option("runs", run_dirs, "run directories with runlog.jsonl")->required();
    rp->add_option("--csv", report_csv, "optional CSV output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        if (err.get_exit_code() == 0) return app.exit(err);  // --help
        app.exit(err);
        return kExitConfig;
    }

    try {
        if (t->parsed()) {
            data_opt.seed = run.seed;
            if (depth > 0) run.depth_override = depth;
            return cmd_train(data_opt, run, objective, likelihood);
        }
        if (e->parsed()) {
            data_opt.seed = eval_seed;
            return cmd_eval(checkpoint, data_opt, eval_k, eval_seed, eval_out);
        }
        if (f->parsed()) {
            data_opt.seed = fs_seed;
            return cmd_fs_plane(fs_checkpoints, data_opt, fs_csv, fs_k, fs_seed);
        }
        if (ic->parsed()) return cmd_info_check(grid_step);
        if (mk->parsed()) {
            data_opt.seed = mk_seed;
            return cmd_make_skewed(data_opt, mk_out, mk_seed);
        }
        if (rp->parsed()) return cmd_report(run_dirs, report_csv);
    } catch (const fp::NumericError& e2) {
        std::cerr << "numeric error: " << e2.what() << "\n";
        return kExitNumeric;
    } catch (const fp::IoError& e2) {
        std::cerr << "io error: " << e2.what() << "\n";
        return kExitIo;
    } catch (const fp::ParseError& e2) {
        std::cerr << "parse error: " << e2.what() << "\n";
        return kExitIo;
    } catch (const fp::ContractError& e2) {
        std::cerr << "config error: " << e2.what() << "\n";
        return kExitConfig;
    } catch (const fp::ShapeError& e2) {
        std::cerr << "config error: " << e2.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e2) {
        std::cerr << "error: " << e2.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
