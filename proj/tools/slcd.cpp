#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "slcd/errors.hpp"
#include "slcd/repro.hpp"

namespace {

using namespace slcd;

enum Exit : int { kOk = 0, kTolerance = 1, kUsage = 2, kIo = 3, kNumeric = 4 };

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Flags that override the config file, which overrides the defaults.
struct TuningFlags {
    std::string config;
    std::optional<double> sigma;
    std::optional<double> lambda;
    std::optional<std::size_t> tau;
    std::optional<double> eps1;
    std::optional<double> eps2;
    std::optional<std::size_t> iterations;
    std::optional<std::size_t> restarts;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> jobs;
    std::optional<std::string> method;
    std::optional<double> theta;

    void add_to(CLI::App& app) {
        app.add_option("--config", config, "JSON config with \"hyperparams\" and \"controls\" objects");
        app.add_option("--sigma", sigma, "smoothing width");
        app.add_option("--lambda", lambda, "trace weight");
        app.add_option("--tau", tau, "nonzeros kept per row");
        app.add_option("--eps1", eps1, "reconstruction slack (squared Frobenius)");
        app.add_option("--eps2", eps2, "covariance slack (squared Frobenius)");
        app.add_option("--iterations", iterations, "solve-then-threshold passes per restart (N)");
        app.add_option("--restarts", restarts, "random restarts (M)");
        app.add_option("--seed", seed, "master seed");
        app.add_option("--jobs", jobs, "worker threads, 0 for all cores");
        app.add_option("--method", method, "inner solver")->check(CLI::IsMember({"lbfgs", "gradient_descent"}));
        app.add_option("--theta", theta, "edge threshold");
    }
};

struct Tuning {
    Hyperparams hp;
    SolverControls controls;
    double theta = kDefaultEdgeThreshold;
    Json config = Json::object();
};

Tuning resolve(const TuningFlags& f) {
    Tuning t;
    t.controls.jobs = 0;
    if (!f.config.empty()) {
        t.config = read_json_file(f.config);
        if (!t.config.is_object()) {
            throw FormatError(f.config + ": top level must be an object");
        }
        if (t.config.contains("hyperparams")) {
            apply_json(t.config["hyperparams"], t.hp);
        }
        if (t.config.contains("controls")) {
            apply_json(t.config["controls"], t.controls);
        }
        if (t.config.contains("theta")) {
            t.theta = t.config["theta"].get<double>();
        }
    }
    if (f.sigma) t.hp.sigma = *f.sigma;
    if (f.lambda) t.hp.lambda = *f.lambda;
    if (f.tau) t.hp.tau = *f.tau;
    if (f.eps1) t.hp.eps1 = *f.eps1;
    if (f.eps2) t.hp.eps2 = *f.eps2;
    if (f.iterations) t.hp.threshold_iterations = *f.iterations;
    if (f.restarts) t.hp.restarts = *f.restarts;
    if (f.seed) t.controls.seed = *f.seed;
    if (f.jobs) t.controls.jobs = *f.jobs;
    if (f.method) t.controls.method = *f.method == "lbfgs" ? InnerMethod::Lbfgs : InnerMethod::GradientDescent;
    if (f.theta) t.theta = *f.theta;
    try {
        t.hp.validate();
        t.controls.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (!(t.theta > 0.0)) {
        throw UsageError("theta must be positive");
    }
    return t;
}

std::vector<double> grid_from_config(const Json& config, const char* key, std::vector<double> fallback) {
    if (!config.contains(key)) {
        return fallback;
    }
    return config[key].get<std::vector<double>>();
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

void print_matrix(const Matrix& d) {
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        for (Eigen::Index j = 0; j < d.cols(); ++j) {
            std::printf("%10.4f", std::abs(d(i, j)) < 5e-13 ? 0.0 : d(i, j));
        }
        std::printf("\n");
    }
}

void print_metrics(const MetricBundle& m) {
    std::printf("reconstruction_error %s\n", fmt(m.reconstruction_error).c_str());
    std::printf("structure_error      %s\n", fmt(m.structure_error).c_str());
    std::printf("covariance_error     %s\n", fmt(m.covariance_error).c_str());
    std::printf("precision            %s%s\n", fmt(m.precision).c_str(), m.precision_defined ? "" : " (undefined)");
    std::printf("recall               %s\n", fmt(m.recall).c_str());
    std::printf("correct_links        %zu of %zu (estimated %zu)\n", m.correct_links, m.true_links,
                m.estimated_links);
}

ScmSpec spec_from_args(int dataset, const std::string& spec_file) {
    if (!spec_file.empty()) {
        return spec_from_json(read_json_file(spec_file));
    }
    try {
        return builtin_spec(dataset);
    } catch (const std::out_of_range&) {
        throw UsageError("--dataset must be 1.." + std::to_string(kBuiltinCount));
    }
}

int run(int argc, char** argv) {
    CLI::App app{"Sparse linear causal discovery"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "sample a built-in or file-defined SCM to CSV");
    int gen_dataset = 0;
    std::string gen_spec;
    std::size_t gen_m = 1000;
    std::uint64_t gen_seed = 1;
    std::string gen_out;
    auto* gen_ds_opt = gen->add_option("--dataset", gen_dataset, "built-in dataset 1..5");
    gen->add_option("--spec", gen_spec, "SCM spec JSON")->excludes(gen_ds_opt);
    gen->add_option("--m", gen_m, "sample count");
    gen->add_option("--seed", gen_seed, "sampling seed");
    gen->add_option("--out", gen_out, "CSV path; the sidecar goes to <path>.json")->required();

    // discover
    auto* disc = app.add_subcommand("discover", "estimate the structural matrix of a CSV dataset");
    std::string disc_data;
    std::string disc_out;
    TuningFlags disc_flags;
    disc->add_option("--data", disc_data, "dataset CSV")->required();
    disc->add_option("--out", disc_out, "result JSON")->required();
    disc_flags.add_to(*disc);

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "score a result against a ground truth");
    std::string eval_result;
    std::string eval_data;
    std::string eval_spec;
    int eval_dataset = 0;
    std::string eval_out;
    double eval_theta = kDefaultEdgeThreshold;
    eval->add_option("--result", eval_result, "result JSON from discover")->required();
    eval->add_option("--data", eval_data, "dataset CSV")->required();
    auto* eval_ds_opt = eval->add_option("--dataset", eval_dataset, "built-in truth 1..5");
    eval->add_option("--truth", eval_spec, "truth SCM spec JSON (default: the dataset sidecar)")
        ->excludes(eval_ds_opt);
    eval->add_option("--theta", eval_theta, "edge threshold");
    eval->add_option("--out", eval_out, "metrics JSON");

    // sweep
    auto* sw = app.add_subcommand("sweep", "grid over (sigma, lambda)");
    std::string sw_data;
    int sw_dataset = 0;
    std::size_t sw_m = 1000;
    std::uint64_t sw_data_seed = 1;
    std::vector<double> sw_sigmas;
    std::vector<double> sw_lambdas;
    std::string sw_out;
    std::string sw_json;
    TuningFlags sw_flags;
    auto* sw_ds_opt = sw->add_option("--dataset", sw_dataset, "built-in dataset 1..5, sampled fresh");
    sw->add_option("--data", sw_data, "dataset CSV with a spec sidecar")->excludes(sw_ds_opt);
    sw->add_option("--m", sw_m, "sample count with --dataset");
    sw->add_option("--data-seed", sw_data_seed, "sampling seed with --dataset");
    sw->add_option("--sigmas", sw_sigmas, "sigma grid")->delimiter(',');
    sw->add_option("--lambdas", sw_lambdas, "lambda grid")->delimiter(',');
    sw->add_option("--out", sw_out, "tidy CSV")->required();
    sw->add_option("--json", sw_json, "full sweep JSON");
    sw_flags.add_to(*sw);

    // repro
    auto* rep = app.add_subcommand("repro", "rerun the reference experiments and write reports");
    std::string rep_which = "all";
    std::string rep_out = "repro_out";
    std::size_t rep_m = 1000;
    TuningFlags rep_flags;
    rep->add_option("which", rep_which, "table2, table3, figures or all")
        ->check(CLI::IsMember({"table2", "table3", "figures", "all"}));
    rep->add_option("--out-dir", rep_out, "report directory");
    rep->add_option("--m", rep_m, "samples per dataset");
    rep_flags.add_to(*rep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    if (gen->parsed()) {
        if (gen_m == 0) {
            throw UsageError("--m must be positive");
        }
        if (gen_dataset == 0 && gen_spec.empty()) {
            throw UsageError("generate needs --dataset or --spec");
        }
        const ScmSpec spec = spec_from_args(gen_dataset, gen_spec);
        const Dataset ds = sample(spec, gen_m, gen_seed);
        write_dataset(gen_out, ds, spec);
        std::printf("wrote %s (%zu x %zu), %zu true links\n", gen_out.c_str(), ds.m(), ds.n(),
                    spec_edges(spec).size());
        return kOk;
    }

    if (disc->parsed()) {
        const Tuning t = resolve(disc_flags);
        const Dataset ds = read_dataset(disc_data);
        try {
            const DiscoveryResult r = run_slcd(ds, t.hp, t.controls);
            write_text_file(disc_out, to_json(r).dump(2) + "\n");
            std::printf("J = %s (restart %zu of %zu)\n", fmt(r.j_min).c_str(), r.winning_restart, r.restarts.size());
            print_matrix(r.d_opt);
            std::printf("edges (theta %s): %zu\n", fmt(t.theta).c_str(), extract_edges(r.d_opt, t.theta).size());
        } catch (const DiscoveryFailed& e) {
            Json records = Json::array();
            for (const RestartRecord& rec : e.records()) {
                records.push_back(to_json(rec));
            }
            write_text_file(disc_out, Json({{"format_version", kFormatVersion},
                                            {"error", e.what()},
                                            {"restarts", records}})
                                              .dump(2) +
                                          "\n");
            std::fprintf(stderr, "error: %s\n", e.what());
            return kNumeric;
        }
        return kOk;
    }

    if (eval->parsed()) {
        if (!(eval_theta > 0.0)) {
            throw UsageError("--theta must be positive");
        }
        const Dataset ds = read_dataset(eval_data);
        std::optional<ScmSpec> spec;
        if (eval_dataset != 0 || !eval_spec.empty()) {
            spec = spec_from_args(eval_dataset, eval_spec);
        } else {
            spec = read_sidecar_spec(eval_data);
        }
        if (!spec) {
            throw UsageError("no ground truth: pass --dataset or --truth, or use a dataset with a spec sidecar");
        }
        const Matrix d = estimate_from_result_json(read_json_file(eval_result));
        const Matrix truth = structural_matrix(*spec).matrix();
        if (d.rows() != truth.rows() || static_cast<std::size_t>(d.rows()) != ds.n()) {
            throw UsageError("result, truth and data disagree on the number of variables");
        }
        const MetricBundle m = evaluate(d, ds, truth, eval_theta);
        print_metrics(m);
        if (!eval_out.empty()) {
            write_text_file(eval_out, to_json(m).dump(2) + "\n");
        }
        return kOk;
    }

    if (sw->parsed()) {
        const Tuning t = resolve(sw_flags);
        Dataset ds;
        std::optional<ScmSpec> spec;
        if (!sw_data.empty()) {
            ds = read_dataset(sw_data);
            spec = read_sidecar_spec(sw_data);
            if (!spec) {
                throw UsageError("--data needs a sidecar holding its spec");
            }
        } else {
            if (sw_dataset == 0) {
                throw UsageError("sweep needs --dataset or --data");
            }
            if (sw_m < 2) {
                throw UsageError("--m must be at least 2");
            }
            spec = spec_from_args(sw_dataset, "");
            ds = sample(*spec, sw_m, sw_data_seed);
        }
        const auto sigmas = sw_sigmas.empty() ? grid_from_config(t.config, "sigma_grid", default_sigma_grid())
                                              : sw_sigmas;
        const auto lambdas = sw_lambdas.empty() ? grid_from_config(t.config, "lambda_grid", default_lambda_grid())
                                                : sw_lambdas;
        SweepResult s;
        try {
            s = sweep(ds, structural_matrix(*spec).matrix(), grid_product(sigmas, lambdas), t.hp, t.controls, t.theta,
                      t.controls.jobs);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        write_text_file(sw_out, sweep_csv(s));
        if (!sw_json.empty()) {
            write_text_file(sw_json, to_json(s).dump(2) + "\n");
        }
        std::printf("%zu cells, largest perfect region %zu\n", s.cells.size(), largest_perfect_region(s));
        return kOk;
    }

    if (rep->parsed()) {
        const Tuning t = resolve(rep_flags);
        ReproOptions opt;
        opt.out_dir = rep_out;
        opt.m = rep_m;
        opt.hp = t.hp;
        opt.controls = t.controls;
        opt.theta = t.theta;
        opt.jobs = t.controls.jobs;
        if (rep_flags.seed) {
            opt.seed = *rep_flags.seed;
        } else if (t.config.contains("controls") && t.config["controls"].contains("seed")) {
            opt.seed = t.controls.seed;
        }
        opt.sigma_grid = grid_from_config(t.config, "sigma_grid", opt.sigma_grid);
        opt.lambda_grid = grid_from_config(t.config, "lambda_grid", opt.lambda_grid);
        if (opt.m < 2) {
            throw UsageError("--m must be at least 2");
        }
        const ReproOutcome out = repro(rep_which, opt);
        for (const ReproCheck& c : out.checks) {
            std::printf("%-5s dataset %d %-13s %s\n",
                        !c.gated ? "INFO" : (c.passed ? "PASS" : "FAIL"), c.dataset, c.name.c_str(),
                        c.detail.c_str());
        }
        for (const auto& f : out.files) {
            std::printf("wrote %s\n", f.string().c_str());
        }
        return out.ok() ? kOk : kTolerance;
    }
    return kUsage;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kUsage;
    } catch (const FormatError& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return kIo;
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return kIo;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return kNumeric;
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return kIo;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kUsage;
    }
}
