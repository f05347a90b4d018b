#include "slcd/repro.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "slcd/errors.hpp"

namespace slcd {

namespace {

struct BaselineRow {
    const char* method;
    double precision;
    double recall;
    int links;
};

// Published baselines: PC, GES, LINGAM IC, LINGAM Direct, BIC search.
const BaselineRow kBaselines[5][5] = {
    {{"PC", 0.33, 1, 2}, {"GES", 0.5, 0.5, 1}, {"LINGAM IC", 0, 0, 0}, {"LINGAM Direct", 0.33, 0.5, 1},
     {"BIC search", 0, 0, 0}},
    {{"PC", 0.5, 0.66, 2}, {"GES", 0.6, 1, 3}, {"LINGAM IC", 0.25, 0.33, 1}, {"LINGAM Direct", 0, 0, 0},
     {"BIC search", 0.75, 1, 3}},
    {{"PC", 0.37, 0.6, 3}, {"GES", 0.43, 0.6, 3}, {"LINGAM IC", 0, 0, 0}, {"LINGAM Direct", 0, 0, 0},
     {"BIC search", 0.43, 0.6, 3}},
    {{"PC", 1, 1, 6}, {"GES", 1, 1, 6}, {"LINGAM IC", 0.2, 0.33, 2}, {"LINGAM Direct", 0.1, 0.17, 1},
     {"BIC search", 0.67, 1, 6}},
    {{"PC", 0.3, 0.37, 3}, {"GES", 0.75, 0.75, 6}, {"LINGAM IC", 0.08, 0.12, 1}, {"LINGAM Direct", 0.13, 0.25, 2},
     {"BIC search", 0.54, 1, 6}},
};

Matrix rows_to_matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    Matrix m = Matrix::Zero(n, n);
    Eigen::Index i = 0;
    for (const auto& r : rows) {
        Eigen::Index j = 0;
        for (double v : r) {
            m(i, j++) = v;
        }
        ++i;
    }
    return m;
}

std::string num(double v, int digits = 4) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

std::string matrix_markdown(const Matrix& m) {
    std::ostringstream os;
    os << "```\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%10.4g", std::abs(m(i, j)) < 5e-13 ? 0.0 : m(i, j));
            os << buf;
        }
        os << '\n';
    }
    os << "```\n";
    return os.str();
}

std::string edges_text(const EdgeSet& edges) {
    std::string s;
    for (const Edge& e : edges) {
        s += (s.empty() ? "" : ", ") + ("x" + std::to_string(e.parent + 1)) + "->x" + std::to_string(e.child + 1);
    }
    return s.empty() ? "(none)" : s;
}

std::string status(const ReproCheck& c) {
    if (!c.gated) {
        return c.passed ? "reported (recovered; not gated)" : "reported (expected unrecovered; not gated)";
    }
    return c.passed ? "PASS" : "FAIL";
}

Json run_json(const DatasetRun& r) {
    Json j = {{"dataset", r.id}, {"spec_name", r.spec.name()}, {"data_seed", r.data.seed}};
    if (r.result) {
        j["result"] = to_json(*r.result);
        j["metrics"] = to_json(*r.metrics);
    } else {
        j["error"] = r.error;
    }
    return j;
}

std::vector<DatasetRun> run_all(const ReproOptions& opt) {
    std::vector<DatasetRun> runs;
    for (int id = opt.first; id <= opt.last; ++id) {
        runs.push_back(run_builtin(id, opt));
    }
    return runs;
}

void table2(const std::vector<DatasetRun>& runs, const ReproOptions& opt, ReproOutcome& out) {
    std::ostringstream md;
    md << "# Structural matrix recovery\n\n";
    md << "Each dataset: m = " << opt.m << ", (sigma, lambda) = (" << num(opt.hp.sigma) << ", " << num(opt.hp.lambda)
       << "), tau = " << opt.hp.tau << ", M = " << opt.hp.restarts << ", N = " << opt.hp.threshold_iterations
       << ".  Gate on datasets 2-5: true nonzeros within +-" << num(opt.coefficient_tolerance)
       << " and true zeros below " << num(opt.theta) << " in magnitude.\n\n";
    Json results = Json::array();
    for (const DatasetRun& r : runs) {
        const Matrix truth = structural_matrix(r.spec).matrix();
        ReproCheck check{r.id, "coefficients", r.id != 1, false, ""};
        md << "## Dataset " << r.id << "\n\nTrue matrix:\n" << matrix_markdown(truth);
        const Matrix printed = published_estimate(r.id);
        const CoefficientCheck published_cc = check_coefficients(printed, truth);
        md << "Published estimate:\n" << matrix_markdown(printed);
        md << "Published estimate: max deviation on true nonzeros " << num(published_cc.max_nonzero_deviation)
           << ", max magnitude on true zeros " << num(published_cc.max_zero_magnitude) << ".\n\n";
        if (r.result) {
            const CoefficientCheck cc = check_coefficients(r.result->d_opt, truth);
            check.passed =
                cc.max_nonzero_deviation <= opt.coefficient_tolerance && cc.max_zero_magnitude < opt.theta;
            check.detail = "max nonzero deviation " + num(cc.max_nonzero_deviation) + ", max zero magnitude " +
                           num(cc.max_zero_magnitude);
            md << "Computed estimate:\n" << matrix_markdown(r.result->d_opt);
            md << "Computed: " << check.detail << ", J = " << num(r.result->j_min, 10) << ".\n\n";
        } else {
            check.detail = "solver failed: " + r.error;
            md << "Computed estimate: " << check.detail << "\n\n";
        }
        md << "Status: " << status(check) << "\n\n";
        out.checks.push_back(check);
        results.push_back(run_json(r));
    }
    const auto md_path = opt.out_dir / "table2.md";
    const auto json_path = opt.out_dir / "table2.json";
    write_text_file(md_path, md.str());
    write_text_file(json_path, Json({{"format_version", kFormatVersion}, {"runs", results}}).dump(2) + "\n");
    out.files.push_back(md_path);
    out.files.push_back(json_path);
}

void table3(const std::vector<DatasetRun>& runs, const ReproOptions& opt, ReproOutcome& out) {
    std::ostringstream md;
    md << "# Edge recovery\n\n";
    md << "Links are off-diagonal entries with |d_ij| > " << num(opt.theta)
       << ". Gate on datasets 2-5: precision = recall = 1 and the printed number of correct links.\n\n";
    md << "| Dataset | Published P | Published R | Published links | P | R | Correct links | Estimated links | Status |\n";
    md << "|---|---|---|---|---|---|---|---|---|\n";
    std::ostringstream detail;
    Json results = Json::array();
    for (const DatasetRun& r : runs) {
        const PublishedSlcdRow& published = published_link_scores()[static_cast<std::size_t>(r.id - 1)];
        ReproCheck check{r.id, "edges", r.id != 1, false, ""};
        md << "| " << r.id << " | " << num(published.precision) << " | " << num(published.recall) << " | "
           << published.correct_links << " | ";
        if (r.metrics) {
            const MetricBundle& m = *r.metrics;
            check.passed = m.precision_defined && m.precision == 1.0 && m.recall == 1.0 &&
                           m.correct_links == published.correct_links && m.estimated_links == m.true_links;
            check.detail = "precision " + num(m.precision) + (m.precision_defined ? "" : " (undefined)") +
                           ", recall " + num(m.recall) + ", correct " + std::to_string(m.correct_links);
            md << num(m.precision) << (m.precision_defined ? "" : " (undefined)") << " | " << num(m.recall) << " | "
               << m.correct_links << " | " << m.estimated_links << " | " << status(check) << " |\n";
            detail << "Dataset " << r.id << ": estimated " << edges_text(extract_edges(r.result->d_opt, opt.theta))
                   << "; true " << edges_text(spec_edges(r.spec)) << ". Errors: reconstruction "
                   << num(m.reconstruction_error) << ", structure " << num(m.structure_error) << ", covariance "
                   << num(m.covariance_error) << ".\n\n";
        } else {
            check.detail = "solver failed: " + r.error;
            md << "- | - | - | - | " << status(check) << " |\n";
            detail << "Dataset " << r.id << ": " << check.detail << "\n\n";
        }
        out.checks.push_back(check);
        results.push_back(run_json(r));
    }
    md << "\n" << detail.str();
    md << "## Baselines (published values, not computed)\n\n";
    for (const DatasetRun& r : runs) {
        md << published_baselines_markdown(r.id) << "\n";
    }
    const auto md_path = opt.out_dir / "table3.md";
    const auto json_path = opt.out_dir / "table3.json";
    write_text_file(md_path, md.str());
    write_text_file(json_path, Json({{"format_version", kFormatVersion}, {"runs", results}}).dump(2) + "\n");
    out.files.push_back(md_path);
    out.files.push_back(json_path);
}

void figures(const ReproOptions& opt, ReproOutcome& out) {
    std::ostringstream md;
    md << "# Hyperparameter sweeps\n\n";
    md << "Grid sigma {";
    for (std::size_t k = 0; k < opt.sigma_grid.size(); ++k) {
        md << (k ? ", " : "") << num(opt.sigma_grid[k]);
    }
    md << "} x lambda {";
    for (std::size_t k = 0; k < opt.lambda_grid.size(); ++k) {
        md << (k ? ", " : "") << num(opt.lambda_grid[k]);
    }
    md << "}. Gate on datasets 2-5: a 4-connected region of at least " << opt.min_region
       << " cells with precision = recall = 1. The CSV files hold the three error metrics per cell.\n\n";
    const auto grid = grid_product(opt.sigma_grid, opt.lambda_grid);
    for (int id = opt.first; id <= opt.last; ++id) {
        const ScmSpec spec = builtin_spec(id);
        const Dataset data = sample(spec, opt.m, derive_seed(opt.seed, static_cast<std::uint64_t>(id)));
        SolverControls c = opt.controls;
        c.seed = derive_seed(opt.seed, 2000 + static_cast<std::uint64_t>(id));
        const SweepResult s = sweep(data, structural_matrix(spec).matrix(), grid, opt.hp, c, opt.theta, opt.jobs);
        const std::size_t region = largest_perfect_region(s);
        const auto csv_path = opt.out_dir / ("figures_dataset" + std::to_string(id) + ".csv");
        write_text_file(csv_path, sweep_csv(s));
        out.files.push_back(csv_path);

        ReproCheck check{id, "sweep_region", id != 1, region >= opt.min_region,
                         "largest perfect region " + std::to_string(region) + " of " + std::to_string(grid.size())};
        md << "## Dataset " << id << "\n\nRows sigma, columns lambda; `#` marks precision = recall = 1.\n\n```\n";
        for (double sg : opt.sigma_grid) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%6.3g ", sg);
            md << buf;
            for (double lm : opt.lambda_grid) {
                const auto it = std::find_if(s.cells.begin(), s.cells.end(), [&](const SweepCell& cell) {
                    return cell.point == GridPoint{sg, lm};
                });
                const bool good = it->metrics && it->metrics->precision_defined && it->metrics->precision == 1.0 &&
                                  it->metrics->recall == 1.0;
                md << (it->metrics ? (good ? " #" : " .") : " !");
            }
            md << '\n';
        }
        md << "```\n\n" << check.detail << ". Status: " << status(check) << "\n\n";
        out.checks.push_back(check);
    }
    const auto md_path = opt.out_dir / "figures.md";
    write_text_file(md_path, md.str());
    out.files.push_back(md_path);
}

}  // namespace

const std::array<PublishedSlcdRow, 5>& published_link_scores() {
    static const std::array<PublishedSlcdRow, 5> rows = {{{0, 0, 0}, {1, 1, 3}, {1, 1, 5}, {1, 1, 6}, {1, 1, 8}}};
    return rows;
}

Matrix published_estimate(int id) {
    switch (id) {
        case 1:
            return rows_to_matrix({{0, 0.5, 4.4e-7}, {2, 1, 1.1e-6}, {-1.2e-7, 0.2, 0}});
        case 2:
            return rows_to_matrix({{1, 0, -8.8e-4, 0}, {0, 1, -3.3e-4, 0}, {0.3, 0, -2.7e-4, 0}, {1.002, 1.999, 0, 0}});
        case 3:
            return rows_to_matrix({{0.999, 0.0497, 0, 0, 0},
                                   {0, 1.000, 0, 0, 0.0102},
                                   {0.976, 3.049, 0, 0, 0},
                                   {-0.0147, 1.999, 0, 0, 0},
                                   {1.990, 1.099, 0, 0, 0}});
        case 4:
            return rows_to_matrix({{0.999, -0.009, 0, 0, 0, 0},
                                   {0.016, 0.999, 0, 0, 0, 0},
                                   {-0.0432, 0, 0.997, 0, 0, 0},
                                   {0.987, 0, 0.3019, 0, 0, 0},
                                   {2.048, 2.982, 0, 0, 0, 0},
                                   {0, 1.995, 0.483, 0, 0, 0}});
        case 5:
            return rows_to_matrix({{0.997, 0.0525, 0, 0, 0, 0, 0},
                                   {-0.082, 0.994, 0, 0, 0, 0, 0},
                                   {0.057, 0, 0.998, 0, 0, 0, 0},
                                   {1.025, 0, 0.491, 0, 0, 0, 0},
                                   {0, 0.956, 2.024, 0, 0, 0, 0},
                                   {1.168, 0, 2.986, 0, 0, 0, 0},
                                   {0, 0.975, 1.025, 0, 0, 0, 0}});
        default:
            throw std::out_of_range("published_estimate: dataset id must be 1..5");
    }
}

std::string published_baselines_markdown(int id) {
    if (id < 1 || id > 5) {
        throw std::out_of_range("published_baselines_markdown: dataset id must be 1..5");
    }
    std::ostringstream md;
    md << "Dataset " << id << "\n\n| Method | Precision | Recall | Correct links |\n|---|---|---|---|\n";
    for (const BaselineRow& row : kBaselines[id - 1]) {
        md << "| " << row.method << " | " << num(row.precision) << " | " << num(row.recall) << " | " << row.links
           << " |\n";
    }
    const PublishedSlcdRow& s = published_link_scores()[static_cast<std::size_t>(id - 1)];
    md << "| SLCD (published) | " << num(s.precision) << " | " << num(s.recall) << " | " << s.correct_links << " |\n";
    return md.str();
}

DatasetRun run_builtin(int id, const ReproOptions& opt) {
    DatasetRun run{id, builtin_spec(id), {}, std::nullopt, std::nullopt, ""};
    run.data = sample(run.spec, opt.m, derive_seed(opt.seed, static_cast<std::uint64_t>(id)));
    SolverControls c = opt.controls;
    c.seed = derive_seed(opt.seed, 1000 + static_cast<std::uint64_t>(id));
    c.restart_seeds.clear();
    c.jobs = opt.jobs;
    try {
        run.result = run_slcd(run.data, opt.hp, c);
        run.metrics = evaluate(run.result->d_opt, run.data, structural_matrix(run.spec).matrix(), opt.theta);
    } catch (const DiscoveryFailed& e) {
        run.error = e.what();
    } catch (const NumericError& e) {
        run.error = e.what();
    }
    return run;
}

CoefficientCheck check_coefficients(const Matrix& d, const Matrix& d_true) {
    if (d.rows() != d_true.rows() || d.cols() != d_true.cols()) {
        throw std::invalid_argument("check_coefficients: shape mismatch");
    }
    CoefficientCheck c;
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        for (Eigen::Index j = 0; j < d.cols(); ++j) {
            if (d_true(i, j) != 0.0) {
                c.max_nonzero_deviation = std::max(c.max_nonzero_deviation, std::abs(d(i, j) - d_true(i, j)));
            } else {
                c.max_zero_magnitude = std::max(c.max_zero_magnitude, std::abs(d(i, j)));
            }
        }
    }
    return c;
}

bool ReproOutcome::ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const ReproCheck& c) { return !c.gated || c.passed; });
}

ReproOutcome repro(const std::string& which, const ReproOptions& opt) {
    if (which != "table2" && which != "table3" && which != "figures" && which != "all") {
        throw std::invalid_argument("repro: expected table2, table3, figures or all");
    }
    if (opt.first < 1 || opt.last > kBuiltinCount || opt.first > opt.last) {
        throw std::invalid_argument("repro: dataset range must lie within 1..5");
    }
    opt.hp.validate();
    opt.controls.validate();
    ReproOutcome out;
    if (which == "table2" || which == "table3" || which == "all") {
        const std::vector<DatasetRun> runs = run_all(opt);
        if (which != "table3") {
            table2(runs, opt, out);
        }
        if (which != "table2") {
            table3(runs, opt, out);
        }
    }
    if (which == "figures" || which == "all") {
        figures(opt, out);
    }
    return out;
}

}  // namespace slcd
