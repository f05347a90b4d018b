#include "slcd/serialize.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace slcd {

namespace {

Json matrix_rows(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Json edges_json(const EdgeSet& edges) {
    Json out = Json::array();
    for (const Edge& e : edges) {
        out.push_back({{"parent", e.parent}, {"child", e.child}});
    }
    return out;
}

const Json& require(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) {
        throw FormatError(std::string("missing key \"") + key + "\"");
    }
    return j.at(key);
}

template <class T>
T get_as(const Json& j, const char* key) {
    try {
        return require(j, key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad value for \"") + key + "\": " + e.what());
    }
}

std::string method_name(InnerMethod m) { return m == InnerMethod::Lbfgs ? "lbfgs" : "gradient_descent"; }

InnerMethod method_from(const std::string& s) {
    if (s == "lbfgs") {
        return InnerMethod::Lbfgs;
    }
    if (s == "gradient_descent") {
        return InnerMethod::GradientDescent;
    }
    throw FormatError("unknown inner method \"" + s + "\"");
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

bool parse_double(std::string_view s, double& out) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            out.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
    return std::filesystem::path(path.string() + ".json");
}

}  // namespace

Json to_json(const StructuralMatrix& d) { return {{"n", d.n()}, {"rows", matrix_rows(d.matrix())}}; }

Json to_json(const Distribution& dist) {
    if (dist.is_uniform()) {
        return {{"kind", "uniform"}, {"a", dist.as_uniform().a}, {"b", dist.as_uniform().b}};
    }
    return {{"kind", "gaussian"}, {"mean", dist.as_gaussian().mean}, {"variance", dist.as_gaussian().variance}};
}

Json to_json(const ScmSpec& spec) {
    Json vars = Json::array();
    for (const VariableDef& v : spec.variables()) {
        if (v.is_independent()) {
            vars.push_back({{"role", "independent"}, {"dist", to_json(v.distribution())}});
        } else {
            Json terms = Json::array();
            for (const Term& t : v.terms()) {
                terms.push_back(Json::array({t.parent, t.coefficient}));
            }
            vars.push_back({{"role", "dependent"}, {"terms", std::move(terms)}});
        }
    }
    return {{"name", spec.name()}, {"variables", std::move(vars)}};
}

Json to_json(const ObjectiveBreakdown& b) {
    return {{"smoothed_rank", b.smoothed_rank}, {"smoothed_trace", b.smoothed_trace},
            {"recon_residual", b.recon_residual}, {"cov_residual", b.cov_residual}, {"total", b.total}};
}

Json to_json(const MetricBundle& m) {
    return {{"format_version", kFormatVersion},
            {"reconstruction_error", m.reconstruction_error},
            {"structure_error", m.structure_error},
            {"covariance_error", m.covariance_error},
            {"precision", m.precision},
            {"precision_defined", m.precision_defined},
            {"recall", m.recall},
            {"correct_links", m.correct_links},
            {"estimated_links", m.estimated_links},
            {"true_links", m.true_links}};
}

Json to_json(const Hyperparams& hp) {
    Json j = {{"sigma", hp.sigma}, {"lambda", hp.lambda}, {"tau", hp.tau}};
    j["eps1"] = hp.eps1 ? Json(*hp.eps1) : Json(nullptr);
    j["eps2"] = hp.eps2 ? Json(*hp.eps2) : Json(nullptr);
    j["threshold_iterations"] = hp.threshold_iterations;
    j["restarts"] = hp.restarts;
    return j;
}

Json to_json(const SolverControls& c) {
    return {{"method", method_name(c.method)},
            {"max_inner_steps", c.max_inner_steps},
            {"step_init", c.step_init},
            {"backtrack_factor", c.backtrack_factor},
            {"armijo_c", c.armijo_c},
            {"penalty_mu_init", c.penalty_mu_init},
            {"penalty_growth", c.penalty_growth},
            {"penalty_outer_rounds", c.penalty_outer_rounds},
            {"grad_tol", c.grad_tol},
            {"lbfgs_memory", c.lbfgs_memory},
            {"seed", c.seed},
            {"support_search", c.support_search},
            {"basis_radius", c.basis_radius},
            {"max_refine_steps", c.max_refine_steps},
            {"tie_tolerance", c.tie_tolerance},
            {"polish_support", c.polish_support}};
}

Json to_json(const RestartRecord& r) {
    Json j = {{"index", r.index},
              {"seed", r.seed},
              {"objective", r.objective},
              {"breakdown", to_json(r.breakdown)},
              {"best_pass", r.best_pass},
              {"iterations", r.iterations},
              {"running_min", r.running_min},
              {"aborted", r.aborted}};
    if (r.aborted) {
        j["message"] = r.message;
    }
    j["wall_ms"] = r.wall_ms;
    return j;
}

Json to_json(const DiscoveryResult& r) {
    Json restarts = Json::array();
    for (const RestartRecord& rec : r.restarts) {
        restarts.push_back(to_json(rec));
    }
    return {{"format_version", kFormatVersion},
            {"d_opt", to_json(StructuralMatrix(r.d_opt))},
            {"j_min", r.j_min},
            {"breakdown", to_json(r.breakdown)},
            {"winning_restart", r.winning_restart},
            {"reference_weights", {{"mu1", r.reference.mu1}, {"mu2", r.reference.mu2}}},
            {"hyperparams", to_json(r.hp)},
            {"controls", to_json(r.controls)},
            {"restarts", std::move(restarts)}};
}

Json to_json(const SweepResult& s) {
    Json cells = Json::array();
    for (const SweepCell& c : s.cells) {
        Json cell = {{"sigma", c.point.sigma}, {"lambda", c.point.lambda}};
        if (c.metrics) {
            cell["metrics"] = to_json(*c.metrics);
            cell["j_min"] = c.j_min;
        } else {
            cell["error"] = c.error;
        }
        cell["wall_ms"] = c.wall_ms;
        cells.push_back(std::move(cell));
    }
    return {{"format_version", kFormatVersion}, {"dataset", s.dataset},     {"theta", s.theta},
            {"base", to_json(s.base)},          {"controls", to_json(s.controls)}, {"cells", std::move(cells)}};
}

StructuralMatrix structural_matrix_from_json(const Json& j) {
    const auto n = get_as<std::size_t>(j, "n");
    const Json& rows = require(j, "rows");
    if (!rows.is_array() || rows.size() != n) {
        throw FormatError("\"rows\" must hold n rows");
    }
    Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (!rows[i].is_array() || rows[i].size() != n) {
            throw FormatError("row " + std::to_string(i) + " must hold n entries");
        }
        for (std::size_t k = 0; k < n; ++k) {
            if (!rows[i][k].is_number()) {
                throw FormatError("non-numeric matrix entry");
            }
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k].get<double>();
        }
    }
    try {
        return StructuralMatrix(std::move(m));
    } catch (const std::invalid_argument& e) {
        throw FormatError(e.what());
    }
}

Distribution distribution_from_json(const Json& j) {
    const auto kind = get_as<std::string>(j, "kind");
    try {
        if (kind == "uniform") {
            return Distribution::uniform(get_as<double>(j, "a"), get_as<double>(j, "b"));
        }
        if (kind == "gaussian") {
            return Distribution::gaussian(get_as<double>(j, "mean"), get_as<double>(j, "variance"));
        }
    } catch (const std::invalid_argument& e) {
        throw FormatError(e.what());
    }
    throw FormatError("unknown distribution kind \"" + kind + "\"");
}

ScmSpec spec_from_json(const Json& j) {
    const auto name = get_as<std::string>(j, "name");
    const Json& vars = require(j, "variables");
    if (!vars.is_array()) {
        throw FormatError("\"variables\" must be an array");
    }
    std::vector<VariableDef> defs;
    try {
        for (const Json& v : vars) {
            const auto role = get_as<std::string>(v, "role");
            if (role == "independent") {
                defs.push_back(VariableDef::independent(distribution_from_json(require(v, "dist"))));
            } else if (role == "dependent") {
                std::vector<Term> terms;
                for (const Json& t : require(v, "terms")) {
                    if (!t.is_array() || t.size() != 2 || !t[0].is_number_unsigned() || !t[1].is_number()) {
                        throw FormatError("a term must be [parent_index, coefficient]");
                    }
                    terms.push_back({t[0].get<std::size_t>(), t[1].get<double>()});
                }
                defs.push_back(VariableDef::dependent(std::move(terms)));
            } else {
                throw FormatError("unknown role \"" + role + "\"");
            }
        }
        return ScmSpec(name, std::move(defs));
    } catch (const std::invalid_argument& e) {
        throw FormatError(e.what());
    }
}

void apply_json(const Json& j, Hyperparams& hp) {
    if (!j.is_object()) {
        throw FormatError("hyperparameters must be an object");
    }
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "sigma") {
                hp.sigma = value.get<double>();
            } else if (key == "lambda") {
                hp.lambda = value.get<double>();
            } else if (key == "tau") {
                hp.tau = value.get<std::size_t>();
            } else if (key == "eps1") {
                hp.eps1 = value.is_null() ? std::nullopt : std::optional<double>(value.get<double>());
            } else if (key == "eps2") {
                hp.eps2 = value.is_null() ? std::nullopt : std::optional<double>(value.get<double>());
            } else if (key == "threshold_iterations") {
                hp.threshold_iterations = value.get<std::size_t>();
            } else if (key == "restarts") {
                hp.restarts = value.get<std::size_t>();
            } else {
                throw FormatError("unknown hyperparameter \"" + key + "\"");
            }
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("bad value for \"" + key + "\": " + e.what());
        }
    }
}

void apply_json(const Json& j, SolverControls& c) {
    if (!j.is_object()) {
        throw FormatError("solver controls must be an object");
    }
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "method") {
                c.method = method_from(value.get<std::string>());
            } else if (key == "max_inner_steps") {
                c.max_inner_steps = value.get<std::size_t>();
            } else if (key == "step_init") {
                c.step_init = value.get<double>();
            } else if (key == "backtrack_factor") {
                c.backtrack_factor = value.get<double>();
            } else if (key == "armijo_c") {
                c.armijo_c = value.get<double>();
            } else if (key == "penalty_mu_init") {
                c.penalty_mu_init = value.get<double>();
            } else if (key == "penalty_growth") {
                c.penalty_growth = value.get<double>();
            } else if (key == "penalty_outer_rounds") {
                c.penalty_outer_rounds = value.get<std::size_t>();
            } else if (key == "grad_tol") {
                c.grad_tol = value.get<double>();
            } else if (key == "lbfgs_memory") {
                c.lbfgs_memory = value.get<std::size_t>();
            } else if (key == "seed") {
                c.seed = value.get<std::uint64_t>();
            } else if (key == "support_search") {
                c.support_search = value.get<bool>();
            } else if (key == "basis_radius") {
                c.basis_radius = value.get<std::size_t>();
            } else if (key == "max_refine_steps") {
                c.max_refine_steps = value.get<std::size_t>();
            } else if (key == "tie_tolerance") {
                c.tie_tolerance = value.get<double>();
            } else if (key == "polish_support") {
                c.polish_support = value.get<bool>();
            } else if (key == "jobs") {
                c.jobs = value.get<unsigned>();
            } else {
                throw FormatError("unknown solver control \"" + key + "\"");
            }
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("bad value for \"" + key + "\": " + e.what());
        }
    }
}

Matrix estimate_from_result_json(const Json& j) { return structural_matrix_from_json(require(j, "d_opt")).matrix(); }

Json strip_wall_clock(Json j) {
    if (j.is_object()) {
        j.erase("wall_ms");
        for (auto& [key, value] : j.items()) {
            value = strip_wall_clock(std::move(value));
        }
    } else if (j.is_array()) {
        for (auto& value : j) {
            value = strip_wall_clock(std::move(value));
        }
    }
    return j;
}

void write_csv(std::ostream& os, const Matrix& x) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        os << (i ? "," : "") << 'x' << (i + 1);
    }
    os << '\n';
    for (Eigen::Index s = 0; s < x.cols(); ++s) {
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            os << (i ? "," : "") << format_double(x(i, s));
        }
        os << '\n';
    }
}

Matrix read_csv(std::istream& is) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t width = 0;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") {
            continue;
        }
        const auto fields = split(line);
        std::vector<double> values;
        bool numeric = true;
        for (std::string_view f : fields) {
            double v = 0.0;
            if (!parse_double(f, v)) {
                numeric = false;
                break;
            }
            values.push_back(v);
        }
        if (!numeric) {
            if (rows.empty() && width == 0) {
                width = fields.size();  // header
                continue;
            }
            throw FormatError("line " + std::to_string(lineno) + ": non-numeric field");
        }
        if (width == 0) {
            width = values.size();
        }
        if (values.size() != width) {
            throw FormatError("line " + std::to_string(lineno) + ": expected " + std::to_string(width) + " fields");
        }
        rows.push_back(std::move(values));
    }
    if (rows.empty()) {
        throw FormatError("no samples");
    }
    Matrix x(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t s = 0; s < rows.size(); ++s) {
        for (std::size_t i = 0; i < width; ++i) {
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s)) = rows[s][i];
        }
    }
    return x;
}

void write_dataset(const std::filesystem::path& path, const Dataset& ds, const std::optional<ScmSpec>& spec) {
    std::ostringstream csv;
    write_csv(csv, ds.x);
    write_text_file(path, csv.str());
    Json side = {{"format_version", kFormatVersion}, {"spec_name", ds.spec_name}, {"seed", ds.seed},
                 {"m", ds.m()},                      {"n", ds.n()},               {"centered", ds.centered}};
    if (spec) {
        const EdgeSet edges = spec_edges(*spec);
        side["true_links"] = edges.size();
        side["edges"] = edges_json(edges);
        side["spec"] = to_json(*spec);
    }
    write_text_file(sidecar_path(path), side.dump(2) + "\n");
}

Dataset read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    Dataset ds;
    ds.x = read_csv(in);
    ds.spec_name = path.stem().string();
    const auto side = sidecar_path(path);
    if (std::filesystem::exists(side)) {
        const Json j = read_json_file(side);
        ds.spec_name = get_as<std::string>(j, "spec_name");
        ds.seed = get_as<std::uint64_t>(j, "seed");
        ds.centered = get_as<bool>(j, "centered");
        if (get_as<std::size_t>(j, "m") != ds.m()) {
            throw FormatError("sidecar sample count does not match " + path.string());
        }
    }
    return ds;
}

std::optional<ScmSpec> read_sidecar_spec(const std::filesystem::path& path) {
    const auto side = sidecar_path(path);
    if (!std::filesystem::exists(side)) {
        return std::nullopt;
    }
    const Json j = read_json_file(side);
    if (!j.contains("spec")) {
        return std::nullopt;
    }
    return spec_from_json(j.at("spec"));
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw FormatError("write failed for " + path.string());
    }
}

}  // namespace slcd
