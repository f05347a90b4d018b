#include "slcd/solver.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <thread>

namespace slcd {

namespace {

double frob_dot(const Matrix& a, const Matrix& b) {
    return (a.array() * b.array()).sum();
}

struct InnerStats {
    std::size_t steps = 0;
};

// Backtracking line search along `dir` from `x`. Returns the accepted step or
// 0 when the step collapses.
double armijo(const PenalizedObjective& obj, const PenaltyWeights& w, const Matrix& x, double fx,
              const Matrix& dir, double slope, double t, const SolverControls& c, Matrix& x_next,
              double& f_next) {
    constexpr double kMinStep = 1e-20;
    while (t > kMinStep) {
        x_next = x + t * dir;
        double trial = std::numeric_limits<double>::infinity();
        try {
            trial = obj.evaluate(x_next, w.mu1, w.mu2).total;
        } catch (const NumericError&) {
            // Overshoot into a non-finite region: shrink and retry.
        }
        if (trial <= fx + c.armijo_c * t * slope) {
            f_next = trial;
            return t;
        }
        t *= c.backtrack_factor;
    }
    return 0.0;
}

// Gradient restricted to the free entries. A null mask frees every entry.
double masked_gradient(const PenalizedObjective& obj, const PenaltyWeights& w, const Matrix& x, const Matrix* mask,
                       Matrix& g) {
    const double f = obj.evaluate_with_gradient(x, w.mu1, w.mu2, g);
    if (mask != nullptr) {
        g.array() *= mask->array();
    }
    return f;
}

InnerStats minimize_lbfgs(const PenalizedObjective& obj, const PenaltyWeights& w, Matrix& x,
                          const SolverControls& c, const Matrix* mask) {
    InnerStats stats;
    Matrix g;
    double fx = masked_gradient(obj, w, x, mask, g);
    std::deque<std::pair<Matrix, Matrix>> history;
    std::vector<double> alpha;
    Matrix x_next;
    Matrix g_next;
    for (; stats.steps < c.max_inner_steps; ++stats.steps) {
        const double gnorm = g.norm();
        if (gnorm < c.grad_tol) {
            break;
        }
        Matrix dir;
        if (history.empty()) {
            dir = -(c.step_init / gnorm) * g;
        } else {
            Matrix q = g;
            alpha.assign(history.size(), 0.0);
            for (std::size_t k = history.size(); k-- > 0;) {
                const auto& [s, y] = history[k];
                alpha[k] = frob_dot(s, q) / frob_dot(y, s);
                q -= alpha[k] * y;
            }
            const auto& [s_last, y_last] = history.back();
            q *= frob_dot(s_last, y_last) / frob_dot(y_last, y_last);
            for (std::size_t k = 0; k < history.size(); ++k) {
                const auto& [s, y] = history[k];
                const double beta = frob_dot(y, q) / frob_dot(y, s);
                q += (alpha[k] - beta) * s;
            }
            dir = -q;
        }
        double slope = frob_dot(g, dir);
        if (!(slope < 0.0)) {
            history.clear();
            dir = -(c.step_init / gnorm) * g;
            slope = frob_dot(g, dir);
        }
        double f_next = fx;
        const double t = armijo(obj, w, x, fx, dir, slope, 1.0, c, x_next, f_next);
        if (t == 0.0) {
            if (history.empty()) {
                break;
            }
            history.clear();
            continue;
        }
        f_next = masked_gradient(obj, w, x_next, mask, g_next);
        Matrix s = x_next - x;
        Matrix y = g_next - g;
        const double sy = frob_dot(s, y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            history.emplace_back(std::move(s), std::move(y));
            if (history.size() > c.lbfgs_memory) {
                history.pop_front();
            }
        }
        x.swap(x_next);
        g.swap(g_next);
        fx = f_next;
    }
    return stats;
}

InnerStats minimize_gd(const PenalizedObjective& obj, const PenaltyWeights& w, Matrix& x,
                       const SolverControls& c, const Matrix* mask) {
    InnerStats stats;
    Matrix g;
    double fx = masked_gradient(obj, w, x, mask, g);
    double step = c.step_init;
    Matrix x_next;
    for (; stats.steps < c.max_inner_steps; ++stats.steps) {
        const double g2 = g.squaredNorm();
        if (std::sqrt(g2) < c.grad_tol) {
            break;
        }
        double f_next = fx;
        const Matrix dir = -g;
        const double t = armijo(obj, w, x, fx, dir, -g2, step, c, x_next, f_next);
        if (t == 0.0) {
            break;
        }
        x.swap(x_next);
        fx = masked_gradient(obj, w, x, mask, g);
        step = t / c.backtrack_factor;
    }
    return stats;
}

}  // namespace

void SolverControls::validate() const {
    if (max_inner_steps == 0 || penalty_outer_rounds == 0 || lbfgs_memory == 0) {
        throw std::invalid_argument("solver step, round and memory counts must be positive");
    }
    if (!(step_init > 0.0) || !(backtrack_factor > 0.0 && backtrack_factor < 1.0) ||
        !(armijo_c > 0.0 && armijo_c < 1.0)) {
        throw std::invalid_argument("line search controls out of range");
    }
    if (!(penalty_mu_init > 0.0) || !(penalty_growth > 1.0) || !(grad_tol >= 0.0)) {
        throw std::invalid_argument("penalty controls out of range");
    }
    if (!(tie_tolerance >= 0.0) || !std::isfinite(tie_tolerance)) {
        throw std::invalid_argument("tie_tolerance must be finite and nonnegative");
    }
}

PenaltyWeights penalty_weights(const PenalizedObjective& obj, const SolverControls& c, std::size_t round) {
    const double mu = c.penalty_mu_init * std::pow(c.penalty_growth, static_cast<double>(round));
    return {mu / (obj.recon_scale() * obj.recon_scale()), mu / (obj.cov_scale() * obj.cov_scale())};
}

PenaltyWeights reference_weights(const PenalizedObjective& obj, const SolverControls& c) {
    return penalty_weights(obj, c, c.penalty_outer_rounds - 1);
}

RelaxedSolution solve_relaxed(const Matrix& d_init, const PenalizedObjective& obj, const SolverControls& c,
                              const Matrix* support) {
    c.validate();
    if (d_init.rows() != static_cast<Eigen::Index>(obj.n()) || d_init.cols() != d_init.rows()) {
        throw std::invalid_argument("solve_relaxed: initial matrix has the wrong shape");
    }
    RelaxedSolution out;
    out.d = d_init;
    for (std::size_t round = 0; round < c.penalty_outer_rounds; ++round) {
        const PenaltyWeights w = penalty_weights(obj, c, round);
        const InnerStats stats = c.method == InnerMethod::Lbfgs ? minimize_lbfgs(obj, w, out.d, c, support)
                                                                : minimize_gd(obj, w, out.d, c, support);
        out.iterations += stats.steps;
        out.weights = w;
    }
    const double start = obj.evaluate(d_init, out.weights.mu1, out.weights.mu2).total;
    const double end = obj.evaluate(out.d, out.weights.mu1, out.weights.mu2).total;
    if (end > start) {
        out.d = d_init;
    }
    return out;
}

RelaxedSolution solve_relaxed(const Matrix& d_init, const Matrix& x, const Matrix& sigma, const Vector& sigma_diag,
                              const Hyperparams& hp, const SolverControls& c) {
    return solve_relaxed(d_init, PenalizedObjective(x, sigma, sigma_diag, hp), c, nullptr);
}

Matrix support_mask(const Matrix& d) {
    return (d.array() != 0.0).cast<double>().matrix();
}

std::vector<std::size_t> independent_set(const Matrix& d) {
    std::vector<std::size_t> out;
    for (Eigen::Index i = 0; i < std::min(d.rows(), d.cols()); ++i) {
        if (std::abs(d(i, i)) >= 0.5) {
            out.push_back(static_cast<std::size_t>(i));
        }
    }
    return out;
}

bool preferred(double fa, const std::vector<std::size_t>& set_a, double fb, const std::vector<std::size_t>& set_b,
               double tie_tol) {
    if (!std::isfinite(fa)) {
        return false;
    }
    if (!std::isfinite(fb)) {
        return true;
    }
    const double band = tie_tol * std::max({1.0, std::abs(fa), std::abs(fb)});
    if (std::abs(fa - fb) > band) {
        return fa < fb;
    }
    return set_a < set_b;
}

Matrix row_threshold(const Matrix& d, std::size_t tau) {
    const auto n = static_cast<std::size_t>(d.cols());
    if (tau == 0 || tau > n) {
        throw std::invalid_argument("row_threshold: tau must lie in 1..n");
    }
    Matrix out = Matrix::Zero(d.rows(), d.cols());
    std::vector<Eigen::Index> order(n);
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](Eigen::Index a, Eigen::Index b) { return std::abs(d(i, a)) > std::abs(d(i, b)); });
        for (std::size_t k = 0; k < tau; ++k) {
            out(i, order[k]) = d(i, order[k]);
        }
    }
    return out;
}

PenalizedObjective make_objective(const Dataset& data, const Hyperparams& hp) {
    const Dataset centered = center(data);
    auto cov = sample_covariance(centered);
    return PenalizedObjective(centered.x, std::move(cov.sigma), std::move(cov.sigma_diag), hp);
}

namespace {

// Least-squares row over `parents`, or nullopt when they are collinear.
std::optional<Vector> fit_row(const Matrix& gram, Eigen::Index i, const std::vector<Eigen::Index>& parents) {
    const auto k = static_cast<Eigen::Index>(parents.size());
    Matrix g(k, k);
    Vector b(k);
    for (Eigen::Index a = 0; a < k; ++a) {
        b(a) = gram(i, parents[a]);
        for (Eigen::Index c = 0; c < k; ++c) {
            g(a, c) = gram(parents[a], parents[c]);
        }
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(g);
    qr.setThreshold(1e-10);
    if (qr.rank() < k) {
        return std::nullopt;
    }
    Vector coef = qr.solve(b);
    Vector row = Vector::Zero(gram.rows());
    for (Eigen::Index a = 0; a < k; ++a) {
        row(parents[a]) = coef(a);
    }
    return row;
}

// Calls visit(parents) for every subset of `pool` with 1..k elements.
template <class F>
void for_each_subset(const std::vector<Eigen::Index>& pool, std::size_t k, F&& visit) {
    std::vector<Eigen::Index> cur;
    auto rec = [&](auto&& self, std::size_t start) -> void {
        if (!cur.empty()) {
            visit(cur);
        }
        if (cur.size() == k) {
            return;
        }
        for (std::size_t s = start; s < pool.size(); ++s) {
            cur.push_back(pool[s]);
            self(self, s + 1);
            cur.pop_back();
        }
    };
    rec(rec, 0);
}

}  // namespace

namespace {

// The matrix whose rows in `basis` are unit rows and whose other rows are the
// best least-squares fits on at most tau basis columns.
Matrix matrix_for_basis(const std::vector<Eigen::Index>& basis, const Matrix& gram, std::size_t tau) {
    const auto n = gram.rows();
    Matrix d = Matrix::Zero(n, n);
    std::vector<bool> in(static_cast<std::size_t>(n), false);
    for (Eigen::Index b : basis) {
        in[static_cast<std::size_t>(b)] = true;
        d(b, b) = 1.0;
    }
    const std::size_t k = std::min(tau, basis.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        if (in[static_cast<std::size_t>(i)] || k == 0) {
            continue;
        }
        // Residual of the fit is gram(i,i) - b^T coef; smaller parent sets
        // win unless a larger one is clearly better.
        double best_res = gram(i, i);
        for_each_subset(basis, k, [&](const std::vector<Eigen::Index>& parents) {
            const auto row = fit_row(gram, i, parents);
            if (!row) {
                return;
            }
            const double res = gram(i, i) - row->dot(gram.col(i));
            if (res < best_res - 1e-10 * gram(i, i)) {
                best_res = res;
                d.row(i) = row->transpose();
            }
        });
    }
    return d;
}

// Best independent set within Hamming distance `radius` of the current one;
// updates `cur` and `best` when it improves.
bool basis_move(Matrix& cur, double& best, const PenalizedObjective& obj, std::size_t tau, const PenaltyWeights& w,
                std::size_t radius, double tie_tol) {
    const auto n = static_cast<Eigen::Index>(obj.n());
    std::vector<bool> in(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        in[static_cast<std::size_t>(i)] = std::abs(cur(i, i)) >= 0.5;
    }
    std::optional<Matrix> pick;
    double pick_f = best;
    std::vector<std::size_t> pick_set = independent_set(cur);
    std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), Eigen::Index{0});
    auto visit = [&](const std::vector<Eigen::Index>& flips) {
        std::vector<bool> next = in;
        for (Eigen::Index f : flips) {
            next[static_cast<std::size_t>(f)] = !next[static_cast<std::size_t>(f)];
        }
        std::vector<Eigen::Index> b;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (next[static_cast<std::size_t>(i)]) {
                b.push_back(i);
            }
        }
        Matrix trial = matrix_for_basis(b, obj.gram(), tau);
        const double f = obj.evaluate(trial, w.mu1, w.mu2).total;
        std::vector<std::size_t> set(b.begin(), b.end());
        if (preferred(f, set, pick_f, pick_set, tie_tol)) {
            pick_f = f;
            pick_set = std::move(set);
            pick = std::move(trial);
        }
    };
    visit({});
    for_each_subset(all, radius, visit);
    if (!pick) {
        return false;
    }
    cur = std::move(*pick);
    best = pick_f;
    return true;
}

}  // namespace

Matrix refine_support(const Matrix& d, const PenalizedObjective& obj, std::size_t tau, const PenaltyWeights& w,
                      const SolverControls& c) {
    const auto n = static_cast<Eigen::Index>(obj.n());
    if (d.rows() != n || d.cols() != n) {
        throw std::invalid_argument("refine_support: dimension mismatch");
    }
    tau = std::min<std::size_t>(tau, obj.n());
    Matrix cur = d;
    double best = obj.evaluate(cur, w.mu1, w.mu2).total;
    for (std::size_t step = 0; step < c.max_refine_steps; ++step) {
        if (!basis_move(cur, best, obj, tau, w, c.basis_radius, c.tie_tolerance)) {
            break;
        }
    }
    return cur;
}

double objective_of(const Matrix& d, const Dataset& data, const Hyperparams& hp, const SolverControls& controls) {
    const PenalizedObjective obj = make_objective(data, hp);
    const PenaltyWeights w = reference_weights(obj, controls);
    return obj.evaluate(d, w.mu1, w.mu2).total;
}

namespace {

RestartRecord run_restart(const PenalizedObjective& obj, const Hyperparams& hp, const SolverControls& c,
                          std::size_t index, std::uint64_t seed, Matrix& best_d) {
    const auto t0 = std::chrono::steady_clock::now();
    RestartRecord rec;
    rec.index = index;
    rec.seed = seed;
    rec.objective = std::numeric_limits<double>::infinity();
    const auto n = static_cast<Eigen::Index>(obj.n());
    const std::size_t tau = std::min<std::size_t>(hp.tau, obj.n());
    const PenaltyWeights ref = reference_weights(obj, c);

    std::mt19937_64 gen(seed);
    Matrix d(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            d(i, j) = -1.0 + 2.0 * (static_cast<double>(gen() >> 11) * 0x1.0p-53);
        }
    }
    try {
        for (std::size_t pass = 0; pass < hp.threshold_iterations; ++pass) {
            RelaxedSolution sol = solve_relaxed(d, obj, c, nullptr);
            rec.iterations += sol.iterations;
            d = row_threshold(sol.d, tau);
            if (c.support_search) {
                d = refine_support(d, obj, tau, ref, c);
            }
            if (c.polish_support) {
                const Matrix mask = support_mask(d);
                sol = solve_relaxed(d, obj, c, &mask);
                rec.iterations += sol.iterations;
                d = sol.d;
            }
            const ObjectiveBreakdown b = obj.evaluate(d, ref.mu1, ref.mu2);
            if (preferred(b.total, independent_set(d), rec.objective, independent_set(best_d), c.tie_tolerance)) {
                rec.objective = b.total;
                rec.breakdown = b;
                rec.best_pass = pass;
                best_d = d;
            }
        }
    } catch (const NumericError& e) {
        rec.aborted = true;
        rec.message = e.what();
    }
    if (!rec.aborted && !std::isfinite(rec.objective)) {
        rec.aborted = true;
        rec.message = "no finite candidate";
    }
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

}  // namespace

DiscoveryResult run_slcd(const Dataset& data, const Hyperparams& hp, const SolverControls& controls) {
    hp.validate();
    controls.validate();
    if (data.m() < 2) {
        throw std::invalid_argument("run_slcd: need at least two samples");
    }
    const std::size_t restarts = hp.restarts;
    if (!controls.restart_seeds.empty() && controls.restart_seeds.size() != restarts) {
        throw std::invalid_argument("run_slcd: restart_seeds must have one entry per restart");
    }
    const PenalizedObjective obj = make_objective(data, hp);

    std::vector<RestartRecord> records(restarts);
    std::vector<Matrix> candidates(restarts);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t r = next++; r < restarts; r = next++) {
            const std::uint64_t seed =
                controls.restart_seeds.empty() ? derive_seed(controls.seed, r) : controls.restart_seeds[r];
            records[r] = run_restart(obj, hp, controls, r, seed, candidates[r]);
        }
    };
    unsigned jobs = controls.jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : controls.jobs;
    jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, restarts));
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned k = 0; k < jobs; ++k) {
            pool.emplace_back(worker);
        }
    }

    DiscoveryResult out;
    out.hp = hp;
    out.hp.eps1 = obj.eps1();
    out.hp.eps2 = obj.eps2();
    out.controls = controls;
    out.reference = reference_weights(obj, controls);
    out.j_min = std::numeric_limits<double>::infinity();
    bool found = false;
    for (auto& rec : records) {
        if (!rec.aborted &&
            (!found || preferred(rec.objective, independent_set(candidates[rec.index]), out.j_min,
                                 independent_set(candidates[out.winning_restart]), controls.tie_tolerance))) {
            out.j_min = rec.objective;
            out.winning_restart = rec.index;
            found = true;
        }
        rec.running_min = out.j_min;
    }
    out.restarts = records;
    if (!found) {
        throw DiscoveryFailed("run_slcd: every restart aborted", std::move(records));
    }
    out.d_opt = candidates[out.winning_restart];
    out.breakdown = records[out.winning_restart].breakdown;
    return out;
}

}  // namespace slcd
