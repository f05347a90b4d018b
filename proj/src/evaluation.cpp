#include "slcd/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "slcd/errors.hpp"

namespace slcd {

double reconstruction_error(const Matrix& d_hat, const Matrix& x) {
    if (d_hat.rows() != x.rows() || d_hat.cols() != x.rows()) {
        throw std::invalid_argument("reconstruction_error: dimension mismatch");
    }
    if (x.size() == 0) {
        throw std::invalid_argument("reconstruction_error: empty data");
    }
    return (x - d_hat * x).squaredNorm() / static_cast<double>(x.rows() * x.cols());
}

double structure_error(const Matrix& d_hat, const Matrix& d_true) {
    if (d_hat.rows() != d_true.rows() || d_hat.cols() != d_true.cols() || d_hat.rows() != d_hat.cols()) {
        throw std::invalid_argument("structure_error: shape mismatch");
    }
    const auto n = static_cast<double>(d_hat.rows());
    return (d_true - d_hat).norm() / (n * n);
}

double covariance_error(const Matrix& d_hat, const Matrix& sigma, const Vector& sigma_diag) {
    if (sigma.rows() != d_hat.rows() || sigma.cols() != d_hat.rows()) {
        throw std::invalid_argument("covariance_error: dimension mismatch");
    }
    const auto n = static_cast<double>(d_hat.rows());
    return (sigma - induced_covariance(d_hat, sigma_diag)).norm() / (n * n);
}

EdgeSet extract_edges(const Matrix& d_hat, double theta) {
    if (!(theta > 0.0)) {
        throw std::invalid_argument("extract_edges: theta must be positive");
    }
    EdgeSet out;
    for (Eigen::Index i = 0; i < d_hat.rows(); ++i) {
        for (Eigen::Index j = 0; j < d_hat.cols(); ++j) {
            if (i != j && std::abs(d_hat(i, j)) > theta) {
                out.insert({static_cast<std::size_t>(j), static_cast<std::size_t>(i)});
            }
        }
    }
    return out;
}

LinkScore precision_recall(const EdgeSet& est, const EdgeSet& truth) {
    if (truth.empty()) {
        throw std::invalid_argument("precision_recall: the true edge set is empty");
    }
    LinkScore s;
    s.correct_links = est.intersect(truth).size();
    s.precision_defined = !est.empty();
    s.precision = s.precision_defined ? static_cast<double>(s.correct_links) / static_cast<double>(est.size()) : 0.0;
    s.recall = static_cast<double>(s.correct_links) / static_cast<double>(truth.size());
    return s;
}

MetricBundle evaluate(const Matrix& d_hat, const Dataset& data, const Matrix& d_true, double theta) {
    if (d_hat.rows() != d_true.rows() || d_hat.cols() != d_true.cols()) {
        throw std::invalid_argument("evaluate: estimate and truth differ in shape");
    }
    const CovarianceEstimate cov = sample_covariance(data);
    MetricBundle b;
    b.reconstruction_error = reconstruction_error(d_hat, data.x);
    b.structure_error = structure_error(d_hat, d_true);
    b.covariance_error = covariance_error(d_hat, cov.sigma, cov.sigma_diag);
    const EdgeSet est = extract_edges(d_hat, theta);
    const EdgeSet truth = true_edges(StructuralMatrix(d_true));
    const LinkScore s = precision_recall(est, truth);
    b.precision = s.precision;
    b.precision_defined = s.precision_defined;
    b.recall = s.recall;
    b.correct_links = s.correct_links;
    b.estimated_links = est.size();
    b.true_links = truth.size();
    return b;
}

std::vector<GridPoint> grid_product(const std::vector<double>& sigmas, const std::vector<double>& lambdas) {
    std::vector<GridPoint> out;
    out.reserve(sigmas.size() * lambdas.size());
    for (double s : sigmas) {
        for (double l : lambdas) {
            out.push_back({s, l});
        }
    }
    return out;
}

std::vector<double> default_sigma_grid() { return {0.1, 0.2, 0.3, 0.5, 1.0}; }
std::vector<double> default_lambda_grid() { return {0.5, 1.0, 2.0, 5.0, 10.0}; }

SweepResult sweep(const Dataset& data, const Matrix& d_true, const std::vector<GridPoint>& grid,
                  const Hyperparams& base, const SolverControls& controls, double theta, unsigned jobs) {
    if (grid.empty()) {
        throw std::invalid_argument("sweep: empty grid");
    }
    for (std::size_t a = 0; a < grid.size(); ++a) {
        for (std::size_t b = a + 1; b < grid.size(); ++b) {
            if (grid[a] == grid[b]) {
                throw std::invalid_argument("sweep: repeated grid point");
            }
        }
    }
    if (!(theta > 0.0)) {
        throw std::invalid_argument("sweep: theta must be positive");
    }
    base.validate();
    controls.validate();

    SweepResult out;
    out.dataset = data.spec_name;
    out.theta = theta;
    out.base = base;
    out.controls = controls;
    out.cells.resize(grid.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < grid.size(); k = next++) {
            SweepCell& cell = out.cells[k];
            cell.point = grid[k];
            const auto t0 = std::chrono::steady_clock::now();
            Hyperparams hp = base;
            hp.sigma = grid[k].sigma;
            hp.lambda = grid[k].lambda;
            SolverControls c = controls;
            c.seed = derive_seed(controls.seed, k);
            c.restart_seeds.clear();
            c.jobs = 1;
            try {
                const DiscoveryResult r = run_slcd(data, hp, c);
                cell.j_min = r.j_min;
                cell.metrics = evaluate(r.d_opt, data, d_true, theta);
            } catch (const DiscoveryFailed& e) {
                cell.error = e.what();
            } catch (const NumericError& e) {
                cell.error = e.what();
            } catch (const std::invalid_argument& e) {
                cell.error = e.what();
            }
            cell.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        }
    };
    unsigned workers = jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : jobs;
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, grid.size()));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back(worker);
        }
    }
    return out;
}

std::size_t largest_perfect_region(const SweepResult& result) {
    std::vector<double> sig;
    std::vector<double> lam;
    for (const auto& c : result.cells) {
        sig.push_back(c.point.sigma);
        lam.push_back(c.point.lambda);
    }
    std::sort(sig.begin(), sig.end());
    sig.erase(std::unique(sig.begin(), sig.end()), sig.end());
    std::sort(lam.begin(), lam.end());
    lam.erase(std::unique(lam.begin(), lam.end()), lam.end());

    std::map<std::pair<std::size_t, std::size_t>, bool> good;
    for (const auto& c : result.cells) {
        const auto si = static_cast<std::size_t>(std::lower_bound(sig.begin(), sig.end(), c.point.sigma) - sig.begin());
        const auto li =
            static_cast<std::size_t>(std::lower_bound(lam.begin(), lam.end(), c.point.lambda) - lam.begin());
        good[{si, li}] = c.metrics && c.metrics->precision_defined && c.metrics->precision == 1.0 &&
                         c.metrics->recall == 1.0;
    }
    std::map<std::pair<std::size_t, std::size_t>, bool> seen;
    std::size_t best = 0;
    for (const auto& [pos, ok] : good) {
        if (!ok || seen[pos]) {
            continue;
        }
        std::size_t size = 0;
        std::vector<std::pair<std::size_t, std::size_t>> stack{pos};
        seen[pos] = true;
        while (!stack.empty()) {
            const auto [s, l] = stack.back();
            stack.pop_back();
            ++size;
            const std::pair<std::size_t, std::size_t> nbrs[] = {{s + 1, l}, {s - 1, l}, {s, l + 1}, {s, l - 1}};
            for (const auto& nb : nbrs) {
                auto it = good.find(nb);
                if (it != good.end() && it->second && !seen[nb]) {
                    seen[nb] = true;
                    stack.push_back(nb);
                }
            }
        }
        best = std::max(best, size);
    }
    return best;
}

std::string sweep_csv(const SweepResult& result) {
    std::ostringstream os;
    os.precision(12);
    os << "dataset,sigma,lambda,recon_err,struct_err,cov_err,precision,recall,correct_links,wall_ms\n";
    for (const auto& c : result.cells) {
        os << result.dataset << ',' << c.point.sigma << ',' << c.point.lambda << ',';
        if (c.metrics) {
            const MetricBundle& m = *c.metrics;
            os << m.reconstruction_error << ',' << m.structure_error << ',' << m.covariance_error << ',' << m.precision
               << ',' << m.recall << ',' << m.correct_links;
        } else {
            os << ",,,,,";
        }
        os << ',' << c.wall_ms << '\n';
    }
    return os.str();
}

}  // namespace slcd
