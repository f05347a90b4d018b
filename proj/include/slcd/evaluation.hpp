#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "slcd/datagen.hpp"
#include "slcd/solver.hpp"

namespace slcd {

inline constexpr double kDefaultEdgeThreshold = 0.15;

/// (1 / (n m)) ||X - D X||_F^2.
[[nodiscard]] double reconstruction_error(const Matrix& d_hat, const Matrix& x);
/// (1 / n^2) ||D_true - D_hat||_F, not squared.
[[nodiscard]] double structure_error(const Matrix& d_hat, const Matrix& d_true);
/// (1 / n^2) ||Sigma - D_hat diag(sigma_diag) D_hat^T||_F, not squared.
[[nodiscard]] double covariance_error(const Matrix& d_hat, const Matrix& sigma, const Vector& sigma_diag);

/// j -> i for every off-diagonal |d_ij| > theta. Requires theta > 0.
[[nodiscard]] EdgeSet extract_edges(const Matrix& d_hat, double theta);

struct LinkScore {
    double precision = 0.0;  // 0 when no edges were estimated
    bool precision_defined = false;
    double recall = 0.0;
    std::size_t correct_links = 0;
};

/// Throws std::invalid_argument when `truth` is empty.
[[nodiscard]] LinkScore precision_recall(const EdgeSet& est, const EdgeSet& truth);

struct MetricBundle {
    double reconstruction_error = 0.0;
    double structure_error = 0.0;
    double covariance_error = 0.0;
    double precision = 0.0;
    bool precision_defined = false;
    double recall = 0.0;
    std::size_t correct_links = 0;
    std::size_t estimated_links = 0;
    std::size_t true_links = 0;
};

/// All five metrics of `d_hat` against a ground truth. Reconstruction uses
/// `data.x` as given; the covariance is the 1/m sample covariance of the
/// centered data.
[[nodiscard]] MetricBundle evaluate(const Matrix& d_hat, const Dataset& data, const Matrix& d_true,
                                    double theta = kDefaultEdgeThreshold);

struct GridPoint {
    double sigma;
    double lambda;
    bool operator==(const GridPoint&) const = default;
};

[[nodiscard]] std::vector<GridPoint> grid_product(const std::vector<double>& sigmas,
                                                  const std::vector<double>& lambdas);
[[nodiscard]] std::vector<double> default_sigma_grid();
[[nodiscard]] std::vector<double> default_lambda_grid();

struct SweepCell {
    GridPoint point;
    std::optional<MetricBundle> metrics;  // empty when the cell failed
    std::string error;
    double j_min = 0.0;
    double wall_ms = 0.0;
};

struct SweepResult {
    std::string dataset;
    double theta = kDefaultEdgeThreshold;
    Hyperparams base;
    SolverControls controls;
    std::vector<SweepCell> cells;  // in grid order
};

/// Runs run_slcd once per grid point with sigma and lambda replaced. Cell k
/// uses master seed derive_seed(controls.seed, k). Cells run on `jobs`
/// threads (0 means hardware concurrency), each solving single-threaded.
/// Solver failures are recorded in the cell. Throws std::invalid_argument on
/// an empty grid or a repeated point.
[[nodiscard]] SweepResult sweep(const Dataset& data, const Matrix& d_true, const std::vector<GridPoint>& grid,
                                const Hyperparams& base, const SolverControls& controls,
                                double theta = kDefaultEdgeThreshold, unsigned jobs = 1);

/// Size of the largest 4-connected group of cells with precision = recall = 1,
/// placing cells on the axes of their distinct sorted sigma and lambda values.
[[nodiscard]] std::size_t largest_perfect_region(const SweepResult& result);

/// Tidy CSV: dataset,sigma,lambda,recon_err,struct_err,cov_err,precision,
/// recall,correct_links,wall_ms. Failed cells leave the metric fields empty.
[[nodiscard]] std::string sweep_csv(const SweepResult& result);

}  // namespace slcd
