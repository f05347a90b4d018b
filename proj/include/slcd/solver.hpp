#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "slcd/datagen.hpp"
#include "slcd/objective.hpp"

namespace slcd {

enum class InnerMethod { Lbfgs, GradientDescent };

struct SolverControls {
    InnerMethod method = InnerMethod::Lbfgs;
    std::size_t max_inner_steps = 500;  // per penalty round
    double step_init = 1e-2;            // length of the first trial step
    double backtrack_factor = 0.5;
    double armijo_c = 1e-4;
    // Penalty weights are relative: mu1 = mu_init / ||X||_F^4 and
    // mu2 = mu_init / ||Sigma||_F^4, so a unit residual excess of one data
    // norm costs mu_init.
    double penalty_mu_init = 1e6;
    double penalty_growth = 10.0;
    std::size_t penalty_outer_rounds = 4;
    double grad_tol = 1e-6;
    std::size_t lbfgs_memory = 10;
    std::uint64_t seed = 0;
    /// Explicit per-restart seeds; when empty they are derive_seed(seed, r).
    std::vector<std::uint64_t> restart_seeds;
    /// Run refine_support on each thresholded matrix.
    bool support_search = true;
    /// Independent sets refine_support tries around the current one differ
    /// from it in at most this many variables.
    std::size_t basis_radius = 3;
    std::size_t max_refine_steps = 100;
    /// Scores within this relative distance count as tied; see preferred().
    double tie_tolerance = 1e-9;
    /// Re-solve each candidate with its zero pattern frozen before scoring.
    bool polish_support = false;
    /// Worker threads for restarts; 0 means hardware concurrency.
    unsigned jobs = 1;

    void validate() const;
};

struct PenaltyWeights {
    double mu1;
    double mu2;
};

/// Weights used in penalty round `round` (0-based).
[[nodiscard]] PenaltyWeights penalty_weights(const PenalizedObjective& obj, const SolverControls& c,
                                             std::size_t round);
/// Weights of the final round; every candidate is scored with these.
[[nodiscard]] PenaltyWeights reference_weights(const PenalizedObjective& obj, const SolverControls& c);

struct RelaxedSolution {
    Matrix d;
    PenaltyWeights weights;  // final-round weights
    std::size_t iterations = 0;
};

/// Minimizes the penalized objective from `d_init` for
/// penalty_outer_rounds rounds, growing the weights between rounds. The
/// returned point never scores worse than `d_init` under the final weights.
/// Throws NumericError if the objective turns non-finite.
/// A non-null `support` (0/1 matrix) freezes the entries where it is zero.
[[nodiscard]] RelaxedSolution solve_relaxed(const Matrix& d_init, const PenalizedObjective& obj,
                                            const SolverControls& c, const Matrix* support = nullptr);
[[nodiscard]] RelaxedSolution solve_relaxed(const Matrix& d_init, const Matrix& x, const Matrix& sigma,
                                            const Vector& sigma_diag, const Hyperparams& hp,
                                            const SolverControls& c);

/// 1 where `d` is nonzero, 0 elsewhere.
[[nodiscard]] Matrix support_mask(const Matrix& d);

/// Indices i with |d_ii| >= 0.5.
[[nodiscard]] std::vector<std::size_t> independent_set(const Matrix& d);

/// Candidate ordering: the lower score wins unless the two are within
/// tie_tol (relative, floored at 1); tied candidates are ordered by their
/// independent sets, lexicographically smallest first. Non-finite scores
/// lose to finite ones.
[[nodiscard]] bool preferred(double fa, const std::vector<std::size_t>& set_a, double fb,
                             const std::vector<std::size_t>& set_b, double tie_tol);

/// Keeps the tau largest-magnitude entries of each row; ties keep the lower
/// column index.
[[nodiscard]] Matrix row_threshold(const Matrix& d, std::size_t tau);

/// Local search over the independent set. The rows of `d` with
/// |d_ii| >= 0.5 form the starting set. A set B stands for the matrix with
/// unit rows on B and every other row fitted by least squares on the subset
/// of at most tau columns of B with the smallest residual. Each step moves to
/// the best-scoring set (at `w`) within basis_radius flips; the search stops
/// when no such set is preferred() over the current matrix, so the result
/// never scores worse than `d` beyond the tie tolerance.
[[nodiscard]] Matrix refine_support(const Matrix& d, const PenalizedObjective& obj, std::size_t tau,
                                    const PenaltyWeights& w, const SolverControls& c);

struct RestartRecord {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    double objective = 0.0;  // best post-threshold score of this restart
    ObjectiveBreakdown breakdown;
    std::size_t best_pass = 0;
    std::size_t iterations = 0;
    double running_min = 0.0;  // best score over restarts 0..index
    double wall_ms = 0.0;
    bool aborted = false;
    std::string message;
};

struct DiscoveryResult {
    Matrix d_opt;
    double j_min = 0.0;
    ObjectiveBreakdown breakdown;
    std::size_t winning_restart = 0;
    PenaltyWeights reference{0.0, 0.0};
    std::vector<RestartRecord> restarts;
    Hyperparams hp;  // eps1/eps2 resolved to the values used
    SolverControls controls;
};

class DiscoveryFailed : public std::runtime_error {
public:
    DiscoveryFailed(const std::string& what, std::vector<RestartRecord> records)
        : std::runtime_error(what), records_(std::move(records)) {}
    [[nodiscard]] const std::vector<RestartRecord>& records() const { return records_; }

private:
    std::vector<RestartRecord> records_;
};

/// Multi-restart search: each restart draws D0 with i.i.d. U(-1, 1)
/// entries, then alternates solve_relaxed and row_threshold
/// threshold_iterations times, feeding each thresholded matrix back in as the
/// next start. Candidates are compared with preferred(); among exact
/// equals the lower restart index wins. The data is centered first.
[[nodiscard]] DiscoveryResult run_slcd(const Dataset& data, const Hyperparams& hp, const SolverControls& controls);

/// The score run_slcd compares candidates with: the penalized objective on the
/// centered data at the reference weights.
[[nodiscard]] double objective_of(const Matrix& d, const Dataset& data, const Hyperparams& hp,
                                  const SolverControls& controls);

/// The objective run_slcd builds for `data`: centered, 1/m covariance.
[[nodiscard]] PenalizedObjective make_objective(const Dataset& data, const Hyperparams& hp);

}  // namespace slcd
