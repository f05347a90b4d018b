#pragma once

#include <cstddef>
#include <optional>

#include "slcd/errors.hpp"
#include "slcd/scm.hpp"

namespace slcd {

/// Relative size of the default constraint slacks.
inline constexpr double kDefaultSlackRatio = 1e-4;
// Sample cross-covariance between independent sources leaves the true D with
// a covariance residual near ||Sigma||_F^2 / m, so the default covariance
// slack is a multiple of that.
inline constexpr double kDefaultCovSlackFactor = 10.0;

struct Hyperparams {
    double sigma = 0.3;       // smoothing width of the l0 surrogate
    double lambda = 5.0;      // weight of the smoothed trace
    std::size_t tau = 2;      // nonzeros kept per row
    // Slacks on the squared Frobenius residuals. Unset means
    // kDefaultSlackRatio * ||X_c||_F^2 and kDefaultCovSlackFactor * ||Sigma||_F^2 / m.
    std::optional<double> eps1;
    std::optional<double> eps2;
    std::size_t threshold_iterations = 5;  // solve-then-threshold passes per restart
    std::size_t restarts = 20;

    /// Throws std::invalid_argument when a field is out of its domain.
    void validate() const;
};

struct Residuals {
    double recon;  // ||X - D X||_F^2
    double cov;    // ||Sigma - D diag(sigma_diag) D^T||_F^2
};

struct ObjectiveBreakdown {
    double smoothed_rank = 0.0;
    double smoothed_trace = 0.0;
    double recon_residual = 0.0;
    double cov_residual = 0.0;
    double total = 0.0;
};

/// sum_i 1 - exp(-s_i^2 / sigma^2) over the singular values of `d`.
[[nodiscard]] double smoothed_rank(const Matrix& d, double sigma);

/// sum_i 1 - exp(-d_ii^2 / sigma^2).
[[nodiscard]] double smoothed_trace(const Matrix& d, double sigma);

[[nodiscard]] Residuals residuals(const Matrix& d, const Matrix& x, const Matrix& sigma, const Vector& sigma_diag);

/// smoothed_rank + lambda * smoothed_trace
///   + mu1 * max(0, recon - eps1)^2 + mu2 * max(0, cov - eps2)^2
[[nodiscard]] ObjectiveBreakdown objective(const Matrix& d, const Matrix& x, const Matrix& sigma,
                                           const Vector& sigma_diag, const Hyperparams& hp, double mu1,
                                           double mu2);

/// Analytic gradient of `objective` with respect to `d`. At repeated singular
/// values the rank term uses whichever SVD the decomposition returns.
[[nodiscard]] Matrix gradient(const Matrix& d, const Matrix& x, const Matrix& sigma, const Vector& sigma_diag,
                              const Hyperparams& hp, double mu1, double mu2);

/// The penalized objective with the data reduced to its Gram matrix, so each
/// evaluation costs O(n^3) regardless of the sample count.
class PenalizedObjective {
public:
    PenalizedObjective(const Matrix& x, Matrix sigma, Vector sigma_diag, const Hyperparams& hp);

    [[nodiscard]] std::size_t n() const { return static_cast<std::size_t>(gram_.rows()); }
    [[nodiscard]] const Matrix& gram() const { return gram_; }
    [[nodiscard]] double eps1() const { return eps1_; }
    [[nodiscard]] double eps2() const { return eps2_; }
    /// ||X||_F^2 and ||Sigma||_F^2, floored at 1 for all-zero data.
    [[nodiscard]] double recon_scale() const { return recon_scale_; }
    [[nodiscard]] double cov_scale() const { return cov_scale_; }

    [[nodiscard]] Residuals residuals(const Matrix& d) const;
    [[nodiscard]] ObjectiveBreakdown evaluate(const Matrix& d, double mu1, double mu2) const;
    /// Returns the total and writes the gradient into `grad`.
    double evaluate_with_gradient(const Matrix& d, double mu1, double mu2, Matrix& grad) const;

private:
    Matrix gram_;
    Matrix sigma_;
    Vector sigma_diag_;
    double eps1_;
    double eps2_;
    double recon_scale_;
    double cov_scale_;
    double width_;
    double lambda_;
};

}  // namespace slcd
