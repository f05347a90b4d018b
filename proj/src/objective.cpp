#include "slcd/objective.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace slcd {

namespace {

void require_finite(const Matrix& d, const char* what) {
    if (!d.allFinite()) {
        throw NumericError(std::string(what) + ": non-finite entries");
    }
}

double surrogate_sum(const Vector& values, double sigma) {
    const double inv = 1.0 / (sigma * sigma);
    return (1.0 - (-values.array().square() * inv).exp()).sum();
}

// d/dx of 1 - exp(-x^2 / sigma^2).
Vector surrogate_slope(const Vector& values, double sigma) {
    const double inv = 1.0 / (sigma * sigma);
    return (2.0 * inv * values.array() * (-values.array().square() * inv).exp()).matrix();
}

double frob_dot(const Matrix& a, const Matrix& b) {
    return (a.array() * b.array()).sum();
}

void check_shapes(const Matrix& d, const Matrix& x, const Matrix& sigma, const Vector& sigma_diag) {
    if (d.rows() != d.cols() || x.rows() != d.rows() || sigma.rows() != d.rows() || sigma.cols() != d.rows() ||
        sigma_diag.size() != d.rows()) {
        throw std::invalid_argument("objective: dimension mismatch");
    }
}

}  // namespace

void Hyperparams::validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw std::invalid_argument("sigma must be positive");
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument("lambda must be nonnegative");
    }
    if (tau == 0) {
        throw std::invalid_argument("tau must be positive");
    }
    if ((eps1 && !(*eps1 >= 0.0)) || (eps2 && !(*eps2 >= 0.0))) {
        throw std::invalid_argument("eps1 and eps2 must be nonnegative");
    }
    if (threshold_iterations == 0 || restarts == 0) {
        throw std::invalid_argument("threshold iterations and restarts must be positive");
    }
}

double smoothed_rank(const Matrix& d, double sigma) {
    require_finite(d, "smoothed_rank");
    if (!(sigma > 0.0)) {
        throw std::invalid_argument("smoothed_rank: sigma must be positive");
    }
    const Eigen::JacobiSVD<Matrix> svd(d);
    return surrogate_sum(svd.singularValues(), sigma);
}

double smoothed_trace(const Matrix& d, double sigma) {
    if (!(sigma > 0.0)) {
        throw std::invalid_argument("smoothed_trace: sigma must be positive");
    }
    return surrogate_sum(d.diagonal(), sigma);
}

Residuals residuals(const Matrix& d, const Matrix& x, const Matrix& sigma, const Vector& sigma_diag) {
    check_shapes(d, x, sigma, sigma_diag);
    const double recon = (x - d * x).squaredNorm();
    const double cov = (sigma - d * sigma_diag.asDiagonal() * d.transpose()).squaredNorm();
    return {recon, cov};
}

ObjectiveBreakdown objective(const Matrix& d, const Matrix& x, const Matrix& sigma, const Vector& sigma_diag,
                             const Hyperparams& hp, double mu1, double mu2) {
    check_shapes(d, x, sigma, sigma_diag);
    return PenalizedObjective(x, sigma, sigma_diag, hp).evaluate(d, mu1, mu2);
}

Matrix gradient(const Matrix& d, const Matrix& x, const Matrix& sigma, const Vector& sigma_diag,
                const Hyperparams& hp, double mu1, double mu2) {
    check_shapes(d, x, sigma, sigma_diag);
    Matrix g;
    PenalizedObjective(x, sigma, sigma_diag, hp).evaluate_with_gradient(d, mu1, mu2, g);
    return g;
}

PenalizedObjective::PenalizedObjective(const Matrix& x, Matrix sigma, Vector sigma_diag, const Hyperparams& hp)
    : gram_(x * x.transpose()),
      sigma_(std::move(sigma)),
      sigma_diag_(std::move(sigma_diag)),
      width_(hp.sigma),
      lambda_(hp.lambda) {
    hp.validate();
    if (sigma_.rows() != gram_.rows() || sigma_.cols() != gram_.rows() || sigma_diag_.size() != gram_.rows()) {
        throw std::invalid_argument("objective: dimension mismatch");
    }
    require_finite(gram_, "objective data");
    require_finite(sigma_, "objective covariance");
    const double m = static_cast<double>(x.cols());
    eps1_ = hp.eps1.value_or(kDefaultSlackRatio * m * sigma_.trace());
    eps2_ = hp.eps2.value_or(kDefaultCovSlackFactor * sigma_.squaredNorm() / static_cast<double>(m));
    recon_scale_ = gram_.trace() > 0.0 ? gram_.trace() : 1.0;
    cov_scale_ = sigma_.squaredNorm() > 0.0 ? sigma_.squaredNorm() : 1.0;
}

Residuals PenalizedObjective::residuals(const Matrix& d) const {
    const Matrix e = Matrix::Identity(d.rows(), d.cols()) - d;
    const double recon = std::max(0.0, frob_dot(e * gram_, e));
    const double cov = (sigma_ - d * sigma_diag_.asDiagonal() * d.transpose()).squaredNorm();
    return {recon, cov};
}

ObjectiveBreakdown PenalizedObjective::evaluate(const Matrix& d, double mu1, double mu2) const {
    require_finite(d, "objective");
    if (d.rows() != gram_.rows() || d.cols() != gram_.rows()) {
        throw std::invalid_argument("objective: dimension mismatch");
    }
    ObjectiveBreakdown out;
    out.smoothed_rank = smoothed_rank(d, width_);
    out.smoothed_trace = smoothed_trace(d, width_);
    const auto r = residuals(d);
    out.recon_residual = r.recon;
    out.cov_residual = r.cov;
    const double h1 = std::max(0.0, r.recon - eps1_);
    const double h2 = std::max(0.0, r.cov - eps2_);
    out.total = out.smoothed_rank + lambda_ * out.smoothed_trace + mu1 * h1 * h1 + mu2 * h2 * h2;
    if (!std::isfinite(out.total)) {
        throw NumericError("objective: non-finite value");
    }
    return out;
}

double PenalizedObjective::evaluate_with_gradient(const Matrix& d, double mu1, double mu2, Matrix& grad) const {
    require_finite(d, "gradient");
    if (d.rows() != gram_.rows() || d.cols() != gram_.rows()) {
        throw std::invalid_argument("gradient: dimension mismatch");
    }
    const Eigen::Index n = d.rows();
    const Eigen::JacobiSVD<Matrix> svd(d, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& s = svd.singularValues();
    grad = svd.matrixU() * surrogate_slope(s, width_).asDiagonal() * svd.matrixV().transpose();
    grad.diagonal() += lambda_ * surrogate_slope(d.diagonal(), width_);

    const Matrix e = Matrix::Identity(n, n) - d;
    const Matrix eg = e * gram_;
    const double recon = std::max(0.0, frob_dot(eg, e));
    const Matrix ds = d * sigma_diag_.asDiagonal();
    const Matrix c = sigma_ - ds * d.transpose();
    const double cov = c.squaredNorm();
    const double h1 = std::max(0.0, recon - eps1_);
    const double h2 = std::max(0.0, cov - eps2_);
    if (h1 > 0.0) {
        grad -= (4.0 * mu1 * h1) * eg;
    }
    if (h2 > 0.0) {
        grad -= (8.0 * mu2 * h2) * (c * ds);
    }
    const double total =
        surrogate_sum(s, width_) + lambda_ * surrogate_sum(d.diagonal(), width_) + mu1 * h1 * h1 + mu2 * h2 * h2;
    if (!std::isfinite(total) || !grad.allFinite()) {
        throw NumericError("gradient: non-finite value");
    }
    return total;
}

}  // namespace slcd
