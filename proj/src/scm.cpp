#include "slcd/scm.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace slcd {

StructuralMatrix::StructuralMatrix(Matrix entries) : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols() || entries_.rows() == 0) {
        throw std::invalid_argument("structural matrix must be square and non-empty");
    }
    if (!entries_.allFinite()) {
        throw std::invalid_argument("structural matrix entries must be finite");
    }
}

StructuralMatrix StructuralMatrix::identity(std::size_t n) {
    const auto k = static_cast<Eigen::Index>(n);
    return StructuralMatrix(Matrix::Identity(k, k));
}

VariableDef VariableDef::independent(Distribution dist) {
    return VariableDef(Independent{dist});
}

VariableDef VariableDef::dependent(std::vector<Term> terms) {
    if (terms.empty()) {
        throw std::invalid_argument("dependent variable needs at least one parent");
    }
    std::vector<std::size_t> parents;
    for (const auto& t : terms) {
        if (t.coefficient == 0.0 || !std::isfinite(t.coefficient)) {
            throw std::invalid_argument("dependent coefficients must be finite and nonzero");
        }
        parents.push_back(t.parent);
    }
    std::sort(parents.begin(), parents.end());
    if (std::adjacent_find(parents.begin(), parents.end()) != parents.end()) {
        throw std::invalid_argument("dependent variable lists a parent twice");
    }
    return VariableDef(Dependent{std::move(terms)});
}

ScmSpec::ScmSpec(std::string name, std::vector<VariableDef> variables)
    : name_(std::move(name)), variables_(std::move(variables)) {
    if (variables_.empty()) {
        throw std::invalid_argument("spec '" + name_ + "' has no variables");
    }
    for (std::size_t i = 0; i < variables_.size(); ++i) {
        if (variables_[i].is_independent()) {
            continue;
        }
        for (const auto& t : variables_[i].terms()) {
            std::ostringstream where;
            where << "spec '" << name_ << "' variable " << i << ": parent " << t.parent;
            if (t.parent >= variables_.size()) {
                throw std::invalid_argument(where.str() + " is out of range");
            }
            if (t.parent == i) {
                throw std::invalid_argument(where.str() + " is a self-loop");
            }
            if (!variables_[t.parent].is_independent()) {
                throw std::invalid_argument(where.str() + " is not an independent variable");
            }
        }
    }
}

std::size_t ScmSpec::independent_count() const {
    return static_cast<std::size_t>(std::count_if(variables_.begin(), variables_.end(),
                                                  [](const VariableDef& v) { return v.is_independent(); }));
}

std::size_t ScmSpec::max_parents() const {
    std::size_t best = 0;
    for (const auto& v : variables_) {
        if (!v.is_independent()) {
            best = std::max(best, v.terms().size());
        }
    }
    return best;
}

Vector ScmSpec::source_variances() const {
    Vector out = Vector::Zero(static_cast<Eigen::Index>(size()));
    for (std::size_t i = 0; i < size(); ++i) {
        if (variables_[i].is_independent()) {
            out(static_cast<Eigen::Index>(i)) = variables_[i].distribution().variance();
        }
    }
    return out;
}

Vector ScmSpec::variances() const {
    const Vector src = source_variances();
    Vector out = src;
    for (std::size_t i = 0; i < size(); ++i) {
        if (variables_[i].is_independent()) {
            continue;
        }
        double v = 0.0;
        for (const auto& t : variables_[i].terms()) {
            v += t.coefficient * t.coefficient * src(static_cast<Eigen::Index>(t.parent));
        }
        out(static_cast<Eigen::Index>(i)) = v;
    }
    return out;
}

EdgeSet::EdgeSet(std::initializer_list<Edge> edges) {
    for (const auto& e : edges) {
        insert(e);
    }
}

void EdgeSet::insert(Edge e) {
    if (e.parent == e.child) {
        throw std::invalid_argument("edge set cannot hold a self-loop");
    }
    edges_.insert(e);
}

EdgeSet EdgeSet::intersect(const EdgeSet& other) const {
    EdgeSet out;
    for (const auto& e : edges_) {
        if (other.contains(e)) {
            out.edges_.insert(e);
        }
    }
    return out;
}

bool EdgeSet::is_subset_of(const EdgeSet& other) const {
    return std::all_of(edges_.begin(), edges_.end(), [&](const Edge& e) { return other.contains(e); });
}

StructuralMatrix structural_matrix(const ScmSpec& spec) {
    const auto n = static_cast<Eigen::Index>(spec.size());
    Matrix d = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& v = spec.variables()[static_cast<std::size_t>(i)];
        if (v.is_independent()) {
            d(i, i) = 1.0;
            continue;
        }
        for (const auto& t : v.terms()) {
            d(i, static_cast<Eigen::Index>(t.parent)) = t.coefficient;
        }
    }
    return StructuralMatrix(std::move(d));
}

EdgeSet spec_edges(const ScmSpec& spec) {
    EdgeSet out;
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const auto& v = spec.variables()[i];
        if (v.is_independent()) {
            continue;
        }
        for (const auto& t : v.terms()) {
            out.insert({t.parent, i});
        }
    }
    return out;
}

namespace {

bool is_independent_row(const Matrix& d, Eigen::Index i) {
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
        if (d(i, j) != (i == j ? 1.0 : 0.0)) {
            return false;
        }
    }
    return true;
}

}  // namespace

std::vector<std::string> validate_ground_truth(const StructuralMatrix& sm, std::size_t tau) {
    const Matrix& d = sm.matrix();
    const Eigen::Index n = d.rows();
    std::vector<std::string> violations;
    std::vector<bool> independent(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        independent[static_cast<std::size_t>(i)] = is_independent_row(d, i);
    }
    auto report = [&](Eigen::Index row, const std::string& rule) {
        std::ostringstream os;
        os << "row " << row << ": " << rule;
        violations.push_back(os.str());
    };
    std::size_t independent_rows = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (independent[static_cast<std::size_t>(i)]) {
            ++independent_rows;
            continue;
        }
        if (d(i, i) != 0.0) {
            report(i, "nonzero diagonal but not a unit basis row (independent rows are exactly e_i)");
            continue;
        }
        std::size_t nnz = 0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (d(i, j) == 0.0) {
                continue;
            }
            ++nnz;
            if (!independent[static_cast<std::size_t>(j)]) {
                std::ostringstream os;
                os << "dependent row references dependent column " << j;
                report(i, os.str());
            }
        }
        if (nnz == 0) {
            report(i, "dependent row has no parents");
        }
        if (nnz > tau) {
            std::ostringstream os;
            os << "dependent row has " << nnz << " parents, exceeding tau = " << tau;
            report(i, os.str());
        }
    }
    if (violations.empty() && numerical_rank(d) != independent_rows) {
        std::ostringstream os;
        os << "rank " << numerical_rank(d) << " differs from independent row count " << independent_rows;
        violations.push_back(os.str());
    }
    return violations;
}

EdgeSet true_edges(const StructuralMatrix& sm) {
    const auto violations = validate_ground_truth(sm, sm.n());
    if (!violations.empty()) {
        throw std::invalid_argument("not a valid ground-truth matrix: " + violations.front());
    }
    const Matrix& d = sm.matrix();
    EdgeSet out;
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        for (Eigen::Index j = 0; j < d.cols(); ++j) {
            if (i != j && d(i, j) != 0.0) {
                out.insert({static_cast<std::size_t>(j), static_cast<std::size_t>(i)});
            }
        }
    }
    return out;
}

Matrix induced_covariance(const Matrix& d, const Vector& sigma_diag) {
    if (d.rows() != d.cols() || sigma_diag.size() != d.cols()) {
        throw std::invalid_argument("induced_covariance: dimension mismatch");
    }
    if ((sigma_diag.array() < 0.0).any()) {
        throw std::invalid_argument("induced_covariance: variances must be nonnegative");
    }
    Matrix c = d * sigma_diag.asDiagonal() * d.transpose();
    return 0.5 * (c + c.transpose());
}

std::size_t numerical_rank(const Matrix& m, double rel_tol) {
    if (m.size() == 0) {
        return 0;
    }
    Eigen::JacobiSVD<Matrix> svd(m);
    const Vector& s = svd.singularValues();
    const double smax = s.maxCoeff();
    if (smax == 0.0) {
        return 0;
    }
    return static_cast<std::size_t>((s.array() > rel_tol * smax).count());
}

}  // namespace slcd
