#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "slcd/distribution.hpp"

namespace slcd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Square matrix of causal coefficients. Entry (i, j) is the weight of x_j
/// in the equation producing x_i. Construction rejects non-square or
/// non-finite input.
class StructuralMatrix {
public:
    explicit StructuralMatrix(Matrix entries);

    [[nodiscard]] static StructuralMatrix identity(std::size_t n);

    [[nodiscard]] std::size_t n() const { return static_cast<std::size_t>(entries_.rows()); }
    [[nodiscard]] const Matrix& matrix() const { return entries_; }
    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const {
        return entries_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }

    bool operator==(const StructuralMatrix& other) const { return entries_ == other.entries_; }

private:
    Matrix entries_;
};

struct Term {
    std::size_t parent;
    double coefficient;
};

struct Independent {
    Distribution distribution;
};

struct Dependent {
    std::vector<Term> terms;
};

class VariableDef {
public:
    [[nodiscard]] static VariableDef independent(Distribution dist);
    /// Throws std::invalid_argument on duplicate parents or zero coefficients.
    [[nodiscard]] static VariableDef dependent(std::vector<Term> terms);

    [[nodiscard]] bool is_independent() const { return std::holds_alternative<Independent>(role_); }
    [[nodiscard]] const Distribution& distribution() const { return std::get<Independent>(role_).distribution; }
    [[nodiscard]] const std::vector<Term>& terms() const { return std::get<Dependent>(role_).terms; }

private:
    explicit VariableDef(std::variant<Independent, Dependent> role) : role_(std::move(role)) {}
    std::variant<Independent, Dependent> role_;
};

/// Declarative linear SCM. Dependent variables may only have independent
/// parents, so every spec is acyclic by construction.
class ScmSpec {
public:
    ScmSpec(std::string name, std::vector<VariableDef> variables);

    [[nodiscard]] const std::string& name() const { return name_; }
    [[nodiscard]] const std::vector<VariableDef>& variables() const { return variables_; }
    [[nodiscard]] std::size_t size() const { return variables_.size(); }
    [[nodiscard]] std::size_t independent_count() const;
    /// Largest parent-set size over dependent variables.
    [[nodiscard]] std::size_t max_parents() const;
    /// Analytic variance of every variable under independence of the
    /// independent variables.
    [[nodiscard]] Vector variances() const;
    /// Analytic variance of each independent variable, zero for dependents.
    [[nodiscard]] Vector source_variances() const;

private:
    std::string name_;
    std::vector<VariableDef> variables_;
};

struct Edge {
    std::size_t parent;
    std::size_t child;
    auto operator<=>(const Edge&) const = default;
};

class EdgeSet {
public:
    EdgeSet() = default;
    EdgeSet(std::initializer_list<Edge> edges);

    /// Throws std::invalid_argument on a self-loop.
    void insert(Edge e);
    [[nodiscard]] bool contains(Edge e) const { return edges_.contains(e); }
    [[nodiscard]] std::size_t size() const { return edges_.size(); }
    [[nodiscard]] bool empty() const { return edges_.empty(); }
    [[nodiscard]] auto begin() const { return edges_.begin(); }
    [[nodiscard]] auto end() const { return edges_.end(); }

    [[nodiscard]] EdgeSet intersect(const EdgeSet& other) const;
    [[nodiscard]] bool is_subset_of(const EdgeSet& other) const;

    bool operator==(const EdgeSet& other) const = default;

private:
    std::set<Edge> edges_;
};

[[nodiscard]] StructuralMatrix structural_matrix(const ScmSpec& spec);

/// Edges read directly from the dependency lists of a spec.
[[nodiscard]] EdgeSet spec_edges(const ScmSpec& spec);

/// Checks the ground-truth shape rules row by row. Each message names the
/// row (0-based) and the rule that failed; an empty result means valid.
[[nodiscard]] std::vector<std::string> validate_ground_truth(const StructuralMatrix& d, std::size_t tau);

/// Off-diagonal nonzeros as parent(column) -> child(row) edges. Throws
/// std::invalid_argument if `d` is not a valid ground truth.
[[nodiscard]] EdgeSet true_edges(const StructuralMatrix& d);

/// D * diag(sigma_diag) * D^T, symmetrized exactly.
[[nodiscard]] Matrix induced_covariance(const Matrix& d, const Vector& sigma_diag);

/// Number of singular values above rel_tol * s_max.
[[nodiscard]] std::size_t numerical_rank(const Matrix& m, double rel_tol = 1e-8);

}  // namespace slcd
