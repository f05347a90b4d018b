#include "slcd/datagen.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace slcd {

namespace {

// Uniform on [0, 1) from the top 53 bits.
double unit_open(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

// Uniform on (0, 1].
double unit_half_open(std::mt19937_64& gen) {
    return static_cast<double>((gen() >> 11) + 1) * 0x1.0p-53;
}

void fill_independent(Eigen::Ref<Vector> row, const Distribution& dist, std::mt19937_64& gen) {
    const Eigen::Index m = row.size();
    if (dist.is_uniform()) {
        const auto [a, b] = dist.as_uniform();
        for (Eigen::Index k = 0; k < m; ++k) {
            row(k) = a + (b - a) * unit_open(gen);
        }
        return;
    }
    const auto [mu, var] = dist.as_gaussian();
    const double sd = std::sqrt(var);
    for (Eigen::Index k = 0; k < m; k += 2) {
        const double r = std::sqrt(-2.0 * std::log(unit_half_open(gen)));
        const double phi = 2.0 * std::numbers::pi * unit_open(gen);
        row(k) = mu + sd * r * std::cos(phi);
        if (k + 1 < m) {
            row(k + 1) = mu + sd * r * std::sin(phi);
        }
    }
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Dataset sample(const ScmSpec& spec, std::size_t m, std::uint64_t seed) {
    if (m == 0) {
        throw std::invalid_argument("sample: m must be at least 1");
    }
    const auto n = static_cast<Eigen::Index>(spec.size());
    const auto cols = static_cast<Eigen::Index>(m);
    Dataset ds;
    ds.x = Matrix::Zero(n, cols);
    ds.spec_name = spec.name();
    ds.seed = seed;

    std::mt19937_64 gen(seed);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& v = spec.variables()[static_cast<std::size_t>(i)];
        if (v.is_independent()) {
            Vector row(cols);
            fill_independent(row, v.distribution(), gen);
            ds.x.row(i) = row.transpose();
        }
    }
    // Parents are always independent, so one pass suffices.
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& v = spec.variables()[static_cast<std::size_t>(i)];
        if (v.is_independent()) {
            continue;
        }
        for (const auto& t : v.terms()) {
            ds.x.row(i) += t.coefficient * ds.x.row(static_cast<Eigen::Index>(t.parent));
        }
    }
    return ds;
}

ScmSpec builtin_spec(int id) {
    const auto u = VariableDef::independent(Distribution::uniform(-2.5, 2.5));
    const auto g = VariableDef::independent(Distribution::gaussian(0.0, 4.0));
    auto dep = [](std::vector<Term> t) { return VariableDef::dependent(std::move(t)); };
    switch (id) {
        case 1:
            return ScmSpec("dataset1", {u, dep({{0, 2.0}}), dep({{0, 0.4}})});
        case 2:
            return ScmSpec("dataset2", {u, u, dep({{0, 0.3}}), dep({{0, 1.0}, {1, 2.0}})});
        case 3:
            return ScmSpec("dataset3",
                           {u, u, dep({{0, 1.0}, {1, 3.0}}), dep({{1, 2.0}}), dep({{0, 2.0}, {1, 1.0}})});
        case 4:
            return ScmSpec("dataset4", {u, u, g, dep({{0, 1.0}, {2, 0.3}}), dep({{0, 2.0}, {1, 3.0}}),
                                        dep({{1, 2.0}, {2, 0.5}})});
        case 5:
            return ScmSpec("dataset5", {u, u, g, dep({{0, 1.0}, {2, 0.5}}), dep({{1, 1.0}, {2, 2.0}}),
                                        dep({{0, 1.0}, {2, 3.0}}), dep({{1, 1.0}, {2, 1.0}})});
        default:
            throw std::out_of_range("builtin dataset id must be in 1..5");
    }
}

Dataset center(const Dataset& ds) {
    if (ds.centered) {
        return ds;
    }
    Dataset out = ds;
    const Vector mean = ds.x.rowwise().mean();
    out.x.colwise() -= mean;
    out.centered = true;
    return out;
}

CovarianceEstimate sample_covariance(const Dataset& ds) {
    if (ds.m() < 2) {
        throw std::invalid_argument("sample_covariance: need at least two samples");
    }
    const Dataset c = center(ds);
    Matrix s = (c.x * c.x.transpose()) / static_cast<double>(ds.m());
    s = 0.5 * (s + s.transpose()).eval();
    Vector diag = s.diagonal();
    return {std::move(s), std::move(diag)};
}

}  // namespace slcd
