#pragma once

#include <random>

#include "slcd/datagen.hpp"

namespace slcd::testing {

inline Matrix truth(int id) { return structural_matrix(builtin_spec(id)).matrix(); }

// x3 = x1 + x2 with x1, x2 independent.
inline Matrix example1_matrix() {
    Matrix d(3, 3);
    d << 1, 0, 0,
         0, 1, 0,
         1, 1, 0;
    return d;
}

// The alternative solution x1 = x3 - x2.
inline Matrix example1_alternative() {
    Matrix d(3, 3);
    d << 0, -1, 1,
         0, 1, 0,
         0, 0, 1;
    return d;
}

inline ScmSpec example1_spec() {
    const auto u = VariableDef::independent(Distribution::uniform(-2.5, 2.5));
    return ScmSpec("example1", {u, u, VariableDef::dependent({{0, 1.0}, {1, 1.0}})});
}

// x_child = c * x_parent over two variables, the parent uniform on (-2.5, 2.5).
inline ScmSpec two_variable_spec(std::size_t parent, double c) {
    const auto u = VariableDef::independent(Distribution::uniform(-2.5, 2.5));
    const auto dep = VariableDef::dependent({{parent, c}});
    return parent == 0 ? ScmSpec("pair", {u, dep}) : ScmSpec("pair", {dep, u});
}

inline Matrix random_matrix(Eigen::Index n, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(-scale, scale);
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = u(gen);
    }
    return m;
}

}  // namespace slcd::testing
