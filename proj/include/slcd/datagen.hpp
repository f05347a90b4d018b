#pragma once

#include <cstdint>
#include <string>

#include "slcd/scm.hpp"

namespace slcd {

/// n x m sample matrix (columns are samples) plus provenance.
struct Dataset {
    Matrix x;
    std::string spec_name;
    std::uint64_t seed = 0;
    bool centered = false;

    [[nodiscard]] std::size_t n() const { return static_cast<std::size_t>(x.rows()); }
    [[nodiscard]] std::size_t m() const { return static_cast<std::size_t>(x.cols()); }
};

struct CovarianceEstimate {
    Matrix sigma;       // (1/m) X_c X_c^T
    Vector sigma_diag;  // diagonal of sigma
};

/// Draws m samples. Independent variables are filled from one
/// std::mt19937_64 stream seeded with `seed`, variable-major (all m draws of
/// the first independent variable, then the next). Uniform draws use the top
/// 53 bits of each output; Gaussian draws use Box-Muller on such pairs.
/// Dependent variables are exact linear combinations of their parents.
[[nodiscard]] Dataset sample(const ScmSpec& spec, std::size_t m, std::uint64_t seed);

/// The five reference SCMs, ids 1..5. Throws std::out_of_range otherwise.
[[nodiscard]] ScmSpec builtin_spec(int id);
inline constexpr int kBuiltinCount = 5;

/// Subtracts each row's sample mean. A dataset already flagged as centered
/// is returned unchanged.
[[nodiscard]] Dataset center(const Dataset& ds);

/// Covariance of the centered data with the 1/m normalizer.
[[nodiscard]] CovarianceEstimate sample_covariance(const Dataset& ds);

/// splitmix64 finalizer over (base, index); used for every derived sub-seed.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace slcd
