#pragma once

#include <string>
#include <variant>

namespace slcd {

struct Uniform {
    double a;
    double b;
};

struct Gaussian {
    double mean;
    double variance;
};

/// Sampling law of an independent variable: U(a, b) or N(mean, variance).
class Distribution {
public:
    [[nodiscard]] static Distribution uniform(double a, double b);
    [[nodiscard]] static Distribution gaussian(double mean, double variance);

    [[nodiscard]] bool is_uniform() const { return std::holds_alternative<Uniform>(law_); }
    [[nodiscard]] const Uniform& as_uniform() const { return std::get<Uniform>(law_); }
    [[nodiscard]] const Gaussian& as_gaussian() const { return std::get<Gaussian>(law_); }

    [[nodiscard]] double mean() const;
    /// Analytic variance: (b - a)^2 / 12 for uniform laws.
    [[nodiscard]] double variance() const;
    [[nodiscard]] std::string describe() const;

    bool operator==(const Distribution& other) const;

private:
    explicit Distribution(std::variant<Uniform, Gaussian> law) : law_(law) {}
    std::variant<Uniform, Gaussian> law_;
};

}  // namespace slcd
