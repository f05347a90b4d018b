#include "slcd/distribution.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace slcd {

Distribution Distribution::uniform(double a, double b) {
    if (!std::isfinite(a) || !std::isfinite(b) || !(a < b)) {
        throw std::invalid_argument("uniform distribution requires finite a < b");
    }
    return Distribution(Uniform{a, b});
}

Distribution Distribution::gaussian(double mean, double variance) {
    if (!std::isfinite(mean) || !std::isfinite(variance) || !(variance > 0.0)) {
        throw std::invalid_argument("gaussian distribution requires finite mean and variance > 0");
    }
    return Distribution(Gaussian{mean, variance});
}

double Distribution::mean() const {
    if (is_uniform()) {
        const auto& u = as_uniform();
        return 0.5 * (u.a + u.b);
    }
    return as_gaussian().mean;
}

double Distribution::variance() const {
    if (is_uniform()) {
        const auto& u = as_uniform();
        const double w = u.b - u.a;
        return w * w / 12.0;
    }
    return as_gaussian().variance;
}

std::string Distribution::describe() const {
    std::ostringstream os;
    if (is_uniform()) {
        os << "U(" << as_uniform().a << ", " << as_uniform().b << ")";
    } else {
        os << "N(" << as_gaussian().mean << ", " << as_gaussian().variance << ")";
    }
    return os.str();
}

bool Distribution::operator==(const Distribution& other) const {
    if (is_uniform() != other.is_uniform()) {
        return false;
    }
    if (is_uniform()) {
        return as_uniform().a == other.as_uniform().a && as_uniform().b == other.as_uniform().b;
    }
    return as_gaussian().mean == other.as_gaussian().mean &&
           as_gaussian().variance == other.as_gaussian().variance;
}

}  // namespace slcd
