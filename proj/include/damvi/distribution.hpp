#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace damvi {

namespace detail {

inline void check_simplex(std::span<const double> v, const char* what) {
    if (v.empty()) throw Error(Errc::invalid_argument, std::string(what) + " must be non-empty");
    double sum = 0.0;
    for (double x : v) {
        if (!(x >= 0.0) || !std::isfinite(x))
            throw Error(Errc::invalid_argument, std::string(what) + " has a negative or non-finite entry");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw Error(Errc::invalid_argument, std::string(what) + " does not sum to 1");
}

} // namespace detail

/// A point on the probability simplex: non-negative entries summing to 1
/// within 1e-9. `Tag` keeps weights over classifiers and weights over examples
/// from being mixed up.
template <class Tag>
class SimplexVector {
public:
    explicit SimplexVector(std::vector<double> values) : values_(std::move(values)) {
        detail::check_simplex(values_, Tag::name);
    }

    static SimplexVector uniform(std::size_t size) {
        if (size == 0) throw Error(Errc::invalid_argument, std::string(Tag::name) + " must be non-empty");
        return SimplexVector(std::vector<double>(size, 1.0 / static_cast<double>(size)));
    }

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    std::span<const double> values() const noexcept { return values_; }
    const std::vector<double>& vector() const noexcept { return values_; }
    auto begin() const noexcept { return values_.begin(); }
    auto end() const noexcept { return values_.end(); }

    friend bool operator==(const SimplexVector&, const SimplexVector&) = default;

private:
    std::vector<double> values_;
};

struct PosteriorTag {
    static constexpr const char* name = "posterior weights";
};
struct ExampleDistributionTag {
    static constexpr const char* name = "example distribution";
};

/// Q: weights over the K base classifiers.
using PosteriorWeights = SimplexVector<PosteriorTag>;
/// D: weights over the n training examples.
using ExampleDistribution = SimplexVector<ExampleDistributionTag>;

} // namespace damvi
