#pragma once

#include <cmath>
#include <cstddef>

namespace ultimax {

/// Monte Carlo point estimate with its standard error.
struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
};

/// Welford accumulator; merge() uses the Chan et al. pairwise update so
/// block-wise reductions are order-stable.
class RunningStats {
public:
    void add(double x) noexcept {
        ++n_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(n_);
        m2_ += delta * (x - mean_);
    }

    void merge(const RunningStats& other) noexcept {
        if (other.n_ == 0) return;
        if (n_ == 0) {
            *this = other;
            return;
        }
        const double na = static_cast<double>(n_);
        const double nb = static_cast<double>(other.n_);
        const double delta = other.mean_ - mean_;
        const double n = na + nb;
        mean_ += delta * nb / n;
        m2_ += other.m2_ + delta * delta * na * nb / n;
        n_ += other.n_;
    }

    std::size_t count() const noexcept { return n_; }
    double mean() const noexcept { return mean_; }
    double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double std_error() const noexcept {
        return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
    }

    Estimate estimate() const noexcept { return {mean(), std_error(), n_}; }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

}  // namespace ultimax
