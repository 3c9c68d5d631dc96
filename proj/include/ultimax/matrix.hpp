#pragma once

#include <cassert>
#include <cstddef>
#include <initializer_list>
#include <vector>

namespace ultimax {

/// Dense row-major square matrix; regime counts are small (2 to 10).
class SquareMatrix {
public:
    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), a_(n * n, fill) {}

    SquareMatrix(std::initializer_list<std::initializer_list<double>> rows) : n_(rows.size()) {
        a_.reserve(n_ * n_);
        for (const auto& row : rows) {
            assert(row.size() == n_);
            a_.insert(a_.end(), row.begin(), row.end());
        }
    }

    static SquareMatrix identity(std::size_t n) {
        SquareMatrix id(n);
        for (std::size_t i = 0; i < n; ++i) id(i, i) = 1.0;
        return id;
    }

    std::size_t size() const noexcept { return n_; }

    double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

    friend SquareMatrix operator*(const SquareMatrix& a, const SquareMatrix& b) {
        assert(a.n_ == b.n_);
        SquareMatrix c(a.n_);
        for (std::size_t i = 0; i < a.n_; ++i)
            for (std::size_t k = 0; k < a.n_; ++k) {
                const double aik = a(i, k);
                if (aik == 0.0) continue;
                for (std::size_t j = 0; j < a.n_; ++j) c(i, j) += aik * b(k, j);
            }
        return c;
    }

    bool operator==(const SquareMatrix&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<double> a_;
};

}  // namespace ultimax
