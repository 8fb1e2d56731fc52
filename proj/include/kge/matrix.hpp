#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace kge {

// Dense row-major matrix of doubles. Rows are handed out as spans; all
// numeric kernels in this project work on spans so they apply to rows and
// scratch buffers alike.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * cols_, cols_};
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double squared_l2(std::span<const double> a) { return dot(a, a); }

inline double l2_norm(std::span<const double> a) { return std::sqrt(squared_l2(a)); }

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

// Scale to unit norm; zero vectors are left alone.
inline void normalize(std::span<double> a) {
    double n = l2_norm(a);
    if (n > 0.0) {
        for (double& x : a) x /= n;
    }
}

// Project into the unit ball: rows with norm > 1 are scaled down to 1.
inline void clip_to_unit_ball(std::span<double> a) {
    double n = l2_norm(a);
    if (n > 1.0) {
        for (double& x : a) x /= n;
    }
}

} // namespace kge
