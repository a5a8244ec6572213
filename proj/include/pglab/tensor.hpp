#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "pglab/errors.hpp"

namespace pglab {

// Dense double-precision vector. All analysis math in this library runs in
// 64-bit; row-major layout everywhere so tensors serialize bit-exactly.
class Tensor1 {
public:
    Tensor1() = default;
    explicit Tensor1(std::size_t n, double fill = 0.0) : v_(n, fill) {}
    Tensor1(std::initializer_list<double> init) : v_(init) {}

    std::size_t size() const { return v_.size(); }
    bool empty() const { return v_.empty(); }

    double& operator[](std::size_t i) { return v_[i]; }
    double operator[](std::size_t i) const { return v_[i]; }

    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }

    std::vector<double>& values() { return v_; }
    const std::vector<double>& values() const { return v_; }

    auto begin() { return v_.begin(); }
    auto end() { return v_.end(); }
    auto begin() const { return v_.begin(); }
    auto end() const { return v_.end(); }

    void fill(double x) { std::fill(v_.begin(), v_.end(), x); }

    double sum() const {
        double s = 0.0;
        for (double x : v_) s += x;
        return s;
    }

    bool all_finite() const {
        for (double x : v_) {
            if (!std::isfinite(x)) return false;
        }
        return true;
    }

private:
    std::vector<double> v_;
};

// Dense row-major matrix.
class Tensor2 {
public:
    Tensor2() = default;
    Tensor2(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), v_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return v_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return v_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return v_[r * cols_ + c]; }

    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }

    double* row(std::size_t r) { return v_.data() + r * cols_; }
    const double* row(std::size_t r) const { return v_.data() + r * cols_; }

    std::vector<double>& values() { return v_; }
    const std::vector<double>& values() const { return v_; }

    void fill(double x) { std::fill(v_.begin(), v_.end(), x); }

    bool all_finite() const {
        for (double x : v_) {
            if (!std::isfinite(x)) return false;
        }
        return true;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> v_;
};

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw DimensionError(msg);
}

inline double dot(const Tensor1& a, const Tensor1& b) {
    require(a.size() == b.size(), "dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// y = W x
inline Tensor1 matvec(const Tensor2& w, const Tensor1& x) {
    require(w.cols() == x.size(), "matvec: dims " + std::to_string(w.rows()) + "x" +
                                      std::to_string(w.cols()) + " vs " + std::to_string(x.size()));
    Tensor1 y(w.rows());
    for (std::size_t r = 0; r < w.rows(); ++r) {
        const double* wr = w.row(r);
        double s = 0.0;
        for (std::size_t c = 0; c < w.cols(); ++c) s += wr[c] * x[c];
        y[r] = s;
    }
    return y;
}

// y += W x
inline void matvec_add(const Tensor2& w, const Tensor1& x, Tensor1& y) {
    require(w.cols() == x.size() && w.rows() == y.size(), "matvec_add: dim mismatch");
    for (std::size_t r = 0; r < w.rows(); ++r) {
        const double* wr = w.row(r);
        double s = 0.0;
        for (std::size_t c = 0; c < w.cols(); ++c) s += wr[c] * x[c];
        y[r] += s;
    }
}

// y = W^T x  (x has length rows, y length cols)
inline Tensor1 matvec_transpose(const Tensor2& w, const Tensor1& x) {
    require(w.rows() == x.size(), "matvec_transpose: dim mismatch");
    Tensor1 y(w.cols());
    for (std::size_t r = 0; r < w.rows(); ++r) {
        const double* wr = w.row(r);
        const double xr = x[r];
        for (std::size_t c = 0; c < w.cols(); ++c) y[c] += wr[c] * xr;
    }
    return y;
}

// W += a b^T  (outer-product accumulate; the gradient of y = W x patterns)
inline void outer_add(Tensor2& w, const Tensor1& a, const Tensor1& b) {
    require(w.rows() == a.size() && w.cols() == b.size(), "outer_add: dim mismatch");
    for (std::size_t r = 0; r < w.rows(); ++r) {
        double* wr = w.row(r);
        const double ar = a[r];
        for (std::size_t c = 0; c < w.cols(); ++c) wr[c] += ar * b[c];
    }
}

inline void axpy(double alpha, const Tensor1& x, Tensor1& y) {
    require(x.size() == y.size(), "axpy: length mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline Tensor1 concat(const Tensor1& a, const Tensor1& b) {
    Tensor1 out(a.size() + b.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i];
    for (std::size_t i = 0; i < b.size(); ++i) out[a.size() + i] = b[i];
    return out;
}

inline std::string shape_string(const Tensor2& w) {
    std::ostringstream os;
    os << w.rows() << "x" << w.cols();
    return os.str();
}

}  // namespace pglab
