#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace lgenet {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

inline void check(bool cond, const std::string& msg) {
    if (!cond) throw Error(msg);
}

// Dense row-major tensor. Rank is dynamic but almost everything in the
// network is a matrix (points x channels); rank-3 is used for stacked
// kernel-point weight matrices.
template <typename T>
struct Tensor {
    std::vector<int64_t> shape;
    std::vector<T> v;

    Tensor() = default;
    explicit Tensor(std::vector<int64_t> s) : shape(std::move(s)) {
        v.assign(static_cast<size_t>(numel_of(shape)), T(0));
    }
    Tensor(std::vector<int64_t> s, std::vector<T> data)
        : shape(std::move(s)), v(std::move(data)) {
        check(numel_of(shape) == static_cast<int64_t>(v.size()),
              "tensor: shape does not match data length");
    }

    static int64_t numel_of(const std::vector<int64_t>& s) {
        int64_t n = 1;
        for (int64_t d : s) n *= d;
        return n;
    }

    static Tensor zeros(std::vector<int64_t> s) { return Tensor(std::move(s)); }
    static Tensor scalar(T x) { return Tensor({1}, {x}); }

    int64_t numel() const { return static_cast<int64_t>(v.size()); }
    int rank() const { return static_cast<int>(shape.size()); }
    int64_t rows() const {
        check(rank() == 2, "tensor: rows() on non-matrix");
        return shape[0];
    }
    int64_t cols() const {
        check(rank() == 2, "tensor: cols() on non-matrix");
        return shape[1];
    }

    T& at(int64_t i, int64_t j) { return v[static_cast<size_t>(i * shape[1] + j)]; }
    const T& at(int64_t i, int64_t j) const {
        return v[static_cast<size_t>(i * shape[1] + j)];
    }

    T* row_ptr(int64_t i) { return v.data() + i * shape[1]; }
    const T* row_ptr(int64_t i) const { return v.data() + i * shape[1]; }

    void fill(T x) { std::fill(v.begin(), v.end(), x); }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (T x : v)
            if (!std::isfinite(static_cast<double>(x))) return false;
        return true;
    }

    std::string shape_str() const {
        std::string s = "[";
        for (size_t i = 0; i < shape.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(shape[i]);
        }
        return s + "]";
    }
};

using Tensor32 = Tensor<float>;
using Tensor64 = Tensor<double>;

}  // namespace lgenet
