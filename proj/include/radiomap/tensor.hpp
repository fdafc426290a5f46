#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace radiomap {

// Spatial shape of one sample.
struct Shape {
    std::size_t h = 0, w = 0, c = 0;
    std::size_t size() const { return h * w * c; }
    bool operator==(const Shape&) const = default;
    std::string str() const;
};

// Dense batch of feature maps, NHWC, row-major.
template <typename T>
struct Tensor {
    using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using MatrixMap = Eigen::Map<Matrix>;
    using ConstMatrixMap = Eigen::Map<const Matrix>;

    std::size_t n = 0, h = 0, w = 0, c = 0;
    std::vector<T> data;

    Tensor() = default;
    Tensor(std::size_t n_, std::size_t h_, std::size_t w_, std::size_t c_, T fill = T(0))
        : n(n_), h(h_), w(w_), c(c_), data(n_ * h_ * w_ * c_, fill)
    {
    }
    Tensor(std::size_t n_, Shape s, T fill = T(0)) : Tensor(n_, s.h, s.w, s.c, fill) {}

    Shape shape() const { return {h, w, c}; }
    std::size_t size() const { return data.size(); }
    std::size_t offset(std::size_t b, std::size_t i, std::size_t j, std::size_t k) const
    {
        return ((b * h + i) * w + j) * c + k;
    }
    T& operator()(std::size_t b, std::size_t i, std::size_t j, std::size_t k) { return data[offset(b, i, j, k)]; }
    T operator()(std::size_t b, std::size_t i, std::size_t j, std::size_t k) const { return data[offset(b, i, j, k)]; }

    bool same_shape(const Tensor& o) const { return n == o.n && h == o.h && w == o.w && c == o.c; }

    // (n*h*w) x c view.
    MatrixMap pixels()
    {
        return MatrixMap(data.data(), static_cast<Eigen::Index>(n * h * w), static_cast<Eigen::Index>(c));
    }
    ConstMatrixMap pixels() const
    {
        return ConstMatrixMap(data.data(), static_cast<Eigen::Index>(n * h * w), static_cast<Eigen::Index>(c));
    }

    template <typename U>
    Tensor<U> cast() const
    {
        Tensor<U> out(n, h, w, c);
        for (std::size_t k = 0; k < data.size(); ++k)
            out.data[k] = static_cast<U>(data[k]);
        return out;
    }

    // Single sample b as its own tensor.
    Tensor sample(std::size_t b) const;
};

template <typename T>
Tensor<T> Tensor<T>::sample(std::size_t b) const
{
    if (b >= n)
        throw std::out_of_range("tensor sample index out of range");
    Tensor out(1, h, w, c);
    const std::size_t stride = h * w * c;
    std::copy(data.begin() + static_cast<long>(b * stride), data.begin() + static_cast<long>((b + 1) * stride),
              out.data.begin());
    return out;
}

inline std::string Shape::str() const
{
    return std::to_string(h) + "x" + std::to_string(w) + "x" + std::to_string(c);
}

} // namespace radiomap
