#pragma once

#include "radiomap/grid.hpp"
#include "radiomap/tensor.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

namespace testing {

inline std::filesystem::path temp_dir(const std::string& name)
{
    auto p = std::filesystem::temp_directory_path() / ("radiomap_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

template <typename T>
radiomap::Tensor<T> random_tensor(std::size_t n, std::size_t h, std::size_t w, std::size_t c, std::mt19937_64& rng,
                                  double lo = -1.0, double hi = 1.0)
{
    std::uniform_real_distribution<double> u(lo, hi);
    radiomap::Tensor<T> t(n, h, w, c);
    for (auto& v : t.data)
        v = static_cast<T>(u(rng));
    return t;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b)
{
    REQUIRE(a.size() == b.size());
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
        m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

} // namespace testing
