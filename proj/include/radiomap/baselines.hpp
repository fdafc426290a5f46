#pragma once

// Classical map estimators, all operating on dB values.

#include "radiomap/grid.hpp"

#include <Eigen/Dense>

#include <string>

namespace radiomap {

enum class BaselineMethod { knn, kriging, nuclear_norm };
std::string to_string(BaselineMethod m);
BaselineMethod baseline_method_from_string(const std::string& s);

struct BaselineConfig {
    BaselineMethod method = BaselineMethod::knn;
    std::size_t k = 5;
    double reg = 1e-5;
    double kernel_sigma = 0.0; // meters; <= 0 selects the automatic width
    double svt_step = 1.0;
    std::size_t svt_max_iterations = 2000;
    double svt_tolerance = 1e-6;
    bool svt_center = false; // complete deviations from the observed mean of each slice
    void validate() const;
};

MapTensor knn_estimate(const SampledMap& sampled, std::size_t k);

// 5 * sqrt(extent_y * extent_x / |Omega|).
double auto_kernel_sigma(const GridSpec& grid, std::size_t omega_size);
MapTensor kriging_estimate(const SampledMap& sampled, double reg, double sigma);

struct SvtStatus {
    bool converged = false;
    std::size_t iterations = 0;
    double final_relative_change = 0.0;
    std::vector<double> objective; // after each iteration
};

// min_X 0.5 ||P_Omega(X - Y)||_F^2 + reg ||X||_* by proximal gradient from X = 0.
Eigen::MatrixXd nuclear_norm_complete(const Eigen::MatrixXd& observed, const Eigen::MatrixXd& mask, double reg,
                                      double step, std::size_t max_iterations, double tolerance,
                                      SvtStatus* status = nullptr);
MapTensor nuclear_norm_estimate(const SampledMap& sampled, const BaselineConfig& cfg, SvtStatus* status = nullptr);

MapTensor run_baseline(const SampledMap& sampled, const BaselineConfig& cfg);

} // namespace radiomap
