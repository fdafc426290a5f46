#pragma once

#include "radiomap/grid.hpp"
#include "radiomap/tensor.hpp"

namespace radiomap {

struct MaskedLoss {
    double value = 0.0;
    bool empty_omega = false; // set when there was nothing to compare; value is then 0
};

// ||P_Omega(target - prediction)||_F^2 / (|Omega| * N_f), both maps in dB.
MaskedLoss masked_loss(const MapTensor& prediction, const MapTensor& target, const std::vector<Cell>& omega);

// Batched weighted squared error. `weight` is n x h x w x 1 in {0, 1}; each
// instance is normalized by (sum of its weights) * channels and the batch loss
// is the mean over instances. Writes dL/dprediction into `grad` when given.
template <typename T>
double batch_masked_loss(const Tensor<T>& prediction, const Tensor<T>& target, const Tensor<T>& weight,
                         Tensor<T>* grad);

} // namespace radiomap
