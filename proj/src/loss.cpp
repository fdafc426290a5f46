#include "radiomap/loss.hpp"

#include <stdexcept>

namespace radiomap {

MaskedLoss masked_loss(const MapTensor& prediction, const MapTensor& target, const std::vector<Cell>& omega)
{
    if (!(prediction.grid == target.grid) || prediction.values.size() != target.values.size())
        throw std::invalid_argument("masked loss: prediction and target shapes differ");
    MaskedLoss out;
    if (omega.empty()) {
        out.empty_omega = true;
        return out;
    }
    const std::size_t nf = target.n_f();
    double sum = 0.0;
    for (const Cell& c : omega) {
        if (c.i >= target.grid.n_y || c.j >= target.grid.n_x)
            throw std::out_of_range("masked loss: observed cell outside the grid");
        for (std::size_t f = 0; f < nf; ++f) {
            const double d = target.at(c.i, c.j, f) - prediction.at(c.i, c.j, f);
            sum += d * d;
        }
    }
    out.value = sum / static_cast<double>(omega.size() * nf);
    return out;
}

template <typename T>
double batch_masked_loss(const Tensor<T>& prediction, const Tensor<T>& target, const Tensor<T>& weight,
                         Tensor<T>* grad)
{
    if (!prediction.same_shape(target))
        throw std::invalid_argument("batch loss: prediction " + prediction.shape().str() + " vs target " +
                                    target.shape().str());
    if (weight.n != prediction.n || weight.h != prediction.h || weight.w != prediction.w || weight.c != 1)
        throw std::invalid_argument("batch loss: weight tensor must be n x h x w x 1");
    const std::size_t C = prediction.c, HW = prediction.h * prediction.w;
    if (grad)
        *grad = Tensor<T>(prediction.n, prediction.h, prediction.w, C);

    std::vector<double> norm(prediction.n, 0.0);
    std::size_t used = 0;
    for (std::size_t b = 0; b < prediction.n; ++b) {
        for (std::size_t p = 0; p < HW; ++p)
            norm[b] += static_cast<double>(weight.data[b * HW + p]);
        norm[b] *= static_cast<double>(C);
        used += norm[b] > 0.0;
    }
    if (used == 0)
        return 0.0;

    double total = 0.0;
    for (std::size_t b = 0; b < prediction.n; ++b) {
        if (norm[b] <= 0.0)
            continue;
        double sum = 0.0;
        const double gscale = 2.0 / (norm[b] * static_cast<double>(used));
        for (std::size_t p = 0; p < HW; ++p) {
            const double w = static_cast<double>(weight.data[b * HW + p]);
            if (w == 0.0)
                continue;
            const std::size_t o = (b * HW + p) * C;
            for (std::size_t c = 0; c < C; ++c) {
                const double d = static_cast<double>(prediction.data[o + c]) - static_cast<double>(target.data[o + c]);
                sum += w * d * d;
                if (grad)
                    grad->data[o + c] = static_cast<T>(gscale * w * d);
            }
        }
        total += sum / norm[b];
    }
    return total / static_cast<double>(used);
}

template double batch_masked_loss<float>(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&,
                                         Tensor<float>*);
template double batch_masked_loss<double>(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&,
                                          Tensor<double>*);

} // namespace radiomap
