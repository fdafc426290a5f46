#pragma once

// Layers of the completion autoencoder with explicit forward and backward
// passes. Every layer caches what its backward pass needs when run through
// forward_train(); forward() is const and safe to call concurrently.

#include "radiomap/tensor.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace radiomap {

enum class LayerKind {
    conv,
    conv_transpose,
    avg_pool,
    bilinear_upsample,
    prelu,
    leaky_relu,
    dense,
    input_norm,
    output_scale,
    db_to_linear,
    bem,
    linear_to_db,
};

std::string to_string(LayerKind k);
LayerKind layer_kind_from_string(const std::string& s);

template <typename T>
struct ParamRef {
    std::string name;
    std::vector<std::size_t> dims;
    std::vector<T>* value = nullptr;
    std::vector<T>* grad = nullptr;
};

template <typename T>
class Layer {
public:
    virtual ~Layer() = default;

    virtual LayerKind kind() const = 0;
    virtual Shape output_shape(Shape in) const = 0;
    virtual Tensor<T> forward(const Tensor<T>& x) const = 0;

    Tensor<T> forward_train(const Tensor<T>& x)
    {
        cache_ = x;
        return forward(x);
    }

    // Returns dL/dx and accumulates parameter gradients.
    Tensor<T> backward(const Tensor<T>& grad_out)
    {
        if (!cache_)
            throw std::logic_error(to_string(kind()) + " layer: backward called without a cached forward pass");
        return backward_impl(*cache_, grad_out);
    }

    void clear_cache() { cache_.reset(); }
    virtual std::vector<ParamRef<T>> params() { return {}; }
    std::size_t parameter_count();
    void zero_grad();

protected:
    virtual Tensor<T> backward_impl(const Tensor<T>& x, const Tensor<T>& grad_out) = 0;

private:
    std::optional<Tensor<T>> cache_;
};

// Zero-padded stride-1 "same" convolution:
//   out[i,j,co] = bias[co] + sum_{ci,u,v} F[u,v,ci,co] * in[i - u, j - v, ci],  u,v in [-k, k].
// The transpose variant is the exact adjoint of that operator:
//   out[i,j,co] = bias[co] + sum_{ci,u,v} F[u,v,ci,co] * in[i + u, j + v, ci].
// Kernel storage is a (K*K*C_in) x C_out row-major matrix indexed by ((u+k)*K + (v+k))*C_in + ci.
template <typename T>
class Conv2d final : public Layer<T> {
public:
    Conv2d(std::size_t kernel_size, std::size_t in_channels, std::size_t out_channels, bool transpose);

    LayerKind kind() const override { return transpose_ ? LayerKind::conv_transpose : LayerKind::conv; }
    Shape output_shape(Shape in) const override;
    Tensor<T> forward(const Tensor<T>& x) const override;
    std::vector<ParamRef<T>> params() override;

    std::size_t kernel_size() const { return K_; }
    std::size_t in_channels() const { return cin_; }
    std::size_t out_channels() const { return cout_; }
    T& kernel(int u, int v, std::size_t ci, std::size_t co);
    std::vector<T>& kernel_data() { return w_; }
    std::vector<T>& bias_data() { return b_; }

protected:
    Tensor<T> backward_impl(const Tensor<T>& x, const Tensor<T>& grad_out) override;

private:
    typename Tensor<T>::Matrix im2col(const Tensor<T>& x) const;
    void col2im(const typename Tensor<T>::Matrix& cols, Tensor<T>& dx) const;

    std::size_t K_, cin_, cout_;
    bool transpose_;
    std::vector<T> w_, b_, gw_, gb_;
};

// 2x2 average pooling with stride 2.
template <typename T>
class AvgPool2 final : public Layer<T> {
public:
    LayerKind kind() const override { return LayerKind::avg_pool; }
    Shape output_shape(Shape in) const override;
    Tensor<T> forward(const Tensor<T>& x) const override;

protected:
    Tensor<T> backward_impl(const Tensor<T>& x, const Tensor<T>& grad_out) override;
};

// Align-corners bilinear up-sampling by 2.
template <typename T>
class BilinearUpsample2 final : public Layer<T> {
public:
    LayerKind kind() const override { return LayerKind::bilinear_upsample; }
    Shape output_shape(Shape in) const override { return {2 * in.h, 2 * in.w, in.c}; }
    Tensor<T> forward(const Tensor<T>& x) const override;

protected:
    Tensor<T> backward_impl(const Tensor<T>& x, const Tensor<T>& grad_out) override;
};

// Per-channel leaky rectifier; the leak is trainable for PReLU and fixed otherwise.
template <typename T>
class LeakyRectifier final : public Layer<T> {
public:
    LeakyRectifier(std::size_t channels, T leak, bool trainable);

    LayerKind kind() const override { return trainable_ ? LayerKind::prelu : LayerKind::leaky_relu; }
    Shape output_shape(Shape in) const override { return in; }
    Tensor<T> forward(const Tensor<T>& x) const override;
    std::vector<ParamRef<T>> params() override;
    std::vector<T>& leak_data() { return a_; }

protected:
    Tensor<T> backward_impl(const Tensor<T>& x, const Tensor<T>& grad_out) override;

private:
    bool trainable_;
    std::vector<T> a_, ga_;
};

// Fully connected map from a flattened h x w x c_in sample to h_out x w_out x c_out.
template <typename T>
class Dense final : public Layer<T> {
public:
    Dense(Shape in, Shape out);

    LayerKind kind() const override { return LayerKind::dense; }
    Shape output_shape(Shape in) const override;
    Tensor<T> forward(const Tensor<T>& x) const override;
    std::vector<ParamRef<T>> params() override;

protected:
    Tensor<T> backward_impl(const Tensor<T>& x, const Tensor<T>& grad_out) override;

private:
    Shape in_, out_;
    std::vector<T> w_, b_, gw_, gb_;
};

// Fixed input encoding: value channels become mask * (x - offset) / scale, where
// mask is 1 only on observed cells (mask channel == 1); mask channels pass through.
template <typename T>
class InputNorm final : public Layer<T> {
public:
    InputNorm(std::size_t value_channels, double offset, double scale);

    LayerKind kind() const override { return LayerKind::input_norm; }
    Shape output_shape(Shape in) const override { return in; }
    Tensor<T> forward(const Tensor<T>& x) const override;

protected:
    Tensor<T> backward_impl(const Tensor<T>& x, const Tensor<T>& grad_out) override;

private:
    std::size_t nv_;
    T offset_, scale_;
};

// y = x * scale + offset
template <typename T>
class OutputScale final : public Layer<T> {
public:
    OutputScale(double offset, double scale) : offset_(static_cast<T>(offset)), scale_(static_cast<T>(scale)) {}

    LayerKind kind() const override { return LayerKind::output_scale; }
    Shape output_shape(Shape in) const override { return in; }
    Tensor<T> forward(const Tensor<T>& x) const override;

protected:
    Tensor<T> backward_impl(const Tensor<T>& x, const Tensor<T>& grad_out) override;

private:
    T offset_, scale_;
};

template <typename T>
class DbToLinear final : public Layer<T> {
public:
    LayerKind kind() const override { return LayerKind::db_to_linear; }
    Shape output_shape(Shape in) const override { return in; }
    Tensor<T> forward(const Tensor<T>& x) const override;

protected:
    Tensor<T> backward_impl(const Tensor<T>& x, const Tensor<T>& grad_out) override;
};

// 10 log10(max(x, 1e-20)); zero gradient below the floor.
template <typename T>
class LinearToDb final : public Layer<T> {
public:
    LayerKind kind() const override { return LayerKind::linear_to_db; }
    Shape output_shape(Shape in) const override { return in; }
    Tensor<T> forward(const Tensor<T>& x) const override;

protected:
    Tensor<T> backward_impl(const Tensor<T>& x, const Tensor<T>& grad_out) override;
};

// Basis-expansion output layer: out[p, f] = sum_b coeff[p, b] * beta_b(f). No trainable parameters.
template <typename T>
class BemLayer final : public Layer<T> {
public:
    explicit BemLayer(const Eigen::MatrixXd& basis_values /* B x N_f */);

    LayerKind kind() const override { return LayerKind::bem; }
    Shape output_shape(Shape in) const override;
    Tensor<T> forward(const Tensor<T>& x) const override;

protected:
    Tensor<T> backward_impl(const Tensor<T>& x, const Tensor<T>& grad_out) override;

private:
    typename Tensor<T>::Matrix beta_;
};

} // namespace radiomap
