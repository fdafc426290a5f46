#include "radiomap/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace radiomap {

std::string to_string(LayerKind k)
{
    switch (k) {
    case LayerKind::conv: return "conv";
    case LayerKind::conv_transpose: return "conv_transpose";
    case LayerKind::avg_pool: return "avg_pool";
    case LayerKind::bilinear_upsample: return "bilinear_upsample";
    case LayerKind::prelu: return "prelu";
    case LayerKind::leaky_relu: return "leaky_relu";
    case LayerKind::dense: return "dense";
    case LayerKind::input_norm: return "input_norm";
    case LayerKind::output_scale: return "output_scale";
    case LayerKind::db_to_linear: return "db_to_linear";
    case LayerKind::bem: return "bem";
    case LayerKind::linear_to_db: return "linear_to_db";
    }
    return "?";
}

LayerKind layer_kind_from_string(const std::string& s)
{
    for (auto k : {LayerKind::conv, LayerKind::conv_transpose, LayerKind::avg_pool, LayerKind::bilinear_upsample,
                   LayerKind::prelu, LayerKind::leaky_relu, LayerKind::dense, LayerKind::input_norm,
                   LayerKind::output_scale, LayerKind::db_to_linear, LayerKind::bem, LayerKind::linear_to_db})
        if (to_string(k) == s)
            return k;
    throw std::invalid_argument("unknown layer kind '" + s + "'");
}

template <typename T>
std::size_t Layer<T>::parameter_count()
{
    std::size_t n = 0;
    for (auto& p : params())
        n += p.value->size();
    return n;
}

template <typename T>
void Layer<T>::zero_grad()
{
    for (auto& p : params())
        std::fill(p.grad->begin(), p.grad->end(), T(0));
}

namespace {

template <typename T>
void require_channels(const Tensor<T>& x, std::size_t c, LayerKind kind)
{
    if (x.c != c)
        throw std::invalid_argument(to_string(kind) + " layer expects " + std::to_string(c) + " input channels, got " +
                                    std::to_string(x.c));
}

template <typename T>
void require_same(const Tensor<T>& a, const Tensor<T>& b, LayerKind kind)
{
    if (!a.same_shape(b))
        throw std::invalid_argument(to_string(kind) + " layer: gradient shape does not match the layer output");
}

} // namespace

// ---------------------------------------------------------------- Conv2d

template <typename T>
Conv2d<T>::Conv2d(std::size_t kernel_size, std::size_t in_channels, std::size_t out_channels, bool transpose)
    : K_(kernel_size), cin_(in_channels), cout_(out_channels), transpose_(transpose)
{
    if (K_ % 2 == 0 || K_ == 0)
        throw std::invalid_argument("convolution kernel size must be odd");
    if (cin_ == 0 || cout_ == 0)
        throw std::invalid_argument("convolution channel counts must be positive");
    w_.assign(K_ * K_ * cin_ * cout_, T(0));
    gw_.assign(w_.size(), T(0));
    b_.assign(cout_, T(0));
    gb_.assign(cout_, T(0));
}

template <typename T>
Shape Conv2d<T>::output_shape(Shape in) const
{
    if (in.c != cin_)
        throw std::invalid_argument("convolution expects " + std::to_string(cin_) + " input channels, got " +
                                    std::to_string(in.c));
    return {in.h, in.w, cout_};
}

template <typename T>
T& Conv2d<T>::kernel(int u, int v, std::size_t ci, std::size_t co)
{
    const int k = static_cast<int>(K_ / 2);
    const std::size_t row = (static_cast<std::size_t>(u + k) * K_ + static_cast<std::size_t>(v + k)) * cin_ + ci;
    return w_[row * cout_ + co];
}

template <typename T>
typename Tensor<T>::Matrix Conv2d<T>::im2col(const Tensor<T>& x) const
{
    const long k = static_cast<long>(K_ / 2);
    const long s = transpose_ ? 1 : -1;
    const long H = static_cast<long>(x.h), W = static_cast<long>(x.w);
    typename Tensor<T>::Matrix cols(static_cast<Eigen::Index>(x.n * x.h * x.w), static_cast<Eigen::Index>(K_ * K_ * cin_));
    T* dst = cols.data();
    for (std::size_t b = 0; b < x.n; ++b)
        for (long i = 0; i < H; ++i)
            for (long j = 0; j < W; ++j)
                for (long u = -k; u <= k; ++u) {
                    const long si = i + s * u;
                    for (long v = -k; v <= k; ++v, dst += cin_) {
                        const long sj = j + s * v;
                        if (si < 0 || si >= H || sj < 0 || sj >= W)
                            std::fill(dst, dst + cin_, T(0));
                        else
                            std::memcpy(dst, &x.data[x.offset(b, static_cast<std::size_t>(si), static_cast<std::size_t>(sj), 0)],
                                        cin_ * sizeof(T));
                    }
                }
    return cols;
}

template <typename T>
void Conv2d<T>::col2im(const typename Tensor<T>::Matrix& cols, Tensor<T>& dx) const
{
    const long k = static_cast<long>(K_ / 2);
    const long s = transpose_ ? 1 : -1;
    const long H = static_cast<long>(dx.h), W = static_cast<long>(dx.w);
    const T* src = cols.data();
    for (std::size_t b = 0; b < dx.n; ++b)
        for (long i = 0; i < H; ++i)
            for (long j = 0; j < W; ++j)
                for (long u = -k; u <= k; ++u) {
                    const long si = i + s * u;
                    for (long v = -k; v <= k; ++v, src += cin_) {
                        const long sj = j + s * v;
                        if (si < 0 || si >= H || sj < 0 || sj >= W)
                            continue;
                        T* d = &dx.data[dx.offset(b, static_cast<std::size_t>(si), static_cast<std::size_t>(sj), 0)];
                        for (std::size_t c = 0; c < cin_; ++c)
                            d[c] += src[c];
                    }
                }
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x) const
{
    require_channels(x, cin_, kind());
    using Matrix = typename Tensor<T>::Matrix;
    Tensor<T> y(x.n, x.h, x.w, cout_);
    auto W = typename Tensor<T>::ConstMatrixMap(w_.data(), static_cast<Eigen::Index>(K_ * K_ * cin_), static_cast<Eigen::Index>(cout_));
    auto bias = Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(b_.data(), static_cast<Eigen::Index>(cout_));
    auto out = y.pixels();
    if (K_ == 1) {
        out.noalias() = x.pixels() * W;
    } else {
        const Matrix cols = im2col(x);
        out.noalias() = cols * W;
    }
    out.rowwise() += bias;
    return y;
}

template <typename T>
Tensor<T> Conv2d<T>::backward_impl(const Tensor<T>& x, const Tensor<T>& grad_out)
{
    if (grad_out.n != x.n || grad_out.h != x.h || grad_out.w != x.w || grad_out.c != cout_)
        throw std::invalid_argument("convolution backward: gradient shape mismatch");
    using Matrix = typename Tensor<T>::Matrix;
    const auto rows = static_cast<Eigen::Index>(K_ * K_ * cin_);
    auto W = typename Tensor<T>::ConstMatrixMap(w_.data(), rows, static_cast<Eigen::Index>(cout_));
    auto gW = typename Tensor<T>::MatrixMap(gw_.data(), rows, static_cast<Eigen::Index>(cout_));
    auto gb = Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(gb_.data(), static_cast<Eigen::Index>(cout_));
    const auto dy = grad_out.pixels();
    gb += dy.colwise().sum();

    Tensor<T> dx(x.n, x.h, x.w, cin_);
    if (K_ == 1) {
        gW.noalias() += x.pixels().transpose() * dy;
        dx.pixels().noalias() = dy * W.transpose();
    } else {
        const Matrix cols = im2col(x);
        gW.noalias() += cols.transpose() * dy;
        const Matrix dcols = dy * W.transpose();
        col2im(dcols, dx);
    }
    return dx;
}

template <typename T>
std::vector<ParamRef<T>> Conv2d<T>::params()
{
    return {{"kernel", {K_, K_, cin_, cout_}, &w_, &gw_}, {"bias", {cout_}, &b_, &gb_}};
}

// ---------------------------------------------------------------- AvgPool2

template <typename T>
Shape AvgPool2<T>::output_shape(Shape in) const
{
    if (in.h % 2 != 0 || in.w % 2 != 0)
        throw std::invalid_argument("average pooling needs even spatial dimensions, got " + in.str());
    return {in.h / 2, in.w / 2, in.c};
}

template <typename T>
Tensor<T> AvgPool2<T>::forward(const Tensor<T>& x) const
{
    const Shape o = output_shape(x.shape());
    Tensor<T> y(x.n, o);
    for (std::size_t b = 0; b < x.n; ++b)
        for (std::size_t i = 0; i < o.h; ++i)
            for (std::size_t j = 0; j < o.w; ++j) {
                const T* p00 = &x.data[x.offset(b, 2 * i, 2 * j, 0)];
                const T* p01 = p00 + x.c;
                const T* p10 = &x.data[x.offset(b, 2 * i + 1, 2 * j, 0)];
                const T* p11 = p10 + x.c;
                T* d = &y.data[y.offset(b, i, j, 0)];
                for (std::size_t c = 0; c < x.c; ++c)
                    d[c] = T(0.25) * (p00[c] + p01[c] + p10[c] + p11[c]);
            }
    return y;
}

template <typename T>
Tensor<T> AvgPool2<T>::backward_impl(const Tensor<T>& x, const Tensor<T>& grad_out)
{
    const Shape o = output_shape(x.shape());
    if (grad_out.n != x.n || !(grad_out.shape() == o))
        throw std::invalid_argument("average pooling backward: gradient shape mismatch");
    Tensor<T> dx(x.n, x.h, x.w, x.c);
    for (std::size_t b = 0; b < x.n; ++b)
        for (std::size_t i = 0; i < x.h; ++i)
            for (std::size_t j = 0; j < x.w; ++j) {
                const T* g = &grad_out.data[grad_out.offset(b, i / 2, j / 2, 0)];
                T* d = &dx.data[dx.offset(b, i, j, 0)];
                for (std::size_t c = 0; c < x.c; ++c)
                    d[c] = T(0.25) * g[c];
            }
    return dx;
}

// ---------------------------------------------------------------- BilinearUpsample2

namespace {

struct Interp {
    std::size_t lo, hi;
    double frac;
};

// Align-corners source coordinates for doubling an axis of length n.
std::vector<Interp> upsample_axis(std::size_t n)
{
    const std::size_t m = 2 * n;
    std::vector<Interp> out(m);
    for (std::size_t o = 0; o < m; ++o) {
        if (n == 1) {
            out[o] = {0, 0, 0.0};
            continue;
        }
        const double pos = static_cast<double>(o) * static_cast<double>(n - 1) / static_cast<double>(m - 1);
        const auto lo = std::min(static_cast<std::size_t>(std::floor(pos)), n - 1);
        out[o] = {lo, std::min(lo + 1, n - 1), pos - static_cast<double>(lo)};
    }
    return out;
}

} // namespace

template <typename T>
Tensor<T> BilinearUpsample2<T>::forward(const Tensor<T>& x) const
{
    const auto ay = upsample_axis(x.h), ax = upsample_axis(x.w);
    Tensor<T> y(x.n, 2 * x.h, 2 * x.w, x.c);
    for (std::size_t b = 0; b < x.n; ++b)
        for (std::size_t i = 0; i < y.h; ++i) {
            const T fy = static_cast<T>(ay[i].frac);
            for (std::size_t j = 0; j < y.w; ++j) {
                const T fx = static_cast<T>(ax[j].frac);
                const T w00 = (1 - fy) * (1 - fx), w01 = (1 - fy) * fx, w10 = fy * (1 - fx), w11 = fy * fx;
                const T* p00 = &x.data[x.offset(b, ay[i].lo, ax[j].lo, 0)];
                const T* p01 = &x.data[x.offset(b, ay[i].lo, ax[j].hi, 0)];
                const T* p10 = &x.data[x.offset(b, ay[i].hi, ax[j].lo, 0)];
                const T* p11 = &x.data[x.offset(b, ay[i].hi, ax[j].hi, 0)];
                T* d = &y.data[y.offset(b, i, j, 0)];
                for (std::size_t c = 0; c < x.c; ++c)
                    d[c] = w00 * p00[c] + w01 * p01[c] + w10 * p10[c] + w11 * p11[c];
            }
        }
    return y;
}

template <typename T>
Tensor<T> BilinearUpsample2<T>::backward_impl(const Tensor<T>& x, const Tensor<T>& grad_out)
{
    if (grad_out.n != x.n || grad_out.h != 2 * x.h || grad_out.w != 2 * x.w || grad_out.c != x.c)
        throw std::invalid_argument("upsampling backward: gradient shape mismatch");
    const auto ay = upsample_axis(x.h), ax = upsample_axis(x.w);
    Tensor<T> dx(x.n, x.h, x.w, x.c);
    for (std::size_t b = 0; b < x.n; ++b)
        for (std::size_t i = 0; i < grad_out.h; ++i) {
            const T fy = static_cast<T>(ay[i].frac);
            for (std::size_t j = 0; j < grad_out.w; ++j) {
                const T fx = static_cast<T>(ax[j].frac);
                const T w00 = (1 - fy) * (1 - fx), w01 = (1 - fy) * fx, w10 = fy * (1 - fx), w11 = fy * fx;
                const T* g = &grad_out.data[grad_out.offset(b, i, j, 0)];
                T* d00 = &dx.data[dx.offset(b, ay[i].lo, ax[j].lo, 0)];
                T* d01 = &dx.data[dx.offset(b, ay[i].lo, ax[j].hi, 0)];
                T* d10 = &dx.data[dx.offset(b, ay[i].hi, ax[j].lo, 0)];
                T* d11 = &dx.data[dx.offset(b, ay[i].hi, ax[j].hi, 0)];
                for (std::size_t c = 0; c < x.c; ++c) {
                    d00[c] += w00 * g[c];
                    d01[c] += w01 * g[c];
                    d10[c] += w10 * g[c];
                    d11[c] += w11 * g[c];
                }
            }
        }
    return dx;
}

// ---------------------------------------------------------------- LeakyRectifier

template <typename T>
LeakyRectifier<T>::LeakyRectifier(std::size_t channels, T leak, bool trainable)
    : trainable_(trainable), a_(channels, leak), ga_(channels, T(0))
{
}

template <typename T>
Tensor<T> LeakyRectifier<T>::forward(const Tensor<T>& x) const
{
    require_channels(x, a_.size(), kind());
    Tensor<T> y = x;
    const std::size_t C = x.c;
    for (std::size_t p = 0; p < y.data.size(); p += C)
        for (std::size_t c = 0; c < C; ++c) {
            T& v = y.data[p + c];
            if (!(v > T(0)))
                v *= a_[c];
        }
    return y;
}

template <typename T>
Tensor<T> LeakyRectifier<T>::backward_impl(const Tensor<T>& x, const Tensor<T>& grad_out)
{
    require_same(x, grad_out, kind());
    Tensor<T> dx = grad_out;
    const std::size_t C = x.c;
    for (std::size_t p = 0; p < dx.data.size(); p += C)
        for (std::size_t c = 0; c < C; ++c) {
            const T v = x.data[p + c];
            if (!(v > T(0))) {
                if (trainable_)
                    ga_[c] += v * grad_out.data[p + c];
                dx.data[p + c] *= a_[c];
            }
        }
    return dx;
}

template <typename T>
std::vector<ParamRef<T>> LeakyRectifier<T>::params()
{
    if (!trainable_)
        return {};
    return {{"leak", {a_.size()}, &a_, &ga_}};
}

// ---------------------------------------------------------------- Dense

template <typename T>
Dense<T>::Dense(Shape in, Shape out) : in_(in), out_(out)
{
    if (in.size() == 0 || out.size() == 0)
        throw std::invalid_argument("dense layer shapes must be non-empty");
    w_.assign(in.size() * out.size(), T(0));
    gw_.assign(w_.size(), T(0));
    b_.assign(out.size(), T(0));
    gb_.assign(out.size(), T(0));
}

template <typename T>
Shape Dense<T>::output_shape(Shape in) const
{
    if (!(in == in_))
        throw std::invalid_argument("dense layer built for input " + in_.str() + ", got " + in.str());
    return out_;
}

template <typename T>
Tensor<T> Dense<T>::forward(const Tensor<T>& x) const
{
    output_shape(x.shape());
    const auto ni = static_cast<Eigen::Index>(in_.size()), no = static_cast<Eigen::Index>(out_.size());
    typename Tensor<T>::ConstMatrixMap X(x.data.data(), static_cast<Eigen::Index>(x.n), ni);
    typename Tensor<T>::ConstMatrixMap W(w_.data(), ni, no);
    Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bias(b_.data(), no);
    Tensor<T> y(x.n, out_);
    typename Tensor<T>::MatrixMap Y(y.data.data(), static_cast<Eigen::Index>(x.n), no);
    Y.noalias() = X * W;
    Y.rowwise() += bias;
    return y;
}

template <typename T>
Tensor<T> Dense<T>::backward_impl(const Tensor<T>& x, const Tensor<T>& grad_out)
{
    if (grad_out.n != x.n || !(grad_out.shape() == out_))
        throw std::invalid_argument("dense backward: gradient shape mismatch");
    const auto ni = static_cast<Eigen::Index>(in_.size()), no = static_cast<Eigen::Index>(out_.size());
    const auto N = static_cast<Eigen::Index>(x.n);
    typename Tensor<T>::ConstMatrixMap X(x.data.data(), N, ni);
    typename Tensor<T>::ConstMatrixMap G(grad_out.data.data(), N, no);
    typename Tensor<T>::ConstMatrixMap W(w_.data(), ni, no);
    typename Tensor<T>::MatrixMap gW(gw_.data(), ni, no);
    Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> gb(gb_.data(), no);
    gW.noalias() += X.transpose() * G;
    gb += G.colwise().sum();
    Tensor<T> dx(x.n, in_);
    typename Tensor<T>::MatrixMap DX(dx.data.data(), N, ni);
    DX.noalias() = G * W.transpose();
    return dx;
}

template <typename T>
std::vector<ParamRef<T>> Dense<T>::params()
{
    return {{"kernel", {in_.size(), out_.size()}, &w_, &gw_}, {"bias", {out_.size()}, &b_, &gb_}};
}

// ---------------------------------------------------------------- fixed layers

template <typename T>
InputNorm<T>::InputNorm(std::size_t value_channels, double offset, double scale)
    : nv_(value_channels), offset_(static_cast<T>(offset)), scale_(static_cast<T>(scale))
{
    if (!(scale > 0.0))
        throw std::invalid_argument("input normalization scale must be positive");
}

template <typename T>
Tensor<T> InputNorm<T>::forward(const Tensor<T>& x) const
{
    if (x.c <= nv_)
        throw std::invalid_argument("input tensor lacks the mask channel");
    Tensor<T> y = x;
    for (std::size_t p = 0; p < y.data.size(); p += x.c) {
        const bool observed = x.data[p + nv_] == T(1);
        for (std::size_t c = 0; c < nv_; ++c)
            y.data[p + c] = observed ? (x.data[p + c] - offset_) / scale_ : T(0);
    }
    return y;
}

template <typename T>
Tensor<T> InputNorm<T>::backward_impl(const Tensor<T>& x, const Tensor<T>& grad_out)
{
    require_same(x, grad_out, kind());
    Tensor<T> dx = grad_out;
    for (std::size_t p = 0; p < dx.data.size(); p += x.c) {
        const bool observed = x.data[p + nv_] == T(1);
        for (std::size_t c = 0; c < nv_; ++c)
            dx.data[p + c] = observed ? grad_out.data[p + c] / scale_ : T(0);
    }
    return dx;
}

template <typename T>
Tensor<T> OutputScale<T>::forward(const Tensor<T>& x) const
{
    Tensor<T> y = x;
    for (auto& v : y.data)
        v = v * scale_ + offset_;
    return y;
}

template <typename T>
Tensor<T> OutputScale<T>::backward_impl(const Tensor<T>& x, const Tensor<T>& grad_out)
{
    require_same(x, grad_out, kind());
    Tensor<T> dx = grad_out;
    for (auto& v : dx.data)
        v *= scale_;
    return dx;
}

template <typename T>
Tensor<T> DbToLinear<T>::forward(const Tensor<T>& x) const
{
    Tensor<T> y = x;
    for (auto& v : y.data)
        v = std::pow(T(10), v / T(10));
    return y;
}

template <typename T>
Tensor<T> DbToLinear<T>::backward_impl(const Tensor<T>& x, const Tensor<T>& grad_out)
{
    require_same(x, grad_out, kind());
    Tensor<T> dx = grad_out;
    const T k = std::log(T(10)) / T(10);
    for (std::size_t p = 0; p < dx.data.size(); ++p)
        dx.data[p] *= k * std::pow(T(10), x.data[p] / T(10));
    return dx;
}

template <typename T>
Tensor<T> LinearToDb<T>::forward(const Tensor<T>& x) const
{
    Tensor<T> y = x;
    for (auto& v : y.data)
        v = v > T(1e-20) ? T(10) * std::log10(v) : T(-200);
    return y;
}

template <typename T>
Tensor<T> LinearToDb<T>::backward_impl(const Tensor<T>& x, const Tensor<T>& grad_out)
{
    require_same(x, grad_out, kind());
    Tensor<T> dx = grad_out;
    const T k = T(10) / std::log(T(10));
    for (std::size_t p = 0; p < dx.data.size(); ++p)
        dx.data[p] = x.data[p] > T(1e-20) ? dx.data[p] * k / x.data[p] : T(0);
    return dx;
}

template <typename T>
BemLayer<T>::BemLayer(const Eigen::MatrixXd& basis_values) : beta_(basis_values.template cast<T>())
{
    if (basis_values.rows() < 1 || basis_values.cols() < 1)
        throw std::invalid_argument("BEM layer needs a non-empty basis");
}

template <typename T>
Shape BemLayer<T>::output_shape(Shape in) const
{
    if (in.c != static_cast<std::size_t>(beta_.rows()))
        throw std::invalid_argument("BEM layer expects " + std::to_string(beta_.rows()) + " coefficient channels, got " +
                                    std::to_string(in.c));
    return {in.h, in.w, static_cast<std::size_t>(beta_.cols())};
}

template <typename T>
Tensor<T> BemLayer<T>::forward(const Tensor<T>& x) const
{
    Tensor<T> y(x.n, output_shape(x.shape()));
    y.pixels().noalias() = x.pixels() * beta_;
    return y;
}

template <typename T>
Tensor<T> BemLayer<T>::backward_impl(const Tensor<T>& x, const Tensor<T>& grad_out)
{
    if (grad_out.n != x.n || !(grad_out.shape() == output_shape(x.shape())))
        throw std::invalid_argument("BEM backward: gradient shape mismatch");
    Tensor<T> dx(x.n, x.shape());
    dx.pixels().noalias() = grad_out.pixels() * beta_.transpose();
    return dx;
}

#define RADIOMAP_INSTANTIATE(T)            \
    template class Layer<T>;               \
    template class Conv2d<T>;              \
    template class AvgPool2<T>;            \
    template class BilinearUpsample2<T>;   \
    template class LeakyRectifier<T>;      \
    template class Dense<T>;               \
    template class InputNorm<T>;           \
    template class OutputScale<T>;         \
    template class DbToLinear<T>;          \
    template class LinearToDb<T>;          \
    template class BemLayer<T>;

RADIOMAP_INSTANTIATE(float)
RADIOMAP_INSTANTIATE(double)

} // namespace radiomap
