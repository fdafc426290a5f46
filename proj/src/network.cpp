#include "radiomap/network.hpp"

#include "radiomap/file_util.hpp"

#include <cmath>
#include <random>

namespace radiomap {

using nlohmann::json;

namespace {

bool trainable_kind(LayerKind k)
{
    return k == LayerKind::conv || k == LayerKind::conv_transpose || k == LayerKind::dense;
}

bool activation_kind(LayerKind k) { return k == LayerKind::prelu || k == LayerKind::leaky_relu; }

// Shape after one layer spec; throws with the layer position on inconsistency.
Shape step_shape(const LayerSpec& s, Shape in, std::size_t pos)
{
    auto fail = [&](const std::string& msg) {
        throw std::invalid_argument("layer " + std::to_string(pos) + " (" + to_string(s.kind) + "): " + msg);
    };
    switch (s.kind) {
    case LayerKind::conv:
    case LayerKind::conv_transpose:
        if (s.kernel % 2 == 0)
            fail("kernel size must be odd");
        if (s.in_channels != in.c)
            fail("expects " + std::to_string(s.in_channels) + " input channels, previous layer gives " +
                 std::to_string(in.c));
        if (s.out_channels == 0)
            fail("output channel count must be positive");
        return {in.h, in.w, s.out_channels};
    case LayerKind::avg_pool:
        if (in.h % 2 || in.w % 2)
            fail("pooling needs even spatial dimensions, got " + in.str());
        return {in.h / 2, in.w / 2, in.c};
    case LayerKind::bilinear_upsample:
        return {in.h * 2, in.w * 2, in.c};
    case LayerKind::prelu:
    case LayerKind::leaky_relu:
        return in;
    case LayerKind::dense:
        if (s.dense_out.size() == 0)
            fail("dense output shape must be non-empty");
        return s.dense_out;
    default:
        fail("not allowed inside the encoder or decoder");
    }
    return in;
}

} // namespace

std::size_t NetworkSpec::decoder_channels() const
{
    Shape s = bottleneck_shape();
    for (std::size_t k = 0; k < decoder.size(); ++k)
        s = step_shape(decoder[k], s, encoder.size() + k);
    return s.c;
}

std::size_t NetworkSpec::output_channels() const { return bem ? bem->n_f() : decoder_channels(); }

Shape NetworkSpec::bottleneck_shape() const
{
    Shape s{height, width, input_channels()};
    for (std::size_t k = 0; k < encoder.size(); ++k)
        s = step_shape(encoder[k], s, k);
    return s;
}

std::size_t NetworkSpec::code_length() const { return bottleneck_shape().size(); }

std::size_t NetworkSpec::depth() const
{
    std::size_t n = 0;
    for (const auto* list : {&encoder, &decoder})
        for (const auto& l : *list)
            n += trainable_kind(l.kind) ? 1 : 0;
    return n;
}

bool NetworkSpec::fully_convolutional() const
{
    for (const auto* list : {&encoder, &decoder})
        for (const auto& l : *list)
            if (l.kind == LayerKind::dense)
                return false;
    return true;
}

void NetworkSpec::validate() const
{
    if (height == 0 || width == 0)
        throw std::invalid_argument("network spatial size must be positive");
    if (value_channels == 0 || mask_channels == 0)
        throw std::invalid_argument("network needs at least one value and one mask channel");
    if (!(value_scale > 0.0) || !std::isfinite(value_offset))
        throw std::invalid_argument("network value normalization must have a positive scale");
    if (encoder.empty() || decoder.empty())
        throw std::invalid_argument("network needs non-empty encoder and decoder");
    if (frequency_separated && value_channels != 1)
        throw std::invalid_argument("frequency-separated networks take one value channel");
    if (frequency_separated && bem)
        throw std::invalid_argument("the BEM output layer needs all frequencies at once");

    std::size_t pools = 0, ups = 0;
    for (const auto* list : {&encoder, &decoder})
        for (const auto& l : *list) {
            pools += l.kind == LayerKind::avg_pool;
            ups += l.kind == LayerKind::bilinear_upsample;
        }
    if (pools != ups)
        throw std::invalid_argument("network needs one upsampling layer per pooling layer (" + std::to_string(pools) +
                                    " pools, " + std::to_string(ups) + " upsamplings)");

    Shape s{height, width, input_channels()};
    std::size_t pos = 0;
    for (const auto* list : {&encoder, &decoder})
        for (const auto& l : *list)
            s = step_shape(l, s, pos++);
    if (s.h != height || s.w != width)
        throw std::invalid_argument("decoder output is " + s.str() + ", expected the input size " +
                                    std::to_string(height) + "x" + std::to_string(width));
    const std::size_t expect = bem ? bem->size() : value_channels;
    if (s.c != expect)
        throw std::invalid_argument("decoder emits " + std::to_string(s.c) + " channels, expected " +
                                    std::to_string(expect));
}

NetworkSpec make_autoencoder_spec(const AutoencoderOptions& o)
{
    if (!activation_kind(o.activation))
        throw std::invalid_argument("autoencoder activation must be prelu or leaky_relu");
    if (o.convs_per_block == 0 || o.filters == 0 || o.bottleneck_channels == 0)
        throw std::invalid_argument("autoencoder block sizes must be positive");
    NetworkSpec s;
    s.height = o.height;
    s.width = o.width;
    s.value_channels = o.value_channels;
    s.mask_channels = o.mask_channels;
    s.frequency_separated = o.frequency_separated;
    s.bem = o.bem;
    const std::size_t out_c = o.bem ? o.bem->size() : o.output_channels;

    auto act = [&] {
        LayerSpec a;
        a.kind = o.activation;
        a.leak = o.leak;
        return a;
    };
    auto conv = [&](LayerKind kind, std::size_t k, std::size_t cin, std::size_t cout) {
        LayerSpec c;
        c.kind = kind;
        c.kernel = k;
        c.in_channels = cin;
        c.out_channels = cout;
        return c;
    };
    auto plain = [](LayerKind kind) {
        LayerSpec l;
        l.kind = kind;
        return l;
    };

    std::size_t c = s.input_channels();
    std::size_t h = o.height, w = o.width;
    for (std::size_t p = 0; p < o.pools; ++p) {
        for (std::size_t k = 0; k < o.convs_per_block; ++k) {
            s.encoder.push_back(conv(LayerKind::conv, o.kernel, c, o.filters));
            s.encoder.push_back(act());
            c = o.filters;
        }
        s.encoder.push_back(plain(LayerKind::avg_pool));
        h /= 2;
        w /= 2;
    }
    if (o.dense_bottleneck) {
        LayerSpec d = plain(LayerKind::dense);
        d.dense_out = {h, w, o.bottleneck_channels};
        s.encoder.push_back(d);
        LayerSpec e = plain(LayerKind::dense);
        e.dense_out = {h, w, o.filters};
        s.decoder.push_back(e);
    } else {
        s.encoder.push_back(conv(LayerKind::conv, 1, c, o.bottleneck_channels));
        s.decoder.push_back(conv(LayerKind::conv_transpose, 1, o.bottleneck_channels, o.filters));
    }
    s.decoder.push_back(act());
    c = o.filters;
    for (std::size_t p = 0; p < o.pools; ++p) {
        s.decoder.push_back(plain(LayerKind::bilinear_upsample));
        for (std::size_t k = 0; k < o.convs_per_block; ++k) {
            const bool last = p + 1 == o.pools && k + 1 == o.convs_per_block;
            s.decoder.push_back(conv(LayerKind::conv_transpose, o.kernel, c, last ? out_c : o.filters));
            if (!last)
                s.decoder.push_back(act());
        }
    }
    if (o.pools == 0) {
        // Bottleneck at full resolution: the output still needs its own projection.
        s.decoder.push_back(conv(LayerKind::conv_transpose, o.kernel, c, out_c));
    }
    s.validate();
    return s;
}

// ---------------------------------------------------------------- JSON

void to_json(json& j, const LayerSpec& s)
{
    j = json{{"kind", to_string(s.kind)}};
    switch (s.kind) {
    case LayerKind::conv:
    case LayerKind::conv_transpose:
        j["kernel"] = s.kernel;
        j["in_channels"] = s.in_channels;
        j["out_channels"] = s.out_channels;
        break;
    case LayerKind::prelu:
    case LayerKind::leaky_relu:
        j["leak"] = s.leak;
        break;
    case LayerKind::dense:
        j["out_shape"] = {s.dense_out.h, s.dense_out.w, s.dense_out.c};
        break;
    default:
        break;
    }
}

void from_json(const json& j, LayerSpec& s)
{
    s = LayerSpec{};
    s.kind = layer_kind_from_string(j.at("kind").get<std::string>());
    s.kernel = j.value("kernel", std::size_t{3});
    s.in_channels = j.value("in_channels", std::size_t{0});
    s.out_channels = j.value("out_channels", std::size_t{0});
    s.leak = j.value("leak", 0.25);
    if (j.contains("out_shape")) {
        const auto v = j.at("out_shape").get<std::vector<std::size_t>>();
        if (v.size() != 3)
            throw std::invalid_argument("dense out_shape needs three entries");
        s.dense_out = {v[0], v[1], v[2]};
    }
}

void to_json(json& j, const BasisSet& b)
{
    json fs = json::array();
    for (const auto& f : b.functions())
        fs.push_back({{"kind", to_string(f.kind)}, {"center_hz", f.center_hz}, {"width_hz", f.width_hz},
                      {"rolloff", f.rolloff}});
    j = json{{"functions", fs}, {"frequencies_hz", b.frequencies()}};
}

void from_json(const json& j, BasisSet& b)
{
    std::vector<BasisFunction> fs;
    for (const auto& e : j.at("functions")) {
        BasisFunction f;
        f.kind = basis_kind_from_string(e.at("kind").get<std::string>());
        f.center_hz = e.value("center_hz", 0.0);
        f.width_hz = e.value("width_hz", 5e6);
        f.rolloff = e.value("rolloff", 0.4);
        fs.push_back(f);
    }
    b = BasisSet(std::move(fs), j.at("frequencies_hz").get<std::vector<double>>());
}

void to_json(json& j, const NetworkSpec& s)
{
    j = json{{"height", s.height},
             {"width", s.width},
             {"value_channels", s.value_channels},
             {"mask_channels", s.mask_channels},
             {"frequency_separated", s.frequency_separated},
             {"value_offset", s.value_offset},
             {"value_scale", s.value_scale},
             {"encoder", s.encoder},
             {"decoder", s.decoder},
             {"code_length", s.code_length()},
             {"depth", s.depth()}};
    if (s.bem)
        j["bem"] = *s.bem;
}

void from_json(const json& j, NetworkSpec& s)
{
    s = NetworkSpec{};
    s.height = j.at("height").get<std::size_t>();
    s.width = j.at("width").get<std::size_t>();
    s.value_channels = j.value("value_channels", std::size_t{1});
    s.mask_channels = j.value("mask_channels", std::size_t{1});
    s.frequency_separated = j.value("frequency_separated", false);
    s.value_offset = j.value("value_offset", -70.0);
    s.value_scale = j.value("value_scale", 20.0);
    s.encoder = j.at("encoder").get<std::vector<LayerSpec>>();
    s.decoder = j.at("decoder").get<std::vector<LayerSpec>>();
    if (j.contains("bem"))
        s.bem = j.at("bem").get<BasisSet>();
    s.validate();
}

void to_json(json& j, const AutoencoderOptions& o)
{
    j = json{{"pools", o.pools},
             {"convs_per_block", o.convs_per_block},
             {"filters", o.filters},
             {"bottleneck_channels", o.bottleneck_channels},
             {"kernel", o.kernel},
             {"activation", to_string(o.activation)},
             {"leak", o.leak},
             {"dense_bottleneck", o.dense_bottleneck},
             {"frequency_separated", o.frequency_separated}};
}

void from_json(const json& j, AutoencoderOptions& o)
{
    AutoencoderOptions d;
    d.pools = j.value("pools", d.pools);
    d.convs_per_block = j.value("convs_per_block", d.convs_per_block);
    d.filters = j.value("filters", d.filters);
    d.bottleneck_channels = j.value("bottleneck_channels", d.bottleneck_channels);
    d.kernel = j.value("kernel", d.kernel);
    if (j.contains("activation"))
        d.activation = layer_kind_from_string(j.at("activation").get<std::string>());
    d.leak = j.value("leak", d.activation == LayerKind::leaky_relu ? 0.1 : 0.25);
    d.dense_bottleneck = j.value("dense_bottleneck", d.dense_bottleneck);
    d.frequency_separated = j.value("frequency_separated", d.frequency_separated);
    o = d;
}

// ---------------------------------------------------------------- Network

template <typename T>
Network<T>::Network(NetworkSpec spec, std::uint64_t seed) : spec_(std::move(spec))
{
    spec_.validate();
    layers_.push_back(std::make_unique<InputNorm<T>>(spec_.value_channels, spec_.value_offset, spec_.value_scale));

    std::vector<const LayerSpec*> all;
    for (const auto& l : spec_.encoder)
        all.push_back(&l);
    for (const auto& l : spec_.decoder)
        all.push_back(&l);

    Shape shape{spec_.height, spec_.width, spec_.input_channels()};
    for (std::size_t k = 0; k < all.size(); ++k) {
        if (k == spec_.encoder.size())
            decoder_begin_ = layers_.size();
        const LayerSpec& s = *all[k];
        const std::size_t index = layers_.size();
        // Fan-in scaled Gaussian init; the slope of a following rectifier enters the gain.
        double a = 1.0;
        if (k + 1 < all.size() && activation_kind(all[k + 1]->kind))
            a = all[k + 1]->leak;
        Rng rng(mix_seed(seed, 0x1a7e5, index));
        auto fill = [&](std::vector<T>& w, double fan_in) {
            std::normal_distribution<double> nd(0.0, std::sqrt(2.0 / (fan_in * (1.0 + a * a))));
            for (auto& v : w)
                v = static_cast<T>(nd(rng));
        };
        switch (s.kind) {
        case LayerKind::conv:
        case LayerKind::conv_transpose: {
            auto c = std::make_unique<Conv2d<T>>(s.kernel, s.in_channels, s.out_channels,
                                                 s.kind == LayerKind::conv_transpose);
            fill(c->kernel_data(), static_cast<double>(s.kernel * s.kernel * s.in_channels));
            layers_.push_back(std::move(c));
            break;
        }
        case LayerKind::avg_pool:
            layers_.push_back(std::make_unique<AvgPool2<T>>());
            break;
        case LayerKind::bilinear_upsample:
            layers_.push_back(std::make_unique<BilinearUpsample2<T>>());
            break;
        case LayerKind::prelu:
        case LayerKind::leaky_relu:
            layers_.push_back(std::make_unique<LeakyRectifier<T>>(shape.c, static_cast<T>(s.leak),
                                                                  s.kind == LayerKind::prelu));
            break;
        case LayerKind::dense: {
            auto d = std::make_unique<Dense<T>>(shape, s.dense_out);
            fill(*d->params()[0].value, static_cast<double>(shape.size()));
            layers_.push_back(std::move(d));
            break;
        }
        default:
            throw std::invalid_argument("unsupported layer kind in network spec");
        }
        shape = layers_.back()->output_shape(shape);
    }
    if (spec_.encoder.size() == all.size())
        decoder_begin_ = layers_.size();

    layers_.push_back(std::make_unique<OutputScale<T>>(spec_.value_offset, spec_.value_scale));
    if (spec_.bem) {
        layers_.push_back(std::make_unique<DbToLinear<T>>());
        layers_.push_back(std::make_unique<BemLayer<T>>(spec_.bem->values()));
        layers_.push_back(std::make_unique<LinearToDb<T>>());
    }
}

template <typename T>
void Network<T>::check_input(const Tensor<T>& x) const
{
    if (x.h != spec_.height || x.w != spec_.width || x.c != spec_.input_channels())
        throw std::invalid_argument("network expects inputs of shape " + std::to_string(spec_.height) + "x" +
                                    std::to_string(spec_.width) + "x" + std::to_string(spec_.input_channels()) +
                                    ", got " + x.shape().str());
}

template <typename T>
Tensor<T> Network<T>::run(const Tensor<T>& x, std::size_t begin, std::size_t end) const
{
    Tensor<T> cur = x;
    for (std::size_t k = begin; k < end; ++k)
        cur = layers_[k]->forward(cur);
    return cur;
}

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& x) const
{
    check_input(x);
    return run(x, 0, layers_.size());
}

template <typename T>
Tensor<T> Network<T>::encode(const Tensor<T>& x) const
{
    check_input(x);
    return run(x, 0, decoder_begin_);
}

template <typename T>
Tensor<T> Network<T>::decode(const Tensor<T>& code) const
{
    if (!(code.shape() == spec_.bottleneck_shape()))
        throw std::invalid_argument("code has shape " + code.shape().str() + ", the network bottleneck is " +
                                    spec_.bottleneck_shape().str());
    return run(code, decoder_begin_, layers_.size());
}

template <typename T>
Tensor<T> Network<T>::forward_train(const Tensor<T>& x)
{
    check_input(x);
    Tensor<T> cur = x;
    for (auto& l : layers_)
        cur = l->forward_train(cur);
    return cur;
}

template <typename T>
Tensor<T> Network<T>::backward(const Tensor<T>& grad_out)
{
    Tensor<T> g = grad_out;
    for (std::size_t k = layers_.size(); k-- > 0;)
        g = layers_[k]->backward(g);
    return g;
}

template <typename T>
std::vector<ParamRef<T>> Network<T>::params()
{
    std::vector<ParamRef<T>> out;
    for (auto& l : layers_)
        for (auto& p : l->params())
            out.push_back(p);
    return out;
}

template <typename T>
void Network<T>::zero_grad()
{
    for (auto& l : layers_)
        l->zero_grad();
}

template <typename T>
std::size_t Network<T>::parameter_count()
{
    std::size_t n = 0;
    for (auto& l : layers_)
        n += l->parameter_count();
    return n;
}

template <typename T>
Weights Network<T>::weights() const
{
    Weights out;
    for (std::size_t k = 0; k < layers_.size(); ++k)
        for (auto& p : const_cast<Layer<T>&>(*layers_[k]).params()) {
            WeightTensor w;
            w.layer = k;
            w.name = p.name;
            w.dims = p.dims;
            w.values.assign(p.value->begin(), p.value->end());
            out.push_back(std::move(w));
        }
    return out;
}

template <typename T>
void Network<T>::set_weights(const Weights& w)
{
    std::size_t next = 0;
    for (std::size_t k = 0; k < layers_.size(); ++k)
        for (auto& p : layers_[k]->params()) {
            if (next >= w.size())
                throw std::invalid_argument("weights list is shorter than the network parameter list");
            const WeightTensor& src = w[next++];
            if (src.layer != k || src.name != p.name || src.dims != p.dims)
                throw std::invalid_argument("weight tensor for layer " + std::to_string(k) + " '" + p.name +
                                            "' does not match the network spec (got layer " +
                                            std::to_string(src.layer) + " '" + src.name + "')");
            for (double v : src.values)
                if (!std::isfinite(v))
                    throw std::invalid_argument("non-finite weight in layer " + std::to_string(k));
            for (std::size_t i = 0; i < src.values.size(); ++i)
                (*p.value)[i] = static_cast<T>(src.values[i]);
        }
    if (next != w.size())
        throw std::invalid_argument("weights list has " + std::to_string(w.size() - next) + " extra tensors");
}

template <typename T>
Tensor<T> sampled_to_tensor(const std::vector<const SampledMap*>& maps, std::size_t f)
{
    if (maps.empty())
        throw std::invalid_argument("no sampled maps given");
    const SampledMap& first = *maps.front();
    const std::size_t nf = first.n_f();
    const bool slice = f != static_cast<std::size_t>(-1);
    if (slice && f >= nf)
        throw std::out_of_range("frequency slice index out of range");
    const std::size_t nv = slice ? 1 : nf;
    const std::size_t nm = 1 + first.meta_masks.size();
    const std::size_t H = first.grid.n_y, W = first.grid.n_x;
    Tensor<T> x(maps.size(), H, W, nv + nm);
    for (std::size_t b = 0; b < maps.size(); ++b) {
        const SampledMap& m = *maps[b];
        if (m.grid.n_y != H || m.grid.n_x != W || m.n_f() != nf || m.meta_masks.size() + 1 != nm)
            throw std::invalid_argument("sampled maps in one batch must share shape and mask count");
        const std::vector<double> mask = m.network_mask();
        for (std::size_t p = 0; p < H * W; ++p) {
            T* dst = &x.data[(b * H * W + p) * x.c];
            if (slice)
                dst[0] = static_cast<T>(m.values[p * nf + f]);
            else
                for (std::size_t c = 0; c < nf; ++c)
                    dst[c] = static_cast<T>(m.values[p * nf + c]);
            dst[nv] = static_cast<T>(mask[p]);
            for (std::size_t k = 0; k < m.meta_masks.size(); ++k)
                dst[nv + 1 + k] = static_cast<T>(m.meta_masks[k][p]);
        }
    }
    return x;
}

template <typename T>
Tensor<T> Network<T>::make_input(const std::vector<const SampledMap*>& maps) const
{
    return sampled_to_tensor<T>(maps);
}

template <typename T>
MapTensor Network<T>::to_map(const std::vector<Tensor<T>>& slices, const GridSpec& grid,
                             const std::vector<double>& frequencies) const
{
    MapTensor out(grid, frequencies);
    const std::size_t nf = out.n_f();
    std::size_t c0 = 0;
    for (const auto& s : slices) {
        for (std::size_t p = 0; p < grid.cell_count(); ++p)
            for (std::size_t c = 0; c < s.c; ++c)
                out.values[p * nf + c0 + c] = static_cast<double>(s.data[p * s.c + c]);
        c0 += s.c;
    }
    if (c0 != nf)
        throw std::invalid_argument("network produced " + std::to_string(c0) + " channels for a map with " +
                                    std::to_string(nf) + " frequencies");
    return out;
}

template <typename T>
MapTensor Network<T>::estimate(const SampledMap& sampled) const
{
    if (sampled.grid.n_y != spec_.height || sampled.grid.n_x != spec_.width)
        throw std::invalid_argument("sampled map is " + std::to_string(sampled.grid.n_y) + "x" +
                                    std::to_string(sampled.grid.n_x) + ", the network expects " +
                                    std::to_string(spec_.height) + "x" + std::to_string(spec_.width));
    std::vector<Tensor<T>> out;
    if (spec_.frequency_separated) {
        for (std::size_t f = 0; f < sampled.n_f(); ++f)
            out.push_back(forward(sampled_to_tensor<T>({&sampled}, f)));
    } else {
        out.push_back(forward(make_input({&sampled})));
    }
    return to_map(out, sampled.grid, sampled.frequencies);
}

template <typename T>
std::vector<double> Network<T>::estimate_coefficients(const SampledMap& sampled) const
{
    if (!spec_.bem)
        throw std::invalid_argument("the network has no BEM output layer");
    std::size_t bem = 0;
    while (layers_[bem]->kind() != LayerKind::bem)
        ++bem;
    const Tensor<T> x = make_input({&sampled});
    check_input(x);
    const Tensor<T> c = run(x, 0, bem);
    return {c.data.begin(), c.data.end()};
}

template <typename T>
std::vector<double> Network<T>::encode_map(const SampledMap& sampled) const
{
    std::vector<double> code;
    auto append = [&](const Tensor<T>& c) {
        for (T v : c.data)
            code.push_back(static_cast<double>(v));
    };
    if (spec_.frequency_separated)
        for (std::size_t f = 0; f < sampled.n_f(); ++f)
            append(encode(sampled_to_tensor<T>({&sampled}, f)));
    else
        append(encode(make_input({&sampled})));
    return code;
}

template <typename T>
MapTensor Network<T>::decode_code(const std::vector<double>& code, const GridSpec& grid,
                                  const std::vector<double>& frequencies) const
{
    const std::size_t nl = spec_.code_length();
    const std::size_t slices = spec_.frequency_separated ? std::max<std::size_t>(frequencies.size(), 1) : 1;
    if (code.size() != nl * slices)
        throw std::invalid_argument("code length " + std::to_string(code.size()) + " does not match the expected " +
                                    std::to_string(nl * slices));
    std::vector<Tensor<T>> out;
    for (std::size_t s = 0; s < slices; ++s) {
        Tensor<T> c(1, spec_.bottleneck_shape());
        for (std::size_t k = 0; k < nl; ++k)
            c.data[k] = static_cast<T>(code[s * nl + k]);
        out.push_back(decode(c));
    }
    return to_map(out, grid, frequencies);
}

template class Network<float>;
template class Network<double>;
template Tensor<float> sampled_to_tensor<float>(const std::vector<const SampledMap*>&, std::size_t);
template Tensor<double> sampled_to_tensor<double>(const std::vector<const SampledMap*>&, std::size_t);

} // namespace radiomap
