#pragma once

// Completion autoencoder: architecture description, layer stack, weight
// access and map-level estimation.

#include "radiomap/grid.hpp"
#include "radiomap/layers.hpp"
#include "radiomap/propagation.hpp"

#include <json.hpp>

#include <memory>
#include <optional>

namespace radiomap {

struct LayerSpec {
    LayerKind kind = LayerKind::conv;
    std::size_t kernel = 3;
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    double leak = 0.25;  // initial value (prelu) or fixed slope (leaky_relu)
    Shape dense_out{};   // dense only; input shape is inferred
};

struct NetworkSpec {
    std::size_t height = 32;
    std::size_t width = 32;
    std::size_t value_channels = 1; // N_f, or 1 when frequency separated
    std::size_t mask_channels = 1;  // sample mask plus meta masks
    bool frequency_separated = false;
    std::vector<LayerSpec> encoder;  // ends at the bottleneck
    std::vector<LayerSpec> decoder;
    std::optional<BasisSet> bem;     // decoder emits B coefficient channels (dB) when set
    double value_offset = -70.0;     // dB normalization shared by input and output
    double value_scale = 20.0;

    std::size_t input_channels() const { return value_channels + mask_channels; }
    std::size_t decoder_channels() const;  // channels leaving the last decoder layer
    std::size_t output_channels() const;   // map channels after the output head
    Shape bottleneck_shape() const;
    std::size_t code_length() const;
    std::size_t depth() const; // trainable (conv / conv-transpose / dense) layers
    bool fully_convolutional() const;
    void validate() const;
};

void to_json(nlohmann::json& j, const LayerSpec& s);
void from_json(const nlohmann::json& j, LayerSpec& s);
void to_json(nlohmann::json& j, const NetworkSpec& s);
void from_json(const nlohmann::json& j, NetworkSpec& s);
void to_json(nlohmann::json& j, const BasisSet& b);
void from_json(const nlohmann::json& j, BasisSet& b);

struct AutoencoderOptions {
    std::size_t height = 32;
    std::size_t width = 32;
    std::size_t value_channels = 1;
    std::size_t mask_channels = 1;
    std::size_t output_channels = 1; // ignored when a BEM basis is given
    std::size_t pools = 4;
    std::size_t convs_per_block = 3;
    std::size_t filters = 32;
    std::size_t bottleneck_channels = 16;
    std::size_t kernel = 3;
    LayerKind activation = LayerKind::prelu;
    double leak = 0.25;
    bool dense_bottleneck = false;
    bool frequency_separated = false;
    std::optional<BasisSet> bem;
};

// Encoder: `pools` blocks of convs_per_block x [conv k x k -> filters, activation]
// each followed by a 2x2 average pool, then a 1x1 conv to the bottleneck channels.
// Decoder mirrors it with a 1x1 conv-transpose and upsample + conv-transpose blocks;
// the last conv-transpose emits the output channels without activation.
// Depth L = 2 * pools * convs_per_block + 2.
NetworkSpec make_autoencoder_spec(const AutoencoderOptions& opt);

// Parameters of one layer tensor, in double precision regardless of the network type.
struct WeightTensor {
    std::size_t layer = 0;
    std::string name;
    std::vector<std::size_t> dims;
    std::vector<double> values;
};
using Weights = std::vector<WeightTensor>;

template <typename T>
class Network {
public:
    explicit Network(NetworkSpec spec, std::uint64_t seed = 0);

    const NetworkSpec& spec() const { return spec_; }
    std::size_t layer_count() const { return layers_.size(); }
    Layer<T>& layer(std::size_t i) { return *layers_.at(i); }
    const Layer<T>& layer(std::size_t i) const { return *layers_.at(i); }
    // Index of the first layer after the bottleneck.
    std::size_t decoder_begin() const { return decoder_begin_; }

    // Tensor-level passes. Inputs carry value channels followed by mask channels, in dB.
    Tensor<T> forward(const Tensor<T>& x) const;
    Tensor<T> encode(const Tensor<T>& x) const;
    Tensor<T> decode(const Tensor<T>& code) const;
    Tensor<T> forward_train(const Tensor<T>& x);
    Tensor<T> backward(const Tensor<T>& grad_out);

    std::vector<ParamRef<T>> params();
    void zero_grad();
    std::size_t parameter_count();
    Weights weights() const;
    void set_weights(const Weights& w);

    // Map-level API.
    Tensor<T> make_input(const std::vector<const SampledMap*>& maps) const;
    MapTensor estimate(const SampledMap& sampled) const;
    // Linear coefficient tensor (H * W * B) feeding the BEM layer; requires a BEM spec.
    std::vector<double> estimate_coefficients(const SampledMap& sampled) const;
    std::vector<double> encode_map(const SampledMap& sampled) const;
    MapTensor decode_code(const std::vector<double>& code, const GridSpec& grid,
                          const std::vector<double>& frequencies) const;

private:
    void check_input(const Tensor<T>& x) const;
    Tensor<T> run(const Tensor<T>& x, std::size_t begin, std::size_t end) const;
    MapTensor to_map(const std::vector<Tensor<T>>& slices, const GridSpec& grid,
                     const std::vector<double>& frequencies) const;

    NetworkSpec spec_;
    std::vector<std::unique_ptr<Layer<T>>> layers_;
    std::size_t decoder_begin_ = 0;
};

// Input tensor for one frequency slice f (frequency-separated networks) or all
// frequencies (f = npos): value channels then mask channels.
template <typename T>
Tensor<T> sampled_to_tensor(const std::vector<const SampledMap*>& maps, std::size_t f = static_cast<std::size_t>(-1));

} // namespace radiomap

namespace radiomap {

// Architecture options as JSON: {"pools", "convs_per_block", "filters", "bottleneck_channels",
// "kernel", "activation", "leak", "dense_bottleneck", "frequency_separated"}. Channel counts
// and the BEM basis come from the data, not from this object.
void to_json(nlohmann::json& j, const AutoencoderOptions& o);
void from_json(const nlohmann::json& j, AutoencoderOptions& o);

} // namespace radiomap
