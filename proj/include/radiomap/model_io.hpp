#pragma once

// Model archive: a directory holding manifest.json (network spec, training
// config, seed, provenance) and one RMT1 file per parameter tensor.

#include "radiomap/network.hpp"
#include "radiomap/rmt_io.hpp"

#include <filesystem>

namespace radiomap {

struct ModelArchive {
    NetworkSpec spec;
    Weights weights;
    nlohmann::json train_config = nlohmann::json::object();
    std::uint64_t seed = 0;
    nlohmann::json provenance = nlohmann::json::object();
};

void write_model(const std::filesystem::path& dir, const ModelArchive& model, DType dtype = DType::f32);
ModelArchive read_model(const std::filesystem::path& dir);

template <typename T>
Network<T> load_network(const ModelArchive& model)
{
    Network<T> net(model.spec, model.seed);
    net.set_weights(model.weights);
    return net;
}

} // namespace radiomap
