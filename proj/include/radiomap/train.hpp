#pragma once

// Training regimes for the completion autoencoder.

#include "radiomap/adam.hpp"
#include "radiomap/dataset.hpp"
#include "radiomap/network.hpp"

#include <functional>

namespace radiomap {

// Random-access view of training records; generated sources produce records on demand.
class RecordSource {
public:
    virtual ~RecordSource() = default;
    virtual std::size_t size() const = 0;
    virtual DatasetRecord get(std::size_t t) const = 0;
};

class VectorSource final : public RecordSource {
public:
    explicit VectorSource(std::vector<DatasetRecord> records) : records_(std::move(records)) {}
    std::size_t size() const override { return records_.size(); }
    DatasetRecord get(std::size_t t) const override { return records_.at(t); }

private:
    std::vector<DatasetRecord> records_;
};

class GeneratorSource final : public RecordSource {
public:
    GeneratorSource(DatasetGenerator gen, std::size_t count) : gen_(std::move(gen)), count_(count) {}
    std::size_t size() const override { return count_; }
    DatasetRecord get(std::size_t t) const override { return gen_.record(t); }

private:
    DatasetGenerator gen_;
    std::size_t count_;
};

enum class LossMode { masked_self, synthetic_target, sample_split, freq_separated };
std::string to_string(LossMode m);
LossMode loss_mode_from_string(const std::string& s); // accepts '-' or '_' separators

struct TrainConfig {
    LossMode mode = LossMode::synthetic_target;
    std::size_t iterations = 1000;
    std::size_t batch_size = 64;
    AdamConfig adam;
    double final_lr_fraction = 1.0; // cosine decay of the rate down to this fraction; 1 keeps it constant
    std::size_t qt = 10;            // sample_split: subset pairs per record
    double split = 0.5;             // sample_split: |Omega_I| = |Omega_O| = split * |Omega|
    std::uint64_t seed = 1;
    std::size_t log_every = 0;      // 0 = silent
    void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct TrainResult {
    std::vector<double> loss_trace; // batch loss before each update
    std::size_t iterations = 0;
};

// One training instance: network input, target map and per-cell loss weights.
struct TrainingInstance {
    SampledMap input;
    std::size_t slice = static_cast<std::size_t>(-1); // frequency slice for separated training
    std::vector<double> target;  // H * W * C_out, dB
    std::vector<double> weight;  // H * W
};

std::size_t instances_per_record(const TrainConfig& cfg, const DatasetRecord& first);
TrainingInstance make_instance(const DatasetRecord& rec, std::size_t t, std::size_t q, const TrainConfig& cfg);

// Input/output normalization from the observed values of the first records.
void fit_normalization(NetworkSpec& spec, const RecordSource& data, std::size_t max_records = 256);

using ProgressFn = std::function<void(std::size_t iteration, double loss)>;

// Trains `net` in place starting from its current weights (fresh init, or
// loaded weights for hybrid training). Single-threaded and deterministic.
TrainResult train(Network<float>& net, const RecordSource& data, const TrainConfig& cfg,
                  const ProgressFn& progress = nullptr);

} // namespace radiomap
