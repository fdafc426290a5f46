#pragma once

// Dataset generation (synthetic records), on-disk dataset directories and
// ingestion of externally produced grid maps.

#include "radiomap/propagation.hpp"
#include "radiomap/rmt_io.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <optional>

namespace radiomap {

struct BasisConfig {
    BasisKind kind = BasisKind::gaussian;
    std::size_t n_signal = 1;
    double band_lo_hz = 1400e6;
    double band_hi_hz = 1400e6;
    std::size_t n_f = 1;
    double width_hz = 5e6;
    double rolloff = 0.4;

    BasisSet build() const; // power-map basis when n_f == 1 and n_signal == 1
};

struct GeneratorConfig {
    GridSpec grid = GridSpec::square(32, 100.0);
    ChannelModel channel;
    BasisConfig basis;
    std::size_t n_sources = 2;
    double power_min_dbm = 5.0;
    double power_max_dbm = 11.0;
    std::optional<double> fixed_power_dbm;      // all sources and channels, when set
    std::optional<double> noise_psd_min_dbm;    // dBm/MHz; no noise term when unset
    std::optional<double> noise_psd_max_dbm;
    std::size_t omega_min = 100;                // |Omega| drawn uniformly in [min, max]
    std::size_t omega_max = 100;
    double noise_std_db = 1.0;                  // measurement noise added to sampled values
    std::vector<std::uint8_t> buildings;        // optional building set (restricts sampling)

    void validate() const;
};

void to_json(nlohmann::json& j, const GeneratorConfig& c);
void from_json(const nlohmann::json& j, GeneratorConfig& c);
void to_json(nlohmann::json& j, const GridSpec& g);
void from_json(const nlohmann::json& j, GridSpec& g);
void to_json(nlohmann::json& j, const ChannelModel& c);
void from_json(const nlohmann::json& j, ChannelModel& c);
void to_json(nlohmann::json& j, const BasisConfig& c);
void from_json(const nlohmann::json& j, BasisConfig& c);

struct DatasetRecord {
    MapTensor true_map;
    SampledMap sampled;
    std::vector<double> coefficients; // N_y * N_x * B, may be empty
    std::vector<SourceConfig> sources;
};

// Deterministic per-record generator: record(t) depends only on (config, seed, t).
class DatasetGenerator {
public:
    DatasetGenerator(GeneratorConfig cfg, std::uint64_t seed);

    DatasetRecord record(std::size_t t) const;
    // Same record geometry as record(t) but with an explicit |Omega|.
    DatasetRecord record(std::size_t t, std::size_t omega_size) const;

    const GeneratorConfig& config() const { return cfg_; }
    const BasisSet& basis() const { return basis_; }
    std::uint64_t seed() const { return seed_; }

private:
    GeneratorConfig cfg_;
    std::uint64_t seed_;
    BasisSet basis_;
    std::shared_ptr<const ShadowingSampler> shadowing_;
};

// T records, generated in parallel when threads > 1; identical output for any thread count.
std::vector<DatasetRecord> generate_dataset(std::size_t T, const GeneratorConfig& cfg, std::uint64_t seed,
                                            unsigned threads = 1);

// Directory layout: manifest.json plus record_NNNNNN_{true,values,mask,coeffs}.rmt.
void write_dataset(const std::filesystem::path& dir, const std::vector<DatasetRecord>& records,
                   const GeneratorConfig& cfg, std::uint64_t seed);
std::vector<DatasetRecord> read_dataset(const std::filesystem::path& dir);
nlohmann::json read_dataset_manifest(const std::filesystem::path& dir);

// Tensor-level conversions shared by the CLI and dataset I/O.
RawTensor map_to_raw(const MapTensor& m, DType dtype = DType::f64);
MapTensor map_from_raw(const RawTensor& t, const GridSpec& grid, std::vector<double> frequencies);
RawTensor mask_to_raw(const GridSpec& grid, const std::vector<double>& mask);

struct ExternalMap {
    MapTensor map;
    std::vector<std::uint8_t> buildings;
};

// Reads an N_y x N_x (x N_f) map and an optional N_y x N_x building mask (nonzero = building).
// Applies smooth_map with smooth_k neighbors when smooth_k > 1.
ExternalMap ingest_external(const std::filesystem::path& map_file,
                            const std::optional<std::filesystem::path>& building_mask_file,
                            std::vector<double> frequencies, double delta_x, double delta_y,
                            std::size_t smooth_k = 0);

// Writes a sampled map as <stem>_values.rmt / <stem>_mask.rmt (/ <stem>_buildings.rmt) and reads it back.
void write_sampled_map(const std::filesystem::path& dir, const std::string& stem, const SampledMap& s);
SampledMap read_sampled_map(const std::filesystem::path& values_file, const std::filesystem::path& mask_file,
                            const GridSpec& grid, std::vector<double> frequencies,
                            const std::optional<std::filesystem::path>& buildings_file = std::nullopt);

} // namespace radiomap
