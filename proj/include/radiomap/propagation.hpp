#pragma once

// Synthetic radio maps: pathloss, correlated lognormal shadowing,
// basis-expansion PSD synthesis and sensor sampling.

#include "radiomap/grid.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace radiomap {

using Rng = std::mt19937_64;

enum class PropagationMode { free_space_like, pathloss_only, pathloss_plus_shadowing };

std::string to_string(PropagationMode m);
PropagationMode propagation_mode_from_string(const std::string& s);

struct ChannelModel {
    double pathloss_exponent = 3.0;
    double unit_distance_gain_db = -30.0;
    double shadowing_variance_db2 = 10.0;
    double shadowing_decay = 0.95; // correlation base per meter
    PropagationMode mode = PropagationMode::pathloss_plus_shadowing;

    // Free-space toy: exponent 2, no shadowing.
    static ChannelModel free_space();

    double effective_exponent() const { return mode == PropagationMode::free_space_like ? 2.0 : pathloss_exponent; }
    bool has_shadowing() const
    {
        return mode == PropagationMode::pathloss_plus_shadowing && shadowing_variance_db2 > 0.0;
    }
    void validate() const;
};

inline constexpr double kMinPathlossDistance = 0.1; // meters

// unit_distance_gain - 10 * exponent * log10(max(d, 0.1)).
double pathloss_gain(const ChannelModel& channel, double distance_m);

struct SourceConfig {
    Point2 position;
    std::vector<double> power_dbm; // one per signal basis (B - 1 entries)
    double height_m = 1.5;
};

enum class BasisKind { gaussian, raised_cosine, constant_noise };

std::string to_string(BasisKind k);
BasisKind basis_kind_from_string(const std::string& s);

struct BasisFunction {
    BasisKind kind = BasisKind::gaussian;
    double center_hz = 0.0;
    double width_hz = 5e6; // std-dev (gaussian) or bandwidth (raised cosine)
    double rolloff = 0.4;  // raised cosine only

    double raw(double f_hz) const; // unnormalized shape
};

// B basis functions sampled on N_f frequencies. Signal bases come first; the
// last one is the constant noise basis. Each row integrates to one (in MHz)
// over the evaluation grid by the trapezoidal rule; with a single frequency the
// band is taken as 1 MHz wide, so every basis evaluates to 1.
class BasisSet {
public:
    BasisSet() = default;
    BasisSet(std::vector<BasisFunction> functions, std::vector<double> frequencies_hz);

    // One constant signal basis plus the noise basis at a single frequency (power maps).
    static BasisSet power_map(double frequency_hz);
    // n_signal bases of `kind` evenly spaced across [lo, hi], plus noise; N_f frequencies evenly spaced.
    static BasisSet uniform(BasisKind kind, std::size_t n_signal, double lo_hz, double hi_hz, std::size_t n_f,
                            double width_hz, double rolloff = 0.4);

    std::size_t size() const { return functions_.size(); }
    std::size_t signal_count() const { return functions_.size() - 1; }
    std::size_t n_f() const { return frequencies_.size(); }
    const std::vector<double>& frequencies() const { return frequencies_; }
    const std::vector<BasisFunction>& functions() const { return functions_; }
    double value(std::size_t b, std::size_t f) const { return values_(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(f)); }
    const Eigen::MatrixXd& values() const { return values_; } // B x N_f

    // Trapezoidal integral of basis b over the grid, in MHz units.
    double integral(std::size_t b) const;

private:
    std::vector<BasisFunction> functions_;
    std::vector<double> frequencies_;
    Eigen::MatrixXd values_;
};

// Draws zero-mean Gaussian fields with covariance variance * decay^distance
// over the grid points, via a cached Cholesky factor.
class ShadowingSampler {
public:
    ShadowingSampler(const GridSpec& grid, double variance_db2, double decay);

    std::vector<double> draw(Rng& rng) const;
    const GridSpec& grid() const { return grid_; }
    double covariance(std::size_t p, std::size_t q) const;

private:
    GridSpec grid_;
    double variance_;
    double decay_;
    Eigen::MatrixXd lower_; // empty when variance is zero
};

std::vector<double> gudmundson_field(const GridSpec& grid, double variance_db2, double decay, std::uint64_t seed);

struct SynthesisResult {
    MapTensor map;                     // dB
    std::vector<double> coefficients;  // N_y * N_x * B, linear (mW), last entry per cell is noise
};

// Per-source shadowing fields are drawn from `rng` (one per source, shared across bases).
SynthesisResult synthesize_map(const GridSpec& grid, const std::vector<SourceConfig>& sources,
                               const ChannelModel& channel, const BasisSet& basis,
                               std::optional<double> noise_psd_dbm_per_mhz, Rng& rng,
                               const ShadowingSampler* shadowing = nullptr);
SynthesisResult synthesize_map(const GridSpec& grid, const std::vector<SourceConfig>& sources,
                               const ChannelModel& channel, const BasisSet& basis,
                               std::optional<double> noise_psd_dbm_per_mhz, std::uint64_t seed);

// dB of sum_b coefficients[.., b] * beta_b(f).
MapTensor reconstruct_map(const GridSpec& grid, const std::vector<double>& coefficients, const BasisSet& basis);

// Cells not flagged in `buildings` (all cells when empty), row-major.
std::vector<Cell> eligible_cells(const GridSpec& grid, const std::vector<std::uint8_t>& buildings);

SampledMap sample_map(const MapTensor& map, std::size_t n_samples, double noise_std_db,
                      const std::vector<std::uint8_t>& buildings, Rng& rng);
SampledMap sample_map(const MapTensor& map, std::size_t n_samples, double noise_std_db,
                      const std::vector<std::uint8_t>& buildings, std::uint64_t seed);

// Sample map drawn from an explicit cell list with the given noise.
SampledMap sample_cells(const MapTensor& map, const std::vector<Cell>& omega, double noise_std_db,
                        const std::vector<std::uint8_t>& buildings, Rng& rng);

} // namespace radiomap
