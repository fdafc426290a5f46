#pragma once

// Error metric, experiment sweeps and latent-space probes.

#include "radiomap/baselines.hpp"
#include "radiomap/dataset.hpp"
#include "radiomap/network.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <memory>

namespace radiomap {

double squared_error_mean(const MapTensor& truth, const MapTensor& estimate); // ||A - B||_F^2 / (N_x N_y N_f)
double rmse(const MapTensor& truth, const MapTensor& estimate);

struct ErrorSummary {
    double rmse = 0.0;
    double stderr_rmse = 0.0; // delta method: se(MSE) / (2 RMSE)
};
// Averages per-trial mean squared errors, then takes the root.
ErrorSummary summarize_trials(const std::vector<double>& per_trial_mse);

// 8-bit binary PGM with the dB window in the comment line. Cells with
// visible = 0 are drawn black; the others map [lo, hi] onto 1..255.
std::vector<std::uint8_t> encode_pgm(std::size_t width, std::size_t height, const std::vector<double>& values,
                                     double lo_db, double hi_db, const std::vector<double>* visible = nullptr);
void write_pgm(const std::filesystem::path& path, const MapTensor& map, double lo_db, double hi_db,
               std::size_t f = 0);
void write_pgm(const std::filesystem::path& path, const SampledMap& map, double lo_db, double hi_db,
               std::size_t f = 0);

enum class SweepVariable { omega_size, code_length, depth, activation };
std::string to_string(SweepVariable v);
SweepVariable sweep_variable_from_string(const std::string& s);

// A named map estimator. `value` is the current sweep value, so model-based
// estimators can pick the model trained for it.
struct Estimator {
    std::string name;
    std::function<MapTensor(const SampledMap& sampled, const MapTensor& truth, double value)> run;
};

Estimator oracle_estimator(); // returns the true map
Estimator baseline_estimator(const std::string& name, const BaselineConfig& cfg);
// Uses models.at(value), or models.at(0) when a single model serves all values.
Estimator network_estimator(const std::string& name, std::map<double, std::shared_ptr<const Network<float>>> models,
                            SweepVariable variable);

struct ExperimentConfig {
    GeneratorConfig data;
    SweepVariable variable = SweepVariable::omega_size;
    std::vector<double> values;
    std::size_t trials = 10;
    std::uint64_t seed = 1;
    std::filesystem::path output_dir; // empty: no files written
    double pgm_lo_db = -110.0;
    double pgm_hi_db = -40.0;
    unsigned threads = 1;
    void validate() const;
};

struct SweepRow {
    std::string variable;
    double value = 0.0;
    std::string estimator;
    std::size_t trials = 0;
    double rmse_db = 0.0;
    double stderr_db = 0.0;
};

// For every sweep value, the true maps depend only on (seed, trial), so all
// values and estimators see the same maps; Omega and the measurement noise are
// drawn per (value, trial). For omega_size sweeps the observation sets are nested.
std::vector<SweepRow> sweep(const ExperimentConfig& cfg, const std::vector<Estimator>& estimators);
std::string sweep_csv(const std::vector<SweepRow>& rows);

enum class ProbeKind { mean_code, std_perturbation, eigen_perturbation };
std::string to_string(ProbeKind k);
ProbeKind probe_kind_from_string(const std::string& s);

struct LatentProbe {
    ProbeKind kind = ProbeKind::mean_code;
    std::vector<std::size_t> subset; // 1-based code indices (std_perturbation)
    double alpha = 0.0;              // eigen_perturbation scale
    std::size_t eigen_index = 1;     // 1-based, descending eigenvalue order
};

struct CodeStatistics {
    Eigen::VectorXd mean;
    Eigen::VectorXd std;          // population standard deviation per entry
    Eigen::MatrixXd covariance;   // (1/T') sum (l - mean)(l - mean)^T
    Eigen::VectorXd eigenvalues;  // descending
    Eigen::MatrixXd eigenvectors; // columns match eigenvalues
};

CodeStatistics code_statistics(const std::vector<std::vector<double>>& codes);
std::vector<double> probe_code(const CodeStatistics& stats, const LatentProbe& probe);

template <typename T>
MapTensor latent_probe(const Network<T>& net, const CodeStatistics& stats, const LatentProbe& probe,
                       const GridSpec& grid, const std::vector<double>& frequencies)
{
    return net.decode_code(probe_code(stats, probe), grid, frequencies);
}

} // namespace radiomap
