#include "radiomap/evaluation.hpp"

#include "radiomap/file_util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>
#include <thread>

namespace radiomap {

double squared_error_mean(const MapTensor& truth, const MapTensor& estimate)
{
    if (truth.grid.n_y != estimate.grid.n_y || truth.grid.n_x != estimate.grid.n_x ||
        truth.values.size() != estimate.values.size())
        throw std::invalid_argument("rmse: map shapes differ");
    if (truth.values.empty())
        throw std::invalid_argument("rmse: empty maps");
    double s = 0.0;
    for (std::size_t k = 0; k < truth.values.size(); ++k) {
        const double d = truth.values[k] - estimate.values[k];
        s += d * d;
    }
    return s / static_cast<double>(truth.values.size());
}

double rmse(const MapTensor& truth, const MapTensor& estimate) { return std::sqrt(squared_error_mean(truth, estimate)); }

ErrorSummary summarize_trials(const std::vector<double>& mse)
{
    if (mse.empty())
        throw std::invalid_argument("no trials to summarize");
    const double n = static_cast<double>(mse.size());
    double mean = 0.0;
    for (double v : mse)
        mean += v;
    mean /= n;
    ErrorSummary out;
    out.rmse = std::sqrt(mean);
    if (mse.size() > 1 && out.rmse > 0.0) {
        double var = 0.0;
        for (double v : mse)
            var += (v - mean) * (v - mean);
        var /= (n - 1.0);
        out.stderr_rmse = std::sqrt(var / n) / (2.0 * out.rmse);
    }
    return out;
}

std::vector<std::uint8_t> encode_pgm(std::size_t width, std::size_t height, const std::vector<double>& values,
                                     double lo, double hi, const std::vector<double>* visible)
{
    if (values.size() != width * height)
        throw std::invalid_argument("pgm: value count does not match the image size");
    if (!(hi > lo))
        throw std::invalid_argument("pgm: dB window must have hi > lo");
    char head[128];
    std::snprintf(head, sizeof head, "P5\n# dB window [%g, %g]\n%zu %zu\n255\n", lo, hi, width, height);
    std::vector<std::uint8_t> out(head, head + std::strlen(head));
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (visible && (*visible)[k] != 1.0) {
            out.push_back(0);
            continue;
        }
        const double t = std::clamp((values[k] - lo) / (hi - lo), 0.0, 1.0);
        out.push_back(static_cast<std::uint8_t>(1 + std::lround(t * 254.0)));
    }
    return out;
}

namespace {

std::vector<double> slice(const std::vector<double>& v, std::size_t cells, std::size_t nf, std::size_t f)
{
    if (f >= nf)
        throw std::out_of_range("pgm: frequency index out of range");
    std::vector<double> out(cells);
    for (std::size_t p = 0; p < cells; ++p)
        out[p] = v[p * nf + f];
    return out;
}

} // namespace

void write_pgm(const std::filesystem::path& path, const MapTensor& map, double lo, double hi, std::size_t f)
{
    const auto& g = map.grid;
    write_file_atomic(path, encode_pgm(g.n_x, g.n_y, slice(map.values, g.cell_count(), map.n_f(), f), lo, hi));
}

void write_pgm(const std::filesystem::path& path, const SampledMap& map, double lo, double hi, std::size_t f)
{
    const auto& g = map.grid;
    write_file_atomic(path, encode_pgm(g.n_x, g.n_y, slice(map.values, g.cell_count(), map.n_f(), f), lo, hi,
                                       &map.sample_mask));
}

std::string to_string(SweepVariable v)
{
    switch (v) {
    case SweepVariable::omega_size: return "omega_size";
    case SweepVariable::code_length: return "code_length";
    case SweepVariable::depth: return "depth";
    case SweepVariable::activation: return "activation";
    }
    return "?";
}

SweepVariable sweep_variable_from_string(const std::string& s)
{
    std::string k = s;
    std::replace(k.begin(), k.end(), '-', '_');
    for (auto v : {SweepVariable::omega_size, SweepVariable::code_length, SweepVariable::depth, SweepVariable::activation})
        if (to_string(v) == k)
            return v;
    throw std::invalid_argument("unknown sweep variable '" + s + "'");
}

Estimator oracle_estimator()
{
    return {"true_map", [](const SampledMap&, const MapTensor& truth, double) { return truth; }};
}

Estimator baseline_estimator(const std::string& name, const BaselineConfig& cfg)
{
    cfg.validate();
    return {name, [cfg](const SampledMap& s, const MapTensor&, double) { return run_baseline(s, cfg); }};
}

Estimator network_estimator(const std::string& name, std::map<double, std::shared_ptr<const Network<float>>> models,
                            SweepVariable variable)
{
    if (models.empty())
        throw std::invalid_argument("estimator '" + name + "' has no trained model");
    return {name, [name, models = std::move(models), variable](const SampledMap& s, const MapTensor&, double value) {
                auto it = models.find(value);
                if (it == models.end() && models.size() == 1 && variable == SweepVariable::omega_size)
                    it = models.begin();
                if (it == models.end()) {
                    std::ostringstream os;
                    os << "no trained model for estimator '" << name << "' at " << to_string(variable) << "=" << value;
                    throw std::runtime_error(os.str());
                }
                return it->second->estimate(s);
            }};
}

void ExperimentConfig::validate() const
{
    data.validate();
    if (values.empty())
        throw std::invalid_argument("sweep needs at least one value");
    if (trials < 1)
        throw std::invalid_argument("sweep needs at least one trial per value");
    if (variable == SweepVariable::omega_size)
        for (double v : values)
            if (!(v >= 0.0) || v != std::floor(v))
                throw std::invalid_argument("omega_size sweep values must be non-negative integers");
    if (!(pgm_hi_db > pgm_lo_db))
        throw std::invalid_argument("heatmap window needs hi > lo");
}

namespace {

std::string value_label(double v)
{
    std::ostringstream os;
    os << v;
    return os.str();
}

} // namespace

std::vector<SweepRow> sweep(const ExperimentConfig& cfg, const std::vector<Estimator>& estimators)
{
    cfg.validate();
    if (estimators.empty())
        throw std::invalid_argument("sweep needs at least one estimator");
    const DatasetGenerator gen(cfg.data, mix_seed(cfg.seed, 0x5eeb));
    const std::size_t E = estimators.size(), V = cfg.values.size(), N = cfg.trials;
    std::vector<double> mse(V * E * N, 0.0);

    auto run_trial = [&](std::size_t vi, std::size_t trial) {
        const double value = cfg.values[vi];
        DatasetRecord rec = cfg.variable == SweepVariable::omega_size
                                ? gen.record(trial, static_cast<std::size_t>(value))
                                : gen.record(trial);
        if (cfg.variable != SweepVariable::omega_size) {
            // Resample Omega and noise per value while keeping the map.
            Rng rng(mix_seed(cfg.seed, 0x0e6a, vi, trial));
            rec.sampled = sample_map(rec.true_map, rec.sampled.omega.size(), cfg.data.noise_std_db, cfg.data.buildings, rng);
        }
        for (std::size_t e = 0; e < E; ++e) {
            const MapTensor est = estimators[e].run(rec.sampled, rec.true_map, value);
            mse[(vi * E + e) * N + trial] = squared_error_mean(rec.true_map, est);
            if (trial == 0 && !cfg.output_dir.empty())
                write_pgm(cfg.output_dir / (to_string(cfg.variable) + "_" + value_label(value) + "_" +
                                            estimators[e].name + ".pgm"),
                          est, cfg.pgm_lo_db, cfg.pgm_hi_db);
        }
        if (trial == 0 && !cfg.output_dir.empty()) {
            const std::string stem = to_string(cfg.variable) + "_" + value_label(value);
            write_pgm(cfg.output_dir / (stem + "_true.pgm"), rec.true_map, cfg.pgm_lo_db, cfg.pgm_hi_db);
            write_pgm(cfg.output_dir / (stem + "_sampled.pgm"), rec.sampled, cfg.pgm_lo_db, cfg.pgm_hi_db);
        }
    };

    const std::size_t jobs = V * N;
    const unsigned threads = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(jobs)));
    if (threads == 1) {
        for (std::size_t j = 0; j < jobs; ++j)
            run_trial(j / N, j % N);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(threads);
        for (unsigned w = 0; w < threads; ++w)
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t j = w; j < jobs; j += threads)
                        run_trial(j / N, j % N);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        for (auto& t : pool)
            t.join();
        for (auto& e : errors)
            if (e)
                std::rethrow_exception(e);
    }

    std::vector<SweepRow> rows;
    for (std::size_t vi = 0; vi < V; ++vi)
        for (std::size_t e = 0; e < E; ++e) {
            const std::vector<double> per(mse.begin() + static_cast<long>((vi * E + e) * N),
                                          mse.begin() + static_cast<long>((vi * E + e + 1) * N));
            const ErrorSummary s = summarize_trials(per);
            rows.push_back({to_string(cfg.variable), cfg.values[vi], estimators[e].name, N, s.rmse, s.stderr_rmse});
        }
    if (!cfg.output_dir.empty())
        write_text_atomic(cfg.output_dir / "sweep.csv", sweep_csv(rows));
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows)
{
    std::ostringstream os;
    os << "sweep_variable,sweep_value,estimator,trials,rmse_db,stderr_db\n";
    char buf[64];
    for (const auto& r : rows) {
        os << r.variable << ',' << value_label(r.value) << ',' << r.estimator << ',' << r.trials << ',';
        std::snprintf(buf, sizeof buf, "%.6f,%.6f", r.rmse_db, r.stderr_db);
        os << buf << '\n';
    }
    return os.str();
}

std::string to_string(ProbeKind k)
{
    switch (k) {
    case ProbeKind::mean_code: return "mean_code";
    case ProbeKind::std_perturbation: return "std_perturbation";
    case ProbeKind::eigen_perturbation: return "eigen_perturbation";
    }
    return "?";
}

ProbeKind probe_kind_from_string(const std::string& s)
{
    std::string k = s;
    std::replace(k.begin(), k.end(), '-', '_');
    for (auto p : {ProbeKind::mean_code, ProbeKind::std_perturbation, ProbeKind::eigen_perturbation})
        if (to_string(p) == k)
            return p;
    throw std::invalid_argument("unknown probe kind '" + s + "' (expected mean-code, std-perturbation or eigen-perturbation)");
}

CodeStatistics code_statistics(const std::vector<std::vector<double>>& codes)
{
    if (codes.empty())
        throw std::invalid_argument("latent probe needs at least one code");
    const std::size_t n = codes.front().size();
    const double T = static_cast<double>(codes.size());
    Eigen::MatrixXd L(n, codes.size());
    for (std::size_t t = 0; t < codes.size(); ++t) {
        if (codes[t].size() != n)
            throw std::invalid_argument("codes in a sample must share one length");
        for (std::size_t k = 0; k < n; ++k)
            L(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t)) = codes[t][k];
    }
    CodeStatistics s;
    s.mean = L.rowwise().mean();
    const Eigen::MatrixXd D = L.colwise() - s.mean;
    s.covariance = D * D.transpose() / T;
    s.std = s.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.covariance);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("code covariance eigendecomposition failed");
    // Eigen returns ascending order.
    s.eigenvalues = es.eigenvalues().reverse();
    s.eigenvectors = es.eigenvectors().rowwise().reverse();
    return s;
}

std::vector<double> probe_code(const CodeStatistics& s, const LatentProbe& p)
{
    const auto n = static_cast<std::size_t>(s.mean.size());
    Eigen::VectorXd code = s.mean;
    switch (p.kind) {
    case ProbeKind::mean_code:
        break;
    case ProbeKind::std_perturbation:
        for (std::size_t k : p.subset) {
            if (k < 1 || k > n)
                throw std::out_of_range("probe index " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
            code(static_cast<Eigen::Index>(k - 1)) -= s.std(static_cast<Eigen::Index>(k - 1));
        }
        break;
    case ProbeKind::eigen_perturbation:
        if (p.eigen_index < 1 || p.eigen_index > n)
            throw std::out_of_range("eigen index " + std::to_string(p.eigen_index) + " exceeds the code length " +
                                    std::to_string(n));
        code += p.alpha * s.eigenvectors.col(static_cast<Eigen::Index>(p.eigen_index - 1));
        break;
    }
    return {code.data(), code.data() + code.size()};
}

} // namespace radiomap
