#include "radiomap/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace radiomap {

std::string to_string(PropagationMode m)
{
    switch (m) {
    case PropagationMode::free_space_like: return "free_space_like";
    case PropagationMode::pathloss_only: return "pathloss_only";
    case PropagationMode::pathloss_plus_shadowing: return "pathloss_plus_shadowing";
    }
    return "?";
}

PropagationMode propagation_mode_from_string(const std::string& s)
{
    if (s == "free_space_like" || s == "free_space")
        return PropagationMode::free_space_like;
    if (s == "pathloss_only")
        return PropagationMode::pathloss_only;
    if (s == "pathloss_plus_shadowing")
        return PropagationMode::pathloss_plus_shadowing;
    throw std::invalid_argument("unknown propagation mode '" + s + "'");
}

ChannelModel ChannelModel::free_space()
{
    ChannelModel c;
    c.pathloss_exponent = 2.0;
    c.shadowing_variance_db2 = 0.0;
    c.mode = PropagationMode::free_space_like;
    return c;
}

void ChannelModel::validate() const
{
    if (!(pathloss_exponent > 0.0))
        throw std::invalid_argument("pathloss exponent must be positive");
    if (!(shadowing_variance_db2 >= 0.0))
        throw std::invalid_argument("shadowing variance must be non-negative");
    if (!(shadowing_decay > 0.0 && shadowing_decay < 1.0))
        throw std::invalid_argument("shadowing decay must lie in (0, 1)");
    if (!std::isfinite(unit_distance_gain_db))
        throw std::invalid_argument("unit distance gain must be finite");
}

double pathloss_gain(const ChannelModel& channel, double distance_m)
{
    const double d = std::max(distance_m, kMinPathlossDistance);
    return channel.unit_distance_gain_db - 10.0 * channel.effective_exponent() * std::log10(d);
}

std::string to_string(BasisKind k)
{
    switch (k) {
    case BasisKind::gaussian: return "gaussian";
    case BasisKind::raised_cosine: return "raised_cosine";
    case BasisKind::constant_noise: return "constant_noise";
    }
    return "?";
}

BasisKind basis_kind_from_string(const std::string& s)
{
    if (s == "gaussian")
        return BasisKind::gaussian;
    if (s == "raised_cosine")
        return BasisKind::raised_cosine;
    if (s == "constant_noise" || s == "constant")
        return BasisKind::constant_noise;
    throw std::invalid_argument("unknown basis kind '" + s + "'");
}

double BasisFunction::raw(double f_hz) const
{
    const double df = std::abs(f_hz - center_hz);
    switch (kind) {
    case BasisKind::gaussian:
        return std::exp(-0.5 * df * df / (width_hz * width_hz));
    case BasisKind::raised_cosine: {
        const double flat = 0.5 * (1.0 - rolloff) * width_hz;
        const double edge = 0.5 * (1.0 + rolloff) * width_hz;
        if (df <= flat)
            return 1.0;
        if (df > edge)
            return 0.0;
        return 0.5 * (1.0 + std::cos(std::numbers::pi / (rolloff * width_hz) * (df - flat)));
    }
    case BasisKind::constant_noise:
        return 1.0;
    }
    return 0.0;
}

namespace {
double trapezoid_mhz(const std::vector<double>& f_hz, const Eigen::RowVectorXd& v)
{
    double acc = 0.0;
    for (std::size_t k = 1; k < f_hz.size(); ++k)
        acc += 0.5 * (v(static_cast<Eigen::Index>(k)) + v(static_cast<Eigen::Index>(k - 1))) *
               (f_hz[k] - f_hz[k - 1]) * 1e-6;
    return acc;
}
} // namespace

BasisSet::BasisSet(std::vector<BasisFunction> functions, std::vector<double> frequencies_hz)
    : functions_(std::move(functions)), frequencies_(std::move(frequencies_hz))
{
    if (functions_.size() < 1 || frequencies_.empty())
        throw std::invalid_argument("basis set needs at least one function and one frequency");
    const auto noise_count =
        std::count_if(functions_.begin(), functions_.end(), [](const auto& b) { return b.kind == BasisKind::constant_noise; });
    if (noise_count != 1 || functions_.back().kind != BasisKind::constant_noise)
        throw std::invalid_argument("basis set must end with exactly one constant noise basis");
    for (std::size_t k = 1; k < frequencies_.size(); ++k)
        if (!(frequencies_[k] > frequencies_[k - 1]))
            throw std::invalid_argument("basis frequencies must be strictly increasing");

    const auto B = static_cast<Eigen::Index>(functions_.size());
    const auto F = static_cast<Eigen::Index>(frequencies_.size());
    values_.resize(B, F);
    for (Eigen::Index b = 0; b < B; ++b) {
        const auto& fn = functions_[static_cast<std::size_t>(b)];
        if (fn.kind != BasisKind::constant_noise && !(fn.width_hz > 0.0))
            throw std::invalid_argument("basis width must be positive");
        if (fn.kind == BasisKind::raised_cosine && !(fn.rolloff > 0.0 && fn.rolloff <= 1.0))
            throw std::invalid_argument("raised-cosine roll-off must lie in (0, 1]");
        for (Eigen::Index f = 0; f < F; ++f)
            values_(b, f) = fn.raw(frequencies_[static_cast<std::size_t>(f)]);
        const double mass = F == 1 ? values_(b, 0) : trapezoid_mhz(frequencies_, values_.row(b));
        if (!(mass > 0.0))
            throw std::invalid_argument("basis function " + std::to_string(b) + " vanishes on the frequency grid");
        values_.row(b) /= mass;
    }
}

BasisSet BasisSet::power_map(double frequency_hz)
{
    BasisFunction signal{BasisKind::gaussian, frequency_hz, 5e6, 0.4};
    BasisFunction noise{BasisKind::constant_noise, frequency_hz, 0.0, 0.0};
    return BasisSet({signal, noise}, {frequency_hz});
}

BasisSet BasisSet::uniform(BasisKind kind, std::size_t n_signal, double lo_hz, double hi_hz, std::size_t n_f,
                           double width_hz, double rolloff)
{
    if (n_signal < 1 || n_f < 1 || !(hi_hz >= lo_hz))
        throw std::invalid_argument("invalid uniform basis layout");
    if (kind == BasisKind::constant_noise)
        throw std::invalid_argument("signal basis kind cannot be constant_noise");
    std::vector<double> freqs(n_f);
    for (std::size_t k = 0; k < n_f; ++k)
        freqs[k] = n_f == 1 ? 0.5 * (lo_hz + hi_hz)
                            : lo_hz + (hi_hz - lo_hz) * static_cast<double>(k) / static_cast<double>(n_f - 1);
    std::vector<BasisFunction> fns;
    for (std::size_t b = 0; b < n_signal; ++b) {
        const double c = lo_hz + (hi_hz - lo_hz) * (static_cast<double>(b) + 0.5) / static_cast<double>(n_signal);
        fns.push_back({kind, c, width_hz, rolloff});
    }
    fns.push_back({BasisKind::constant_noise, 0.5 * (lo_hz + hi_hz), 0.0, 0.0});
    return BasisSet(std::move(fns), std::move(freqs));
}

double BasisSet::integral(std::size_t b) const
{
    if (frequencies_.size() == 1)
        return values_(static_cast<Eigen::Index>(b), 0);
    return trapezoid_mhz(frequencies_, values_.row(static_cast<Eigen::Index>(b)));
}

ShadowingSampler::ShadowingSampler(const GridSpec& grid, double variance_db2, double decay)
    : grid_(grid), variance_(variance_db2), decay_(decay)
{
    grid.validate();
    if (!(variance_db2 >= 0.0))
        throw std::invalid_argument("shadowing variance must be non-negative");
    if (!(decay > 0.0 && decay < 1.0))
        throw std::invalid_argument("shadowing decay must lie in (0, 1)");
    if (variance_db2 == 0.0)
        return;

    const auto n = static_cast<Eigen::Index>(grid.cell_count());
    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index p = 0; p < n; ++p)
        for (Eigen::Index q = 0; q <= p; ++q)
            cov(p, q) = cov(q, p) = covariance(static_cast<std::size_t>(p), static_cast<std::size_t>(q));

    double jitter = 1e-10 * variance_db2;
    for (int attempt = 0; attempt <= 3; ++attempt, jitter *= 10.0) {
        Eigen::MatrixXd c = cov;
        c.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(c);
        if (llt.info() == Eigen::Success) {
            lower_ = llt.matrixL();
            return;
        }
    }
    throw std::runtime_error("shadowing covariance Cholesky failed after jitter escalation");
}

double ShadowingSampler::covariance(std::size_t p, std::size_t q) const
{
    const double d = distance(grid_.point(grid_.cell(p)), grid_.point(grid_.cell(q)));
    return variance_ * std::pow(decay_, d);
}

std::vector<double> ShadowingSampler::draw(Rng& rng) const
{
    const auto n = grid_.cell_count();
    if (lower_.size() == 0)
        return std::vector<double>(n, 0.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(static_cast<Eigen::Index>(n));
    for (Eigen::Index k = 0; k < z.size(); ++k)
        z(k) = normal(rng);
    Eigen::VectorXd field = lower_.triangularView<Eigen::Lower>() * z;
    return std::vector<double>(field.data(), field.data() + field.size());
}

std::vector<double> gudmundson_field(const GridSpec& grid, double variance_db2, double decay, std::uint64_t seed)
{
    Rng rng(seed);
    return ShadowingSampler(grid, variance_db2, decay).draw(rng);
}

SynthesisResult synthesize_map(const GridSpec& grid, const std::vector<SourceConfig>& sources,
                               const ChannelModel& channel, const BasisSet& basis,
                               std::optional<double> noise_psd_dbm_per_mhz, Rng& rng,
                               const ShadowingSampler* shadowing)
{
    grid.validate();
    channel.validate();
    if (sources.empty() && !noise_psd_dbm_per_mhz)
        throw std::invalid_argument("synthesize_map needs at least one source or a noise level");
    const std::size_t B = basis.size();
    const std::size_t cells = grid.cell_count();
    for (const auto& s : sources)
        if (s.power_dbm.size() != basis.signal_count())
            throw std::invalid_argument("source power count (" + std::to_string(s.power_dbm.size()) +
                                        ") does not match the number of signal bases (" +
                                        std::to_string(basis.signal_count()) + ")");

    std::optional<ShadowingSampler> local;
    if (channel.has_shadowing() && !shadowing) {
        local.emplace(grid, channel.shadowing_variance_db2, channel.shadowing_decay);
        shadowing = &*local;
    }
    if (channel.has_shadowing() && !(shadowing->grid() == grid))
        throw std::invalid_argument("shadowing sampler was built for a different grid");

    SynthesisResult out;
    out.coefficients.assign(cells * B, 0.0);
    for (const auto& s : sources) {
        std::vector<double> shadow = channel.has_shadowing() ? shadowing->draw(rng) : std::vector<double>(cells, 0.0);
        for (std::size_t c = 0; c < cells; ++c) {
            const double gain_db = pathloss_gain(channel, distance(grid.point(grid.cell(c)), s.position)) + shadow[c];
            for (std::size_t b = 0; b + 1 < B; ++b)
                out.coefficients[c * B + b] += from_db(s.power_dbm[b] + gain_db);
        }
    }
    if (noise_psd_dbm_per_mhz) {
        // pi_B * beta_B(f) must equal the noise PSD.
        const double noise = from_db(*noise_psd_dbm_per_mhz) / basis.value(B - 1, 0);
        for (std::size_t c = 0; c < cells; ++c)
            out.coefficients[c * B + B - 1] = noise;
    }
    out.map = reconstruct_map(grid, out.coefficients, basis);
    return out;
}

SynthesisResult synthesize_map(const GridSpec& grid, const std::vector<SourceConfig>& sources,
                               const ChannelModel& channel, const BasisSet& basis,
                               std::optional<double> noise_psd_dbm_per_mhz, std::uint64_t seed)
{
    Rng rng(seed);
    return synthesize_map(grid, sources, channel, basis, noise_psd_dbm_per_mhz, rng);
}

MapTensor reconstruct_map(const GridSpec& grid, const std::vector<double>& coefficients, const BasisSet& basis)
{
    const std::size_t B = basis.size();
    const std::size_t F = basis.n_f();
    if (coefficients.size() != grid.cell_count() * B)
        throw std::invalid_argument("coefficient tensor does not match grid and basis size");
    MapTensor map(grid, basis.frequencies());
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
        for (std::size_t f = 0; f < F; ++f) {
            double acc = 0.0;
            for (std::size_t b = 0; b < B; ++b)
                acc += coefficients[c * B + b] * basis.value(b, f);
            map.values[c * F + f] = to_db(acc);
        }
    }
    return map;
}

std::vector<Cell> eligible_cells(const GridSpec& grid, const std::vector<std::uint8_t>& buildings)
{
    if (!buildings.empty() && buildings.size() != grid.cell_count())
        throw std::invalid_argument("building mask has the wrong size");
    std::vector<Cell> cells;
    cells.reserve(grid.cell_count());
    for (std::size_t c = 0; c < grid.cell_count(); ++c)
        if (buildings.empty() || !buildings[c])
            cells.push_back(grid.cell(c));
    return cells;
}

SampledMap sample_cells(const MapTensor& map, const std::vector<Cell>& omega, double noise_std_db,
                        const std::vector<std::uint8_t>& buildings, Rng& rng)
{
    if (!(noise_std_db >= 0.0))
        throw std::invalid_argument("noise standard deviation must be non-negative");
    const std::size_t nf = map.n_f();
    std::vector<double> vals(omega.size() * nf);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t k = 0; k < omega.size(); ++k)
        for (std::size_t f = 0; f < nf; ++f) {
            const double v = map.at(omega[k].i, omega[k].j, f);
            vals[k * nf + f] = noise_std_db > 0.0 ? v + noise_std_db * normal(rng) : v;
        }
    SampledMap s = make_sampled_map(map.grid, map.frequencies, omega, vals);
    s.buildings = buildings;
    if (s.has_buildings())
        (void)combine_masks(map.grid, s.sample_mask, s.buildings); // rejects overlap
    return s;
}

SampledMap sample_map(const MapTensor& map, std::size_t n_samples, double noise_std_db,
                      const std::vector<std::uint8_t>& buildings, Rng& rng)
{
    auto pool = eligible_cells(map.grid, buildings);
    if (n_samples > pool.size())
        throw std::invalid_argument("requested " + std::to_string(n_samples) + " samples but only " +
                                    std::to_string(pool.size()) + " cells are eligible");
    // Partial Fisher-Yates: uniform without replacement.
    for (std::size_t k = 0; k < n_samples; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
        std::swap(pool[k], pool[pick(rng)]);
    }
    pool.resize(n_samples);
    return sample_cells(map, pool, noise_std_db, buildings, rng);
}

SampledMap sample_map(const MapTensor& map, std::size_t n_samples, double noise_std_db,
                      const std::vector<std::uint8_t>& buildings, std::uint64_t seed)
{
    Rng rng(seed);
    return sample_map(map, n_samples, noise_std_db, buildings, rng);
}

} // namespace radiomap
