#include "radiomap/dataset.hpp"

#include "radiomap/file_util.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>
#include <thread>

namespace radiomap {

namespace fs = std::filesystem;
using nlohmann::json;

BasisSet BasisConfig::build() const
{
    if (n_f == 1 && n_signal == 1)
        return BasisSet::power_map(0.5 * (band_lo_hz + band_hi_hz));
    return BasisSet::uniform(kind, n_signal, band_lo_hz, band_hi_hz, n_f, width_hz, rolloff);
}

void GeneratorConfig::validate() const
{
    grid.validate();
    channel.validate();
    if (!(power_max_dbm >= power_min_dbm))
        throw std::invalid_argument("power range is empty");
    if (noise_psd_min_dbm.has_value() != noise_psd_max_dbm.has_value())
        throw std::invalid_argument("noise PSD range needs both bounds");
    if (noise_psd_min_dbm && !(*noise_psd_max_dbm >= *noise_psd_min_dbm))
        throw std::invalid_argument("noise PSD range is empty");
    if (n_sources == 0 && !noise_psd_min_dbm)
        throw std::invalid_argument("need at least one source or a noise level");
    if (omega_min > omega_max)
        throw std::invalid_argument("omega_min exceeds omega_max");
    if (!buildings.empty() && buildings.size() != grid.cell_count())
        throw std::invalid_argument("building mask has the wrong size");
    const std::size_t eligible = eligible_cells(grid, buildings).size();
    if (omega_max > eligible)
        throw std::invalid_argument("omega_max (" + std::to_string(omega_max) + ") exceeds eligible cells (" +
                                    std::to_string(eligible) + ")");
    if (!(noise_std_db >= 0.0))
        throw std::invalid_argument("noise_std_db must be non-negative");
}

void to_json(json& j, const GridSpec& g)
{
    j = json{{"n_y", g.n_y}, {"n_x", g.n_x}, {"delta_x", g.delta_x}, {"delta_y", g.delta_y},
             {"origin", {g.origin.x, g.origin.y}}};
}

void from_json(const json& j, GridSpec& g)
{
    if (j.contains("side_m") && j.contains("n")) {
        g = GridSpec::square(j.at("n").get<std::size_t>(), j.at("side_m").get<double>());
        return;
    }
    g.n_y = j.at("n_y").get<std::size_t>();
    g.n_x = j.at("n_x").get<std::size_t>();
    g.delta_x = j.at("delta_x").get<double>();
    g.delta_y = j.at("delta_y").get<double>();
    if (j.contains("origin")) {
        g.origin.x = j.at("origin").at(0).get<double>();
        g.origin.y = j.at("origin").at(1).get<double>();
    }
}

void to_json(json& j, const ChannelModel& c)
{
    j = json{{"pathloss_exponent", c.pathloss_exponent},
             {"unit_distance_gain_db", c.unit_distance_gain_db},
             {"shadowing_variance_db2", c.shadowing_variance_db2},
             {"shadowing_decay", c.shadowing_decay},
             {"mode", to_string(c.mode)}};
}

void from_json(const json& j, ChannelModel& c)
{
    c = ChannelModel{};
    if (j.contains("mode"))
        c.mode = propagation_mode_from_string(j.at("mode").get<std::string>());
    if (c.mode == PropagationMode::free_space_like)
        c = ChannelModel::free_space();
    c.pathloss_exponent = j.value("pathloss_exponent", c.pathloss_exponent);
    c.unit_distance_gain_db = j.value("unit_distance_gain_db", c.unit_distance_gain_db);
    c.shadowing_variance_db2 = j.value("shadowing_variance_db2", c.shadowing_variance_db2);
    c.shadowing_decay = j.value("shadowing_decay", c.shadowing_decay);
}

void to_json(json& j, const BasisConfig& c)
{
    j = json{{"kind", to_string(c.kind)}, {"n_signal", c.n_signal}, {"band_lo_hz", c.band_lo_hz},
             {"band_hi_hz", c.band_hi_hz}, {"n_f", c.n_f},           {"width_hz", c.width_hz},
             {"rolloff", c.rolloff}};
}

void from_json(const json& j, BasisConfig& c)
{
    c = BasisConfig{};
    if (j.contains("kind"))
        c.kind = basis_kind_from_string(j.at("kind").get<std::string>());
    c.n_signal = j.value("n_signal", c.n_signal);
    c.band_lo_hz = j.value("band_lo_hz", c.band_lo_hz);
    c.band_hi_hz = j.value("band_hi_hz", c.band_hi_hz);
    c.n_f = j.value("n_f", c.n_f);
    c.width_hz = j.value("width_hz", c.width_hz);
    c.rolloff = j.value("rolloff", c.rolloff);
}

void to_json(json& j, const GeneratorConfig& c)
{
    j = json{{"grid", c.grid},
             {"channel", c.channel},
             {"basis", c.basis},
             {"n_sources", c.n_sources},
             {"power_min_dbm", c.power_min_dbm},
             {"power_max_dbm", c.power_max_dbm},
             {"omega_min", c.omega_min},
             {"omega_max", c.omega_max},
             {"noise_std_db", c.noise_std_db}};
    if (c.fixed_power_dbm)
        j["fixed_power_dbm"] = *c.fixed_power_dbm;
    if (c.noise_psd_min_dbm) {
        j["noise_psd_min_dbm"] = *c.noise_psd_min_dbm;
        j["noise_psd_max_dbm"] = *c.noise_psd_max_dbm;
    }
    if (!c.buildings.empty()) {
        std::vector<std::size_t> idx;
        for (std::size_t k = 0; k < c.buildings.size(); ++k)
            if (c.buildings[k])
                idx.push_back(k);
        j["building_cells"] = idx;
    }
}

void from_json(const json& j, GeneratorConfig& c)
{
    c = GeneratorConfig{};
    if (j.contains("grid"))
        c.grid = j.at("grid").get<GridSpec>();
    if (j.contains("channel"))
        c.channel = j.at("channel").get<ChannelModel>();
    if (j.contains("basis"))
        c.basis = j.at("basis").get<BasisConfig>();
    c.n_sources = j.value("n_sources", c.n_sources);
    c.power_min_dbm = j.value("power_min_dbm", c.power_min_dbm);
    c.power_max_dbm = j.value("power_max_dbm", c.power_max_dbm);
    if (j.contains("fixed_power_dbm"))
        c.fixed_power_dbm = j.at("fixed_power_dbm").get<double>();
    if (j.contains("noise_psd_min_dbm"))
        c.noise_psd_min_dbm = j.at("noise_psd_min_dbm").get<double>();
    if (j.contains("noise_psd_max_dbm"))
        c.noise_psd_max_dbm = j.at("noise_psd_max_dbm").get<double>();
    if (j.contains("omega")) {
        c.omega_min = c.omega_max = j.at("omega").get<std::size_t>();
    } else {
        c.omega_min = j.value("omega_min", c.omega_min);
        c.omega_max = j.value("omega_max", c.omega_max);
    }
    c.noise_std_db = j.value("noise_std_db", c.noise_std_db);
    if (j.contains("building_cells")) {
        c.buildings.assign(c.grid.cell_count(), 0);
        for (auto k : j.at("building_cells").get<std::vector<std::size_t>>()) {
            if (k >= c.buildings.size())
                throw std::invalid_argument("building cell index out of range");
            c.buildings[k] = 1;
        }
    }
}

DatasetGenerator::DatasetGenerator(GeneratorConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), seed_(seed), basis_(cfg_.basis.build())
{
    cfg_.validate();
    if (cfg_.channel.has_shadowing())
        shadowing_ = std::make_shared<ShadowingSampler>(cfg_.grid, cfg_.channel.shadowing_variance_db2,
                                                         cfg_.channel.shadowing_decay);
}

DatasetRecord DatasetGenerator::record(std::size_t t) const
{
    Rng rng(mix_seed(seed_, 0x5eed0001, t));
    std::uniform_int_distribution<std::size_t> omega(cfg_.omega_min, cfg_.omega_max);
    return record(t, omega(rng));
}

DatasetRecord DatasetGenerator::record(std::size_t t, std::size_t omega_size) const
{
    Rng rng(mix_seed(seed_, 0x5eed0002, t));
    const auto& g = cfg_.grid;
    std::uniform_real_distribution<double> ux(g.origin.x - 0.5 * g.delta_x, g.origin.x + g.extent_x() - 0.5 * g.delta_x);
    std::uniform_real_distribution<double> uy(g.origin.y - 0.5 * g.delta_y, g.origin.y + g.extent_y() - 0.5 * g.delta_y);
    std::uniform_real_distribution<double> power(cfg_.power_min_dbm, cfg_.power_max_dbm);

    DatasetRecord rec;
    rec.sources.resize(cfg_.n_sources);
    for (auto& s : rec.sources) {
        s.position = {ux(rng), uy(rng)};
        s.power_dbm.resize(basis_.signal_count());
        for (auto& p : s.power_dbm)
            p = cfg_.fixed_power_dbm ? *cfg_.fixed_power_dbm : power(rng);
    }
    std::optional<double> noise;
    if (cfg_.noise_psd_min_dbm) {
        std::uniform_real_distribution<double> un(*cfg_.noise_psd_min_dbm, *cfg_.noise_psd_max_dbm);
        noise = un(rng);
    }
    auto synth = synthesize_map(g, rec.sources, cfg_.channel, basis_, noise, rng, shadowing_.get());
    rec.true_map = std::move(synth.map);
    rec.coefficients = std::move(synth.coefficients);
    rec.sampled = sample_map(rec.true_map, omega_size, cfg_.noise_std_db, cfg_.buildings, rng);
    return rec;
}

std::vector<DatasetRecord> generate_dataset(std::size_t T, const GeneratorConfig& cfg, std::uint64_t seed,
                                            unsigned threads)
{
    if (T < 1)
        throw std::invalid_argument("dataset size T must be at least 1");
    DatasetGenerator gen(cfg, seed);
    std::vector<DatasetRecord> out(T);
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(T)));
    if (threads == 1) {
        for (std::size_t t = 0; t < T; ++t)
            out[t] = gen.record(t);
        return out;
    }
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t t = w; t < T; t += threads)
                out[t] = gen.record(t);
        });
    for (auto& th : pool)
        th.join();
    return out;
}

RawTensor map_to_raw(const MapTensor& m, DType dtype)
{
    return RawTensor{dtype,
                     {static_cast<std::uint32_t>(m.grid.n_y), static_cast<std::uint32_t>(m.grid.n_x),
                      static_cast<std::uint32_t>(m.n_f())},
                     m.values};
}

MapTensor map_from_raw(const RawTensor& t, const GridSpec& grid, std::vector<double> frequencies)
{
    const std::size_t nf = frequencies.empty() ? 1 : frequencies.size();
    const bool rank2 = t.dims.size() == 2 && nf == 1;
    if (!(rank2 || t.dims.size() == 3))
        throw std::runtime_error("map tensor must have rank 3 (N_y x N_x x N_f)");
    if (t.dims[0] != grid.n_y || t.dims[1] != grid.n_x || (!rank2 && t.dims[2] != nf))
        throw std::runtime_error("map tensor shape does not match grid " + std::to_string(grid.n_y) + "x" +
                                 std::to_string(grid.n_x) + "x" + std::to_string(nf));
    MapTensor m(grid, std::move(frequencies));
    m.values = t.data;
    return m;
}

RawTensor mask_to_raw(const GridSpec& grid, const std::vector<double>& mask)
{
    return RawTensor{DType::f64, {static_cast<std::uint32_t>(grid.n_y), static_cast<std::uint32_t>(grid.n_x)}, mask};
}

namespace {

std::string record_name(std::size_t t, const char* what)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "record_%06zu_%s.rmt", t, what);
    return buf;
}

std::vector<double> mask_from_raw(const RawTensor& t, const GridSpec& grid, const std::string& what)
{
    if (t.dims.size() != 2 || t.dims[0] != grid.n_y || t.dims[1] != grid.n_x)
        throw std::runtime_error(what + ": mask shape does not match the map grid");
    return t.data;
}

} // namespace

void write_dataset(const fs::path& dir, const std::vector<DatasetRecord>& records, const GeneratorConfig& cfg,
                   std::uint64_t seed)
{
    fs::create_directories(dir);
    const BasisSet basis = cfg.basis.build();
    json manifest;
    manifest["format"] = "radiomap-dataset";
    manifest["version"] = 1;
    manifest["T"] = records.size();
    manifest["seed"] = seed;
    manifest["generator"] = cfg;
    manifest["frequencies_hz"] = basis.frequencies();
    json recs = json::array();
    for (std::size_t t = 0; t < records.size(); ++t) {
        const auto& r = records[t];
        write_rmt(dir / record_name(t, "true"), map_to_raw(r.true_map));
        RawTensor vals = map_to_raw(r.true_map);
        vals.data = r.sampled.values;
        write_rmt(dir / record_name(t, "values"), vals);
        write_rmt(dir / record_name(t, "mask"), mask_to_raw(r.sampled.grid, r.sampled.sample_mask));
        json jr{{"omega_size", r.sampled.omega.size()}};
        if (!r.coefficients.empty()) {
            write_rmt(dir / record_name(t, "coeffs"),
                      RawTensor{DType::f64,
                                {static_cast<std::uint32_t>(cfg.grid.n_y), static_cast<std::uint32_t>(cfg.grid.n_x),
                                 static_cast<std::uint32_t>(basis.size())},
                                r.coefficients});
            jr["coeffs"] = true;
        }
        json src = json::array();
        for (const auto& s : r.sources)
            src.push_back({{"x", s.position.x}, {"y", s.position.y}, {"power_dbm", s.power_dbm}});
        jr["sources"] = src;
        recs.push_back(jr);
    }
    manifest["records"] = recs;
    write_text_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

json read_dataset_manifest(const fs::path& dir)
{
    const fs::path p = dir / "manifest.json";
    if (!fs::exists(p))
        throw std::runtime_error("dataset manifest not found: " + p.string());
    auto j = json::parse(read_text_file(p));
    if (j.value("format", "") != "radiomap-dataset")
        throw std::runtime_error(p.string() + ": not a radiomap dataset manifest");
    return j;
}

std::vector<DatasetRecord> read_dataset(const fs::path& dir)
{
    const json manifest = read_dataset_manifest(dir);
    const GeneratorConfig cfg = manifest.at("generator").get<GeneratorConfig>();
    const auto freqs = manifest.at("frequencies_hz").get<std::vector<double>>();
    const std::size_t T = manifest.at("T").get<std::size_t>();
    std::vector<DatasetRecord> out(T);
    for (std::size_t t = 0; t < T; ++t) {
        auto& r = out[t];
        const json& jr = manifest.at("records").at(t);
        r.true_map = map_from_raw(read_rmt(dir / record_name(t, "true")), cfg.grid, freqs);
        r.sampled = read_sampled_map(dir / record_name(t, "values"), dir / record_name(t, "mask"), cfg.grid, freqs);
        r.sampled.buildings = cfg.buildings;
        if (jr.value("coeffs", false))
            r.coefficients = read_rmt(dir / record_name(t, "coeffs")).data;
        for (const auto& js : jr.at("sources"))
            r.sources.push_back({{js.at("x").get<double>(), js.at("y").get<double>()},
                                 js.at("power_dbm").get<std::vector<double>>(),
                                 1.5});
    }
    return out;
}

void write_sampled_map(const fs::path& dir, const std::string& stem, const SampledMap& s)
{
    RawTensor vals{DType::f64,
                   {static_cast<std::uint32_t>(s.grid.n_y), static_cast<std::uint32_t>(s.grid.n_x),
                    static_cast<std::uint32_t>(s.n_f())},
                   s.values};
    write_rmt(dir / (stem + "_values.rmt"), vals);
    write_rmt(dir / (stem + "_mask.rmt"), mask_to_raw(s.grid, s.sample_mask));
    if (s.has_buildings()) {
        std::vector<double> b(s.buildings.begin(), s.buildings.end());
        write_rmt(dir / (stem + "_buildings.rmt"), mask_to_raw(s.grid, b));
    }
}

SampledMap read_sampled_map(const fs::path& values_file, const fs::path& mask_file, const GridSpec& grid,
                            std::vector<double> frequencies, const std::optional<fs::path>& buildings_file)
{
    const MapTensor vals = map_from_raw(read_rmt(values_file), grid, frequencies);
    const auto mask = mask_from_raw(read_rmt(mask_file), grid, mask_file.string());
    SampledMap s;
    s.grid = grid;
    s.frequencies = std::move(frequencies);
    s.values = vals.values;
    s.sample_mask.assign(grid.cell_count(), 0.0);
    for (std::size_t c = 0; c < mask.size(); ++c) {
        if (mask[c] == 1.0) {
            s.sample_mask[c] = 1.0;
            s.omega.push_back(grid.cell(c));
        } else if (mask[c] != 0.0 && mask[c] != -1.0) {
            throw std::runtime_error(mask_file.string() + ": mask entries must be 0, 1 or -1");
        }
    }
    if (buildings_file) {
        const auto b = mask_from_raw(read_rmt(*buildings_file), grid, buildings_file->string());
        s.buildings.assign(b.size(), 0);
        for (std::size_t c = 0; c < b.size(); ++c)
            s.buildings[c] = b[c] != 0.0;
    } else if (std::any_of(mask.begin(), mask.end(), [](double m) { return m == -1.0; })) {
        // A combined {0,1,-1} mask carries the building set.
        s.buildings.assign(mask.size(), 0);
        for (std::size_t c = 0; c < mask.size(); ++c)
            s.buildings[c] = mask[c] == -1.0;
    }
    s.validate();
    return s;
}

ExternalMap ingest_external(const fs::path& map_file, const std::optional<fs::path>& building_mask_file,
                            std::vector<double> frequencies, double delta_x, double delta_y, std::size_t smooth_k)
{
    const RawTensor raw = read_rmt(map_file);
    if (raw.dims.size() != 2 && raw.dims.size() != 3)
        throw std::runtime_error(map_file.string() + ": expected a rank-2 or rank-3 map, got rank " +
                                 std::to_string(raw.dims.size()));
    const std::size_t nf = raw.dims.size() == 3 ? raw.dims[2] : 1;
    if (frequencies.empty())
        frequencies.assign(nf, 0.0);
    if (frequencies.size() != nf)
        throw std::runtime_error(map_file.string() + ": map has " + std::to_string(nf) + " frequency bins but " +
                                 std::to_string(frequencies.size()) + " frequencies were given");
    GridSpec grid;
    grid.n_y = raw.dims[0];
    grid.n_x = raw.dims[1];
    grid.delta_x = delta_x;
    grid.delta_y = delta_y;
    grid.validate();

    ExternalMap out;
    out.map = map_from_raw(raw, grid, std::move(frequencies));
    out.map.validate();
    if (building_mask_file) {
        const RawTensor b = read_rmt(*building_mask_file);
        if (b.dims.size() != 2 || b.dims[0] != grid.n_y || b.dims[1] != grid.n_x)
            throw std::runtime_error(building_mask_file->string() + ": building mask shape does not match map shape " +
                                     std::to_string(grid.n_y) + "x" + std::to_string(grid.n_x));
        out.buildings.resize(b.data.size());
        for (std::size_t c = 0; c < b.data.size(); ++c)
            out.buildings[c] = b.data[c] != 0.0;
    }
    if (smooth_k > 1)
        out.map = smooth_map(out.map, smooth_k);
    return out;
}

} // namespace radiomap
