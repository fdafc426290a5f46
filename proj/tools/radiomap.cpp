// radiomap: generate datasets, train completion autoencoders, estimate maps,
// run baseline estimators, sweeps and latent-space probes.

#include "radiomap/baselines.hpp"
#include "radiomap/dataset.hpp"
#include "radiomap/evaluation.hpp"
#include "radiomap/file_util.hpp"
#include "radiomap/model_io.hpp"
#include "radiomap/train.hpp"
#include "radiomap/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace radiomap;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool needs_out = true)
{
    cmd->add_option("--config", c.config, "JSON config file");
    cmd->add_option("--seed", c.seed, "master seed (overrides the config)");
    cmd->add_option("--threads", c.threads, "worker threads; 1 is fully deterministic (env RADIOMAP_THREADS)");
    auto* o = cmd->add_option("--out", c.out, "output directory");
    if (needs_out)
        o->required();
}

unsigned thread_count(const Common& c)
{
    if (c.threads)
        return std::max(1u, *c.threads);
    if (const char* env = std::getenv("RADIOMAP_THREADS")) {
        try {
            return std::max(1, std::stoi(env));
        } catch (const std::exception&) {
            throw std::invalid_argument(std::string("RADIOMAP_THREADS must be an integer, got '") + env + "'");
        }
    }
    return 1;
}

// Input provenance: file name and content hash, never the directory, so that
// runs in different locations produce identical manifests.
struct InputLog {
    json entries = json::object();
    void add(const std::string& role, const fs::path& p)
    {
        entries[role] = {{"file", p.filename().string()}, {"fnv1a64", hash_file(p)}};
    }
    void add_dir(const std::string& role, const fs::path& dir)
    {
        entries[role] = {{"file", dir.filename().string() + "/manifest.json"},
                         {"fnv1a64", hash_file(dir / "manifest.json")}};
    }
};

json load_config(const Common& c, InputLog& log)
{
    if (c.config.empty())
        return json::object();
    if (!fs::exists(c.config))
        throw std::runtime_error("config file not found: " + c.config);
    json j;
    try {
        j = json::parse(read_text_file(c.config));
    } catch (const json::exception& e) {
        throw std::runtime_error("cannot parse config " + c.config + ": " + e.what());
    }
    if (!j.is_object())
        throw std::runtime_error("config " + c.config + " must hold a JSON object");
    log.add("config", c.config);
    return j;
}

std::uint64_t resolve_seed(const Common& c, const json& cfg)
{
    if (c.seed)
        return *c.seed;
    return cfg.value("seed", std::uint64_t{1});
}

void write_manifest(const fs::path& out, const std::string& command, std::uint64_t seed, unsigned threads,
                    const json& effective, const InputLog& inputs)
{
    json m{{"tool", "radiomap"},
           {"version", kVersion},
           {"command", command},
           {"seed", seed},
           {"threads", threads},
           {"config", effective},
           {"inputs", inputs.entries}};
    write_text_atomic(out / "run_manifest.json", m.dump(2) + "\n");
}

// ---------------------------------------------------------------- sampled-map inputs

struct MapInput {
    std::string values, mask, buildings, dataset;
    std::optional<std::size_t> record;
    double delta_x = 1.0, delta_y = 1.0;
};

void add_map_input(CLI::App* cmd, MapInput& in)
{
    cmd->add_option("--values", in.values, "RMT1 sampled values (N_y x N_x [x N_f], dB)");
    cmd->add_option("--mask", in.mask, "RMT1 sample mask (0/1, or 0/1/-1 with buildings)");
    cmd->add_option("--buildings", in.buildings, "RMT1 building mask (nonzero = building)");
    cmd->add_option("--dataset", in.dataset, "dataset directory (alternative to --values/--mask)");
    cmd->add_option("--record", in.record, "record index within --dataset");
    cmd->add_option("--delta-x", in.delta_x, "grid spacing along x in meters (file inputs)");
    cmd->add_option("--delta-y", in.delta_y, "grid spacing along y in meters (file inputs)");
}

struct LoadedMap {
    SampledMap sampled;
    std::optional<MapTensor> truth;
};

LoadedMap load_map_input(const MapInput& in, InputLog& log)
{
    LoadedMap out;
    if (!in.dataset.empty()) {
        if (!in.record)
            throw std::invalid_argument("--dataset needs --record");
        if (!fs::exists(fs::path(in.dataset) / "manifest.json"))
            throw std::runtime_error("dataset directory not found or lacks manifest.json: " + in.dataset);
        const json m = read_dataset_manifest(in.dataset);
        const std::size_t T = m.at("T").get<std::size_t>();
        if (*in.record >= T)
            throw std::out_of_range("record " + std::to_string(*in.record) + " outside the dataset (T=" +
                                    std::to_string(T) + ")");
        const GeneratorConfig gen = m.at("generator").get<GeneratorConfig>();
        const auto freqs = m.at("frequencies_hz").get<std::vector<double>>();
        char stem[64];
        std::snprintf(stem, sizeof stem, "record_%06zu_", *in.record);
        const fs::path dir(in.dataset);
        out.sampled = read_sampled_map(dir / (std::string(stem) + "values.rmt"), dir / (std::string(stem) + "mask.rmt"),
                                       gen.grid, freqs);
        out.sampled.buildings = gen.buildings;
        out.truth = map_from_raw(read_rmt(dir / (std::string(stem) + "true.rmt")), gen.grid, freqs);
        log.add_dir("dataset", dir);
        log.entries["record"] = *in.record;
        return out;
    }
    if (in.values.empty() || in.mask.empty())
        throw std::invalid_argument("give --values and --mask, or --dataset with --record");
    for (const auto& p : {in.values, in.mask})
        if (!fs::exists(p))
            throw std::runtime_error("input file not found: " + p);
    const RawTensor raw = read_rmt(in.values);
    if (raw.dims.size() != 2 && raw.dims.size() != 3)
        throw std::runtime_error(in.values + ": expected a rank-2 or rank-3 tensor");
    GridSpec g;
    g.n_y = raw.dims[0];
    g.n_x = raw.dims[1];
    g.delta_x = in.delta_x;
    g.delta_y = in.delta_y;
    g.validate();
    const std::size_t nf = raw.dims.size() == 3 ? raw.dims[2] : 1;
    std::optional<fs::path> b;
    if (!in.buildings.empty())
        b = fs::path(in.buildings);
    out.sampled = read_sampled_map(in.values, in.mask, g, std::vector<double>(nf, 0.0), b);
    log.add("values", in.values);
    log.add("mask", in.mask);
    if (b)
        log.add("buildings", *b);
    return out;
}

struct PgmWindow {
    double lo = -110.0, hi = -40.0;
};

void add_pgm(CLI::App* cmd, PgmWindow& w)
{
    cmd->add_option("--pgm-lo", w.lo, "heatmap window lower bound (dB)");
    cmd->add_option("--pgm-hi", w.hi, "heatmap window upper bound (dB)");
}

// ---------------------------------------------------------------- gen

struct GenArgs {
    Common c;
    std::optional<std::size_t> T;
};

int cmd_gen(const GenArgs& a)
{
    InputLog log;
    json cfg = load_config(a.c, log);
    const GeneratorConfig gen = cfg.value("generator", json::object()).get<GeneratorConfig>();
    gen.validate();
    const std::size_t T = a.T ? *a.T : cfg.value("T", std::size_t{0});
    if (T < 1)
        throw std::invalid_argument("dataset size T must be at least 1 (set \"T\" in the config or pass --T)");
    const std::uint64_t seed = resolve_seed(a.c, cfg);
    const unsigned threads = thread_count(a.c);

    const auto records = generate_dataset(T, gen, seed, threads);
    write_dataset(a.c.out, records, gen, seed);
    json eff{{"generator", gen}, {"T", T}};
    write_manifest(a.c.out, "gen", seed, threads, eff, log);
    std::cout << "wrote " << T << " records to " << a.c.out << "\n";
    return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
    Common c;
    std::string dataset, init, loss;
    std::optional<std::size_t> qt, iterations, batch_size, T;
    std::optional<double> split, lr;
    bool quiet = false;
};

int cmd_train(const TrainArgs& a)
{
    InputLog log;
    json cfg = load_config(a.c, log);
    const std::uint64_t seed = resolve_seed(a.c, cfg);
    const unsigned threads = thread_count(a.c);

    json tj = cfg.value("train", json::object());
    TrainConfig tc = tj.get<TrainConfig>();
    if (a.c.seed || !tj.contains("seed"))
        tc.seed = seed;
    if (!a.loss.empty())
        tc.mode = loss_mode_from_string(a.loss);
    if (a.qt)
        tc.qt = *a.qt;
    if (a.split)
        tc.split = *a.split;
    if (a.iterations)
        tc.iterations = *a.iterations;
    if (a.batch_size)
        tc.batch_size = *a.batch_size;
    if (a.lr)
        tc.adam.learning_rate = *a.lr;
    if (!a.quiet && tc.log_every == 0)
        tc.log_every = 100;
    tc.validate();

    // Training data: a dataset directory, or records generated on demand.
    std::unique_ptr<RecordSource> source;
    GeneratorConfig gen;
    const std::string dataset = !a.dataset.empty() ? a.dataset : cfg.value("dataset", std::string{});
    json data_desc;
    if (!dataset.empty()) {
        if (!fs::exists(fs::path(dataset) / "manifest.json"))
            throw std::runtime_error("dataset directory not found or lacks manifest.json: " + dataset);
        gen = read_dataset_manifest(dataset).at("generator").get<GeneratorConfig>();
        log.add_dir("dataset", dataset);
        auto records = read_dataset(dataset);
        for (auto& r : records)
            r.sampled.buildings = gen.buildings;
        source = std::make_unique<VectorSource>(std::move(records));
        data_desc = {{"dataset", fs::path(dataset).filename().string()}};
    } else if (cfg.contains("generator")) {
        gen = cfg.at("generator").get<GeneratorConfig>();
        const std::size_t T = a.T ? *a.T : cfg.value("T", std::size_t{0});
        if (T < 1)
            throw std::invalid_argument("on-the-fly training data needs \"T\" >= 1");
        const std::uint64_t data_seed = cfg.value("data_seed", mix_seed(seed, 0xda7a));
        source = std::make_unique<GeneratorSource>(DatasetGenerator(gen, data_seed), T);
        data_desc = {{"generator", gen}, {"T", T}, {"data_seed", data_seed}};
    } else {
        throw std::invalid_argument("train needs --dataset, a \"dataset\" path or a \"generator\" in the config");
    }
    gen.validate();

    ModelArchive archive;
    std::optional<Network<float>> net;
    if (!a.init.empty()) {
        if (!fs::exists(fs::path(a.init) / "manifest.json"))
            throw std::runtime_error("initial model not found: " + a.init);
        const ModelArchive init = read_model(a.init);
        log.add_dir("init_model", a.init);
        net.emplace(load_network<float>(init));
        archive.provenance["initialized_from"] = fs::path(a.init).filename().string();
    } else {
        AutoencoderOptions opt = cfg.value("architecture", json::object()).get<AutoencoderOptions>();
        const BasisSet basis = gen.basis.build();
        const DatasetRecord first = source->get(0);
        opt.height = gen.grid.n_y;
        opt.width = gen.grid.n_x;
        opt.value_channels = opt.frequency_separated ? 1 : first.sampled.n_f();
        opt.output_channels = opt.value_channels;
        opt.mask_channels = 1 + first.sampled.meta_masks.size();
        if (cfg.value("architecture", json::object()).value("bem", false))
            opt.bem = basis;
        NetworkSpec spec = make_autoencoder_spec(opt);
        fit_normalization(spec, *source);
        net.emplace(spec, seed);
    }

    const TrainResult res = train(*net, *source, tc, [](std::size_t it, double loss) {
        std::cerr << "iteration " << it << "  loss " << loss << " dB^2\n";
    });

    archive.spec = net->spec();
    archive.weights = net->weights();
    archive.train_config = tc;
    archive.seed = seed;
    archive.provenance["data"] = data_desc;
    archive.provenance["iterations_run"] = res.iterations;
    write_model(a.c.out, archive);
    std::ostringstream trace;
    trace << "iteration,loss\n";
    char buf[64];
    for (std::size_t k = 0; k < res.loss_trace.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%zu,%.9g\n", k, res.loss_trace[k]);
        trace << buf;
    }
    write_text_atomic(fs::path(a.c.out) / "loss_trace.csv", trace.str());
    json eff{{"train", tc}, {"data", data_desc}, {"spec", archive.spec}};
    write_manifest(a.c.out, "train", seed, threads, eff, log);
    std::cout << "trained " << res.iterations << " iterations; model written to " << a.c.out << "\n";
    return 0;
}

// ---------------------------------------------------------------- estimate

struct EstimateArgs {
    Common c;
    std::string model;
    MapInput in;
    PgmWindow pgm;
};

int cmd_estimate(const EstimateArgs& a)
{
    InputLog log;
    json cfg = load_config(a.c, log);
    if (!fs::exists(fs::path(a.model) / "manifest.json"))
        throw std::runtime_error("model archive not found: " + a.model);
    const ModelArchive model = read_model(a.model);
    log.add_dir("model", a.model);
    const LoadedMap in = load_map_input(a.in, log);
    const Network<float> net = load_network<float>(model);
    const unsigned threads = thread_count(a.c);

    const MapTensor est = net.estimate(in.sampled);
    const fs::path out(a.c.out);
    fs::create_directories(out);
    write_rmt(out / "estimate.rmt", map_to_raw(est));
    write_pgm(out / "estimate.pgm", est, a.pgm.lo, a.pgm.hi);
    json eff{{"observed_cells", in.sampled.omega.size()}, {"pgm_window", {a.pgm.lo, a.pgm.hi}}};
    if (net.spec().bem) {
        const auto coeffs = net.estimate_coefficients(in.sampled);
        const auto& g = in.sampled.grid;
        write_rmt(out / "coefficients.rmt",
                  RawTensor{DType::f64,
                            {static_cast<std::uint32_t>(g.n_y), static_cast<std::uint32_t>(g.n_x),
                             static_cast<std::uint32_t>(net.spec().bem->size())},
                            coeffs});
    }
    if (in.truth) {
        eff["rmse_db"] = rmse(*in.truth, est);
        std::cout << "rmse vs true map: " << rmse(*in.truth, est) << " dB\n";
    }
    write_manifest(out, "estimate", resolve_seed(a.c, cfg), threads, eff, log);
    std::cout << "estimate from " << in.sampled.omega.size() << " observed cells written to " << a.c.out << "\n";
    return 0;
}

// ---------------------------------------------------------------- baseline

struct BaselineArgs {
    Common c;
    std::string method;
    std::optional<std::size_t> k, max_iter;
    std::optional<double> reg, sigma, step, tol;
    bool center = false;
    MapInput in;
    PgmWindow pgm;
};

int cmd_baseline(const BaselineArgs& a)
{
    InputLog log;
    json cfg = load_config(a.c, log);
    BaselineConfig bc;
    const std::string method = !a.method.empty() ? a.method : cfg.value("method", std::string{"knn"});
    bc.method = baseline_method_from_string(method);
    bc.k = a.k ? *a.k : cfg.value("k", bc.k);
    bc.reg = a.reg ? *a.reg : cfg.value("reg", bc.reg);
    bc.kernel_sigma = a.sigma ? *a.sigma : cfg.value("sigma", bc.kernel_sigma);
    bc.svt_step = a.step ? *a.step : cfg.value("step", bc.svt_step);
    bc.svt_max_iterations = a.max_iter ? *a.max_iter : cfg.value("max_iterations", bc.svt_max_iterations);
    bc.svt_tolerance = a.tol ? *a.tol : cfg.value("tolerance", bc.svt_tolerance);
    bc.svt_center = a.center || cfg.value("center", false);
    bc.validate();
    const LoadedMap in = load_map_input(a.in, log);
    const unsigned threads = thread_count(a.c);

    json eff{{"method", to_string(bc.method)},
             {"k", bc.k},
             {"reg", bc.reg},
             {"sigma", bc.kernel_sigma > 0.0 ? bc.kernel_sigma : auto_kernel_sigma(in.sampled.grid, std::max<std::size_t>(in.sampled.omega.size(), 1))},
             {"svt_step", bc.svt_step},
             {"svt_max_iterations", bc.svt_max_iterations},
             {"svt_tolerance", bc.svt_tolerance},
             {"svt_center", bc.svt_center}};
    MapTensor est;
    if (bc.method == BaselineMethod::nuclear_norm) {
        SvtStatus st;
        est = nuclear_norm_estimate(in.sampled, bc, &st);
        eff["svt_converged"] = st.converged;
        eff["svt_iterations"] = st.iterations;
        if (!st.converged)
            std::cerr << "warning: nuclear-norm solver stopped after " << st.iterations
                      << " iterations without reaching the tolerance\n";
    } else {
        est = run_baseline(in.sampled, bc);
    }
    const fs::path out(a.c.out);
    fs::create_directories(out);
    write_rmt(out / "estimate.rmt", map_to_raw(est));
    write_pgm(out / "estimate.pgm", est, a.pgm.lo, a.pgm.hi);
    if (in.truth) {
        eff["rmse_db"] = rmse(*in.truth, est);
        std::cout << "rmse vs true map: " << rmse(*in.truth, est) << " dB\n";
    }
    write_manifest(out, "baseline", resolve_seed(a.c, cfg), threads, eff, log);
    std::cout << to_string(bc.method) << " estimate written to " << a.c.out << "\n";
    return 0;
}

// ---------------------------------------------------------------- sweep

struct SweepArgs {
    Common c;
    std::optional<std::size_t> trials;
};

int cmd_sweep(const SweepArgs& a)
{
    InputLog log;
    json cfg = load_config(a.c, log);
    if (cfg.empty())
        throw std::invalid_argument("sweep needs a --config");
    ExperimentConfig ec;
    ec.data = cfg.value("generator", json::object()).get<GeneratorConfig>();
    ec.variable = sweep_variable_from_string(cfg.value("variable", std::string{"omega_size"}));
    ec.values = cfg.value("values", std::vector<double>{});
    ec.trials = a.trials ? *a.trials : cfg.value("trials", ec.trials);
    ec.seed = resolve_seed(a.c, cfg);
    ec.threads = thread_count(a.c);
    if (cfg.contains("pgm_window")) {
        const auto w = cfg.at("pgm_window").get<std::vector<double>>();
        if (w.size() != 2)
            throw std::invalid_argument("pgm_window needs [lo, hi]");
        ec.pgm_lo_db = w[0];
        ec.pgm_hi_db = w[1];
    }
    ec.output_dir = a.c.out;
    ec.validate();

    // Validate every estimator and load every model before computing anything.
    std::vector<Estimator> estimators;
    if (!cfg.contains("estimators") || cfg.at("estimators").empty())
        throw std::invalid_argument("sweep config needs a non-empty \"estimators\" list");
    for (const auto& e : cfg.at("estimators")) {
        const std::string method = e.value("method", std::string{});
        const std::string name = e.value("name", method);
        if (method == "oracle" || method == "true_map") {
            estimators.push_back(oracle_estimator());
            estimators.back().name = name;
        } else if (method == "network" || method == "autoencoder") {
            std::map<double, std::shared_ptr<const Network<float>>> models;
            auto load = [&](double value, const std::string& dir) {
                if (!fs::exists(fs::path(dir) / "manifest.json"))
                    throw std::runtime_error("missing model for estimator '" + name + "': " + dir);
                const ModelArchive m = read_model(dir);
                log.add_dir(name + "@" + std::to_string(value), dir);
                models[value] = std::make_shared<const Network<float>>(load_network<float>(m));
            };
            if (e.contains("model"))
                load(0.0, e.at("model").get<std::string>());
            if (e.contains("models"))
                for (const auto& [k, v] : e.at("models").items())
                    load(std::stod(k), v.get<std::string>());
            if (models.empty())
                throw std::invalid_argument("network estimator '" + name + "' needs \"model\" or \"models\"");
            if (ec.variable != SweepVariable::omega_size)
                for (double v : ec.values)
                    if (!models.count(v))
                        throw std::runtime_error("missing model for estimator '" + name + "' at " +
                                                 to_string(ec.variable) + "=" + std::to_string(v));
            estimators.push_back(network_estimator(name, std::move(models), ec.variable));
        } else {
            BaselineConfig bc;
            bc.method = baseline_method_from_string(method);
            bc.k = e.value("k", bc.k);
            bc.reg = e.value("reg", bc.reg);
            bc.kernel_sigma = e.value("sigma", bc.kernel_sigma);
            bc.svt_max_iterations = e.value("max_iterations", bc.svt_max_iterations);
            bc.svt_tolerance = e.value("tolerance", bc.svt_tolerance);
            bc.svt_center = e.value("center", bc.svt_center);
            estimators.push_back(baseline_estimator(name, bc));
        }
    }

    fs::create_directories(ec.output_dir);
    const auto rows = sweep(ec, estimators);
    std::cout << sweep_csv(rows);
    json eff = cfg;
    eff["trials"] = ec.trials;
    write_manifest(a.c.out, "sweep", ec.seed, ec.threads, eff, log);
    return 0;
}

// ---------------------------------------------------------------- probe

struct ProbeArgs {
    Common c;
    std::string model, dataset, kind = "mean-code", subset;
    double alpha = 10.0;
    std::size_t index = 1;
    std::optional<std::size_t> count;
    PgmWindow pgm;
};

int cmd_probe(const ProbeArgs& a)
{
    InputLog log;
    json cfg = load_config(a.c, log);
    if (!fs::exists(fs::path(a.model) / "manifest.json"))
        throw std::runtime_error("model archive not found: " + a.model);
    if (!fs::exists(fs::path(a.dataset) / "manifest.json"))
        throw std::runtime_error("dataset directory not found or lacks manifest.json: " + a.dataset);
    LatentProbe probe;
    probe.kind = probe_kind_from_string(a.kind);
    probe.alpha = a.alpha;
    probe.eigen_index = a.index;
    if (!a.subset.empty()) {
        std::stringstream ss(a.subset);
        std::string tok;
        while (std::getline(ss, tok, ','))
            probe.subset.push_back(std::stoul(tok));
    }
    const ModelArchive model = read_model(a.model);
    log.add_dir("model", a.model);
    log.add_dir("dataset", a.dataset);
    const Network<float> net = load_network<float>(model);
    const std::size_t nl = net.spec().code_length();
    if (probe.kind == ProbeKind::eigen_perturbation && (probe.eigen_index < 1 || probe.eigen_index > nl))
        throw std::out_of_range("eigen index " + std::to_string(probe.eigen_index) + " exceeds the code length " +
                                std::to_string(nl));

    auto records = read_dataset(a.dataset);
    const std::size_t count = std::min(a.count ? *a.count : records.size(), records.size());
    std::vector<std::vector<double>> codes;
    for (std::size_t t = 0; t < count; ++t)
        codes.push_back(net.encode_map(records[t].sampled));
    const CodeStatistics stats = code_statistics(codes);
    const MapTensor decoded =
        latent_probe(net, stats, probe, records.front().true_map.grid, records.front().true_map.frequencies);

    const fs::path out(a.c.out);
    fs::create_directories(out);
    write_rmt(out / "probe.rmt", map_to_raw(decoded));
    write_pgm(out / "probe.pgm", decoded, a.pgm.lo, a.pgm.hi);
    json eff{{"kind", to_string(probe.kind)},
             {"alpha", probe.alpha},
             {"eigen_index", probe.eigen_index},
             {"subset", probe.subset},
             {"codes", count},
             {"leading_eigenvalues", std::vector<double>(stats.eigenvalues.data(),
                                                         stats.eigenvalues.data() +
                                                             std::min<Eigen::Index>(5, stats.eigenvalues.size()))}};
    write_manifest(out, "probe", resolve_seed(a.c, cfg), thread_count(a.c), eff, log);
    std::cout << to_string(probe.kind) << " panel written to " << a.c.out << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Radio map synthesis, completion-autoencoder training and estimation"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "generate a synthetic dataset");
    add_common(g, gen.c);
    g->add_option("--T", gen.T, "number of records");

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "train a completion autoencoder");
    add_common(t, tr.c);
    t->add_option("--dataset", tr.dataset, "dataset directory");
    t->add_option("--init", tr.init, "model archive to start from (hybrid / transfer training)");
    t->add_option("--loss", tr.loss, "masked-self | synthetic-target | sample-split | freq-separated");
    t->add_option("--qt", tr.qt, "sample-split subset pairs per record");
    t->add_option("--split", tr.split, "sample-split fraction of Omega per subset");
    t->add_option("--iterations", tr.iterations, "optimizer steps");
    t->add_option("--batch-size", tr.batch_size, "instances per step");
    t->add_option("--lr", tr.lr, "Adam learning rate");
    t->add_option("--T", tr.T, "records for on-the-fly generation");
    t->add_flag("--quiet", tr.quiet, "no progress output");

    EstimateArgs es;
    auto* e = app.add_subcommand("estimate", "estimate a full map with a trained model");
    add_common(e, es.c);
    e->add_option("--model", es.model, "model archive directory")->required();
    add_map_input(e, es.in);
    add_pgm(e, es.pgm);

    BaselineArgs bl;
    auto* b = app.add_subcommand("baseline", "run a classical estimator");
    add_common(b, bl.c);
    b->add_option("--method", bl.method, "knn | kriging | nuclear-norm");
    b->add_option("--k", bl.k, "knn neighbors");
    b->add_option("--reg", bl.reg, "kriging ridge / nuclear-norm weight");
    b->add_option("--sigma", bl.sigma, "kriging kernel width in meters (default: automatic)");
    b->add_option("--step", bl.step, "nuclear-norm step size");
    b->add_option("--max-iter", bl.max_iter, "nuclear-norm iteration cap");
    b->add_option("--tol", bl.tol, "nuclear-norm relative-change tolerance");
    b->add_flag("--center", bl.center, "nuclear-norm: complete deviations from the observed mean");
    add_map_input(b, bl.in);
    add_pgm(b, bl.pgm);

    SweepArgs sw;
    auto* s = app.add_subcommand("sweep", "RMSE sweep over |Omega|, code length, depth or activation");
    add_common(s, sw.c);
    s->add_option("--trials", sw.trials, "trials per sweep value");

    ProbeArgs pr;
    auto* p = app.add_subcommand("probe", "decode probes of the latent space");
    add_common(p, pr.c);
    p->add_option("--model", pr.model, "model archive directory")->required();
    p->add_option("--dataset", pr.dataset, "dataset whose codes define the statistics")->required();
    p->add_option("--kind", pr.kind, "mean-code | std-perturbation | eigen-perturbation");
    p->add_option("--subset", pr.subset, "comma-separated 1-based code indices (std-perturbation)");
    p->add_option("--alpha", pr.alpha, "eigen-perturbation scale");
    p->add_option("--index", pr.index, "1-based eigenvector index");
    p->add_option("--count", pr.count, "number of records to encode");
    add_pgm(p, pr.pgm);

    CLI11_PARSE(app, argc, argv);
    try {
        if (g->parsed())
            return cmd_gen(gen);
        if (t->parsed())
            return cmd_train(tr);
        if (e->parsed())
            return cmd_estimate(es);
        if (b->parsed())
            return cmd_baseline(bl);
        if (s->parsed())
            return cmd_sweep(sw);
        if (p->parsed())
            return cmd_probe(pr);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 1;
}
