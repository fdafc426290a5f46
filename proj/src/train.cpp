#include "radiomap/train.hpp"

#include "radiomap/file_util.hpp"
#include "radiomap/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace radiomap {

using nlohmann::json;

std::string to_string(LossMode m)
{
    switch (m) {
    case LossMode::masked_self: return "masked_self";
    case LossMode::synthetic_target: return "synthetic_target";
    case LossMode::sample_split: return "sample_split";
    case LossMode::freq_separated: return "freq_separated";
    }
    return "?";
}

LossMode loss_mode_from_string(const std::string& s)
{
    std::string k = s;
    std::replace(k.begin(), k.end(), '-', '_');
    for (auto m : {LossMode::masked_self, LossMode::synthetic_target, LossMode::sample_split, LossMode::freq_separated})
        if (to_string(m) == k)
            return m;
    throw std::invalid_argument("unknown loss mode '" + s +
                                "' (expected masked-self, synthetic-target, sample-split or freq-separated)");
}

void TrainConfig::validate() const
{
    if (batch_size == 0)
        throw std::invalid_argument("batch size must be positive");
    if (!(adam.learning_rate > 0.0))
        throw std::invalid_argument("learning rate must be positive");
    if (!(final_lr_fraction > 0.0 && final_lr_fraction <= 1.0))
        throw std::invalid_argument("final_lr_fraction must lie in (0, 1]");
    if (mode == LossMode::sample_split) {
        if (qt == 0)
            throw std::invalid_argument("sample split needs qt >= 1");
        if (!(split > 0.0 && split <= 1.0))
            throw std::invalid_argument("sample split fraction must lie in (0, 1]");
    }
}

void to_json(json& j, const TrainConfig& c)
{
    j = json{{"loss", to_string(c.mode)},
             {"iterations", c.iterations},
             {"batch_size", c.batch_size},
             {"learning_rate", c.adam.learning_rate},
             {"beta1", c.adam.beta1},
             {"beta2", c.adam.beta2},
             {"epsilon", c.adam.epsilon},
             {"final_lr_fraction", c.final_lr_fraction},
             {"qt", c.qt},
             {"split", c.split},
             {"seed", c.seed}};
}

void from_json(const json& j, TrainConfig& c)
{
    c = TrainConfig{};
    if (j.contains("loss"))
        c.mode = loss_mode_from_string(j.at("loss").get<std::string>());
    c.iterations = j.value("iterations", c.iterations);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.adam.learning_rate = j.value("learning_rate", c.adam.learning_rate);
    c.adam.beta1 = j.value("beta1", c.adam.beta1);
    c.adam.beta2 = j.value("beta2", c.adam.beta2);
    c.adam.epsilon = j.value("epsilon", c.adam.epsilon);
    c.final_lr_fraction = j.value("final_lr_fraction", c.final_lr_fraction);
    c.qt = j.value("qt", c.qt);
    c.split = j.value("split", c.split);
    c.seed = j.value("seed", c.seed);
    c.log_every = j.value("log_every", c.log_every);
    c.validate();
}

std::size_t instances_per_record(const TrainConfig& cfg, const DatasetRecord& first)
{
    switch (cfg.mode) {
    case LossMode::sample_split: return cfg.qt;
    case LossMode::freq_separated: return first.true_map.n_f();
    default: return 1;
    }
}

namespace {

std::vector<double> indicator(const GridSpec& g, const std::vector<Cell>& cells)
{
    std::vector<double> w(g.cell_count(), 0.0);
    for (const Cell& c : cells)
        w[g.index(c.i, c.j)] = 1.0;
    return w;
}

// Restriction of a sampled map to a subset of its observed cells.
SampledMap restrict_to(const SampledMap& s, const std::vector<Cell>& keep)
{
    SampledMap out = s;
    const std::size_t nf = s.n_f();
    std::fill(out.values.begin(), out.values.end(), kMissFillDb);
    std::fill(out.sample_mask.begin(), out.sample_mask.end(), 0.0);
    out.omega = keep;
    std::sort(out.omega.begin(), out.omega.end());
    for (const Cell& c : out.omega) {
        const std::size_t p = s.grid.index(c.i, c.j);
        out.sample_mask[p] = 1.0;
        for (std::size_t f = 0; f < nf; ++f)
            out.values[p * nf + f] = s.values[p * nf + f];
    }
    return out;
}

std::vector<Cell> draw_subset(const std::vector<Cell>& from, std::size_t n, Rng& rng)
{
    std::vector<Cell> pool = from;
    n = std::min(n, pool.size());
    for (std::size_t k = 0; k < n; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
        std::swap(pool[k], pool[pick(rng)]);
    }
    pool.resize(n);
    return pool;
}

} // namespace

TrainingInstance make_instance(const DatasetRecord& rec, std::size_t t, std::size_t q, const TrainConfig& cfg)
{
    TrainingInstance inst;
    const GridSpec& g = rec.sampled.grid;
    switch (cfg.mode) {
    case LossMode::masked_self:
        inst.input = rec.sampled;
        inst.target = rec.sampled.values;
        inst.weight = indicator(g, rec.sampled.omega);
        break;
    case LossMode::synthetic_target:
    case LossMode::freq_separated: {
        if (rec.true_map.values.empty())
            throw std::invalid_argument("record " + std::to_string(t) + " has no true map for synthetic-target training");
        inst.input = rec.sampled;
        inst.weight.assign(g.cell_count(), 1.0);
        for (std::size_t p = 0; p < inst.weight.size(); ++p)
            if (rec.sampled.has_buildings() && rec.sampled.buildings[p])
                inst.weight[p] = 0.0;
        if (cfg.mode == LossMode::synthetic_target) {
            inst.target = rec.true_map.values;
        } else {
            const std::size_t nf = rec.true_map.n_f();
            inst.slice = q;
            inst.target.resize(g.cell_count());
            for (std::size_t p = 0; p < g.cell_count(); ++p)
                inst.target[p] = rec.true_map.values[p * nf + q];
        }
        break;
    }
    case LossMode::sample_split: {
        Rng rng(mix_seed(cfg.seed, 0x5b117, t, q));
        const auto n = static_cast<std::size_t>(std::llround(cfg.split * static_cast<double>(rec.sampled.omega.size())));
        const auto in_cells = draw_subset(rec.sampled.omega, n, rng);
        const auto out_cells = draw_subset(rec.sampled.omega, n, rng);
        inst.input = restrict_to(rec.sampled, in_cells);
        inst.target = rec.sampled.values;
        inst.weight = indicator(g, out_cells);
        break;
    }
    }
    return inst;
}

void fit_normalization(NetworkSpec& spec, const RecordSource& data, std::size_t max_records)
{
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    const std::size_t count = std::min(max_records, data.size());
    for (std::size_t t = 0; t < count; ++t) {
        const DatasetRecord r = data.get(t);
        const std::size_t nf = r.sampled.n_f();
        for (const Cell& c : r.sampled.omega)
            for (std::size_t f = 0; f < nf; ++f) {
                const double v = r.sampled.at(c.i, c.j, f);
                sum += v;
                sq += v * v;
                ++n;
            }
    }
    if (n == 0)
        return;
    const double mean = sum / static_cast<double>(n);
    const double var = std::max(0.0, sq / static_cast<double>(n) - mean * mean);
    spec.value_offset = mean;
    spec.value_scale = var > 1e-12 ? std::sqrt(var) : 1.0;
}

TrainResult train(Network<float>& net, const RecordSource& data, const TrainConfig& cfg, const ProgressFn& progress)
{
    cfg.validate();
    TrainResult result;
    if (cfg.iterations == 0)
        return result;
    if (data.size() == 0)
        throw std::invalid_argument("training needs at least one record");

    const NetworkSpec& spec = net.spec();
    const DatasetRecord first = data.get(0);
    if (first.sampled.grid.n_y != spec.height || first.sampled.grid.n_x != spec.width)
        throw std::invalid_argument("training records are " + std::to_string(first.sampled.grid.n_y) + "x" +
                                    std::to_string(first.sampled.grid.n_x) + ", the network expects " +
                                    std::to_string(spec.height) + "x" + std::to_string(spec.width));
    if (cfg.mode == LossMode::freq_separated && !spec.frequency_separated)
        throw std::invalid_argument("freq-separated training needs a frequency-separated network spec");
    if (cfg.mode != LossMode::freq_separated && spec.frequency_separated)
        throw std::invalid_argument("a frequency-separated network must be trained with the freq-separated loss");
    if (!spec.frequency_separated && first.sampled.n_f() != spec.value_channels)
        throw std::invalid_argument("records have " + std::to_string(first.sampled.n_f()) +
                                    " frequencies, the network takes " + std::to_string(spec.value_channels));

    const std::size_t per = instances_per_record(cfg, first);
    const std::size_t pool = data.size() * per;
    std::vector<std::size_t> order(pool);
    Rng rng(mix_seed(cfg.seed, 0x0bde5));
    std::size_t cursor = pool;

    Adam<float> opt(net.params(), cfg.adam);
    const std::size_t H = spec.height, W = spec.width, C = spec.output_channels();
    const std::size_t B = std::min(cfg.batch_size, pool);
    result.loss_trace.reserve(cfg.iterations);

    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        std::vector<TrainingInstance> batch;
        batch.reserve(B);
        for (std::size_t k = 0; k < B; ++k) {
            if (cursor == pool) {
                for (std::size_t i = 0; i < pool; ++i)
                    order[i] = i;
                std::shuffle(order.begin(), order.end(), rng);
                cursor = 0;
            }
            const std::size_t id = order[cursor++];
            const std::size_t t = id / per, q = id % per;
            batch.push_back(make_instance(data.get(t), t, q, cfg));
        }

        std::vector<const SampledMap*> inputs;
        for (const auto& b : batch)
            inputs.push_back(&b.input);
        const Tensor<float> x = cfg.mode == LossMode::freq_separated ? [&] {
            // Slices differ per instance: build each row separately.
            Tensor<float> all(B, H, W, spec.input_channels());
            const std::size_t stride = H * W * spec.input_channels();
            for (std::size_t k = 0; k < B; ++k) {
                const Tensor<float> one = sampled_to_tensor<float>({inputs[k]}, batch[k].slice);
                std::copy(one.data.begin(), one.data.end(), all.data.begin() + static_cast<long>(k * stride));
            }
            return all;
        }()
                                                                    : net.make_input(inputs);
        Tensor<float> target(B, H, W, C), weight(B, H, W, 1);
        for (std::size_t k = 0; k < B; ++k) {
            if (batch[k].target.size() != H * W * C)
                throw std::invalid_argument("training target has " + std::to_string(batch[k].target.size()) +
                                            " entries, the network emits " + std::to_string(H * W * C));
            for (std::size_t i = 0; i < H * W * C; ++i)
                target.data[k * H * W * C + i] = static_cast<float>(batch[k].target[i]);
            for (std::size_t i = 0; i < H * W; ++i)
                weight.data[k * H * W + i] = static_cast<float>(batch[k].weight[i]);
        }

        if (cfg.final_lr_fraction < 1.0) {
            const double prog = static_cast<double>(it) / static_cast<double>(cfg.iterations);
            const double f = cfg.final_lr_fraction +
                             (1.0 - cfg.final_lr_fraction) * 0.5 * (1.0 + std::cos(std::numbers::pi * prog));
            opt.set_learning_rate(cfg.adam.learning_rate * f);
        }

        net.zero_grad();
        const Tensor<float> pred = net.forward_train(x);
        Tensor<float> grad;
        const double loss = batch_masked_loss(pred, target, weight, &grad);
        if (!std::isfinite(loss))
            throw std::runtime_error("training diverged: loss is " + std::to_string(loss) + " at iteration " +
                                     std::to_string(it) + " (try a lower learning rate or check the input data)");
        net.backward(grad);
        opt.step();
        result.loss_trace.push_back(loss);
        result.iterations = it + 1;
        if (progress && cfg.log_every && (it % cfg.log_every == 0 || it + 1 == cfg.iterations))
            progress(it, loss);
    }
    for (std::size_t k = 0; k < net.layer_count(); ++k)
        net.layer(k).clear_cache();
    return result;
}

} // namespace radiomap
