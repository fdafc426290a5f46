#include "support.hpp"

#include "radiomap/dataset.hpp"
#include "radiomap/model_io.hpp"
#include "radiomap/network.hpp"

using namespace radiomap;

namespace {

GeneratorConfig small_generator(std::size_t n)
{
    GeneratorConfig g;
    g.grid = GridSpec::square(n, 50.0);
    g.channel.mode = PropagationMode::pathloss_only;
    g.omega_min = g.omega_max = n * n / 4;
    return g;
}

} // namespace

TEST_CASE("autoencoder geometry")
{
    AutoencoderOptions o;
    o.convs_per_block = 1;
    NetworkSpec s = make_autoencoder_spec(o);
    CHECK(s.bottleneck_shape() == Shape{2, 2, 16});
    CHECK(s.code_length() == 64);
    CHECK(s.depth() == 2 * 4 * 1 + 2);
    CHECK(s.fully_convolutional());

    o.pools = 5;
    o.bottleneck_channels = 4;
    s = make_autoencoder_spec(o);
    CHECK(s.code_length() == 4);

    o.pools = 6; // 32 is not divisible by 64
    CHECK_THROWS_AS(make_autoencoder_spec(o), std::invalid_argument);
}

TEST_CASE("parameter count does not depend on the grid size")
{
    AutoencoderOptions o;
    o.pools = 2;
    o.convs_per_block = 1;
    o.filters = 8;
    o.height = o.width = 16;
    Network<float> a(make_autoencoder_spec(o), 1);
    o.height = o.width = 64;
    Network<float> b(make_autoencoder_spec(o), 1);
    CHECK(a.parameter_count() == b.parameter_count());
    CHECK(a.parameter_count() > 0);

    o.dense_bottleneck = true;
    Network<float> c(make_autoencoder_spec(o), 1);
    CHECK_FALSE(c.spec().fully_convolutional());
}

TEST_CASE("decode of encode equals the estimate")
{
    AutoencoderOptions o;
    o.height = o.width = 16;
    o.pools = 2;
    o.convs_per_block = 1;
    o.filters = 8;
    o.bottleneck_channels = 2;
    Network<double> net(make_autoencoder_spec(o), 3);
    DatasetGenerator gen(small_generator(16), 7);
    const auto rec = gen.record(0);
    const auto est = net.estimate(rec.sampled);
    const auto code = net.encode_map(rec.sampled);
    CHECK(code.size() == net.spec().code_length());
    const auto dec = net.decode_code(code, rec.sampled.grid, rec.sampled.frequencies);
    CHECK(testing::max_abs_diff(est.values, dec.values) < 1e-9);
    CHECK_THROWS_AS(net.decode_code(std::vector<double>(code.size() + 1), rec.sampled.grid, {}),
                    std::invalid_argument);
}

TEST_CASE("initialization is seeded")
{
    AutoencoderOptions o;
    o.height = o.width = 8;
    o.pools = 1;
    o.convs_per_block = 1;
    o.filters = 4;
    Network<float> a(make_autoencoder_spec(o), 5), b(make_autoencoder_spec(o), 5), c(make_autoencoder_spec(o), 6);
    const auto wa = a.weights(), wb = b.weights(), wc = c.weights();
    REQUIRE(wa.size() == wb.size());
    bool same = true, differ = false;
    for (std::size_t k = 0; k < wa.size(); ++k) {
        same = same && wa[k].values == wb[k].values;
        differ = differ || wa[k].values != wc[k].values;
    }
    CHECK(same);
    CHECK(differ);
}

TEST_CASE("basis-expansion output")
{
    const BasisSet basis = BasisSet::uniform(BasisKind::gaussian, 2, 2400e6, 2420e6, 8, 4e6);
    AutoencoderOptions o;
    o.height = o.width = 8;
    o.pools = 1;
    o.convs_per_block = 1;
    o.filters = 4;
    o.value_channels = 8;
    o.bem = basis;
    const NetworkSpec spec = make_autoencoder_spec(o);
    CHECK(spec.decoder_channels() == 3);
    CHECK(spec.output_channels() == 8);
    Network<double> net(spec, 2);
    const std::size_t last = net.layer_count() - 2;
    CHECK(net.layer(last).kind() == LayerKind::bem);
    CHECK(net.layer(last).parameter_count() == 0);

    GeneratorConfig g = small_generator(8);
    g.basis = {BasisKind::gaussian, 2, 2400e6, 2420e6, 8, 4e6};
    g.noise_psd_min_dbm = g.noise_psd_max_dbm = -100.0;
    const auto rec = DatasetGenerator(g, 1).record(0);
    const auto coeff = net.estimate_coefficients(rec.sampled);
    const auto est = net.estimate(rec.sampled);
    const auto back = reconstruct_map(rec.sampled.grid, coeff, basis);
    CHECK(testing::max_abs_diff(est.values, back.values) < 1e-9);
}

TEST_CASE("weights survive a model archive round trip")
{
    AutoencoderOptions o;
    o.height = o.width = 8;
    o.pools = 1;
    o.convs_per_block = 2;
    o.filters = 4;
    ModelArchive m;
    m.spec = make_autoencoder_spec(o);
    m.seed = 9;
    Network<float> net(m.spec, 9);
    m.weights = net.weights();
    const auto dir = testing::temp_dir("model_rt");
    write_model(dir, m);
    const ModelArchive r = read_model(dir);
    const Network<float> back = load_network<float>(r);
    const auto w = back.weights();
    REQUIRE(w.size() == m.weights.size());
    for (std::size_t k = 0; k < w.size(); ++k) {
        CHECK(w[k].name == m.weights[k].name);
        CHECK(w[k].values == m.weights[k].values);
    }

    auto bad = m.weights;
    bad[0].dims[0] += 1;
    CHECK_THROWS_AS(net.set_weights(bad), std::invalid_argument);
}

TEST_CASE("spec json round trip")
{
    AutoencoderOptions o;
    o.dense_bottleneck = true;
    const NetworkSpec s = make_autoencoder_spec(o);
    nlohmann::json j = s;
    const NetworkSpec t = j.get<NetworkSpec>();
    CHECK(nlohmann::json(t) == j);
    CHECK(j.at("code_length") == s.code_length());
}
