#include "support.hpp"

#include "radiomap/propagation.hpp"

#include <map>

using namespace radiomap;

TEST_CASE("pathloss gain")
{
    ChannelModel ch;
    CHECK(pathloss_gain(ch, 1.0) == doctest::Approx(-30.0));
    CHECK(pathloss_gain(ch, 10.0) == doctest::Approx(-60.0));
    CHECK(pathloss_gain(ch, 100.0) == doctest::Approx(-90.0));
    CHECK(pathloss_gain(ch, 0.0) == pathloss_gain(ch, 0.1));
    CHECK(pathloss_gain(ChannelModel::free_space(), 10.0) == doctest::Approx(-50.0));
}

TEST_CASE("channel model validation")
{
    ChannelModel ch;
    ch.shadowing_decay = 1.0;
    CHECK_THROWS_AS(ch.validate(), std::invalid_argument);
    ch = ChannelModel{};
    ch.pathloss_exponent = 0.0;
    CHECK_THROWS_AS(ch.validate(), std::invalid_argument);
}

TEST_CASE("shadowing field")
{
    GridSpec g = GridSpec::square(4, 4.0);
    SUBCASE("zero-distance covariance equals the variance")
    {
        ShadowingSampler s(g, 10.0, 0.95);
        CHECK(s.covariance(3, 3) == doctest::Approx(10.0));
        CHECK(s.covariance(0, 1) == doctest::Approx(10.0 * 0.95));
    }
    SUBCASE("zero variance gives an all-zero field")
    {
        const auto f = gudmundson_field(g, 0.0, 0.95, 1);
        CHECK(std::all_of(f.begin(), f.end(), [](double v) { return v == 0.0; }));
    }
    SUBCASE("same seed, same field")
    {
        CHECK(gudmundson_field(g, 10.0, 0.95, 4) == gudmundson_field(g, 10.0, 0.95, 4));
    }
    SUBCASE("empirical mean is close to zero")
    {
        ShadowingSampler s(GridSpec::square(3, 3.0), 10.0, 0.95);
        Rng rng(17);
        double acc = 0.0;
        std::size_t n = 0;
        for (int t = 0; t < 10000; ++t)
            for (double v : s.draw(rng)) {
                acc += v;
                ++n;
            }
        CHECK(std::abs(acc / static_cast<double>(n)) < 0.15);
    }
}

TEST_CASE("basis sets integrate to one")
{
    const auto g = BasisSet::uniform(BasisKind::gaussian, 3, 2400e6, 2440e6, 64, 5e6);
    for (std::size_t b = 0; b < g.size(); ++b)
        CHECK(g.integral(b) == doctest::Approx(1.0).epsilon(1e-12));
    const auto r = BasisSet::uniform(BasisKind::raised_cosine, 2, 2400e6, 2440e6, 128, 10e6, 0.4);
    for (std::size_t b = 0; b < r.size(); ++b)
        CHECK(r.integral(b) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.functions().back().kind == BasisKind::constant_noise);

    const auto p = BasisSet::power_map(1400e6);
    CHECK(p.size() == 2);
    CHECK(p.value(0, 0) == 1.0);
    CHECK(p.value(1, 0) == 1.0);

    CHECK_THROWS_AS(BasisSet({{BasisKind::gaussian, 0, 1e6, 0.4}}, {0.0}), std::invalid_argument);
}

TEST_CASE("raised cosine shape")
{
    BasisFunction f{BasisKind::raised_cosine, 0.0, 10e6, 0.4};
    CHECK(f.raw(0.0) == 1.0);
    CHECK(f.raw(3e6) == 1.0);            // flat to (1 - r) W / 2
    CHECK(f.raw(5e6) == doctest::Approx(0.5)); // midpoint of the roll-off
    CHECK(f.raw(7.01e6) == 0.0);         // beyond (1 + r) W / 2
}

TEST_CASE("map synthesis")
{
    GridSpec g = GridSpec::square(8, 8.0);
    ChannelModel pl;
    pl.mode = PropagationMode::pathloss_only;
    const BasisSet basis = BasisSet::power_map(1400e6);

    SUBCASE("one source at unit distance")
    {
        SourceConfig s{{g.point(3, 4).x, g.point(3, 4).y + 1.0}, {7.0}};
        const auto r = synthesize_map(g, {s}, pl, basis, std::nullopt, 1);
        CHECK(r.map.at(3, 4, 0) == doctest::Approx(7.0 - 30.0).epsilon(1e-12));
    }
    SUBCASE("noise only gives a flat map at the noise level")
    {
        const auto wide = BasisSet::uniform(BasisKind::gaussian, 1, 2400e6, 2420e6, 16, 5e6);
        const auto r = synthesize_map(g, {}, pl, wide, -90.0, 1);
        for (double v : r.map.values)
            CHECK(v == doctest::Approx(-90.0).epsilon(1e-12));
    }
    SUBCASE("doubling every source power raises the map by 3.0103 dB")
    {
        std::vector<SourceConfig> src{{{1.3, 2.2}, {5.0}}, {{6.1, 4.7}, {9.0}}};
        auto twice = src;
        for (auto& s : twice)
            s.power_dbm[0] += 10.0 * std::log10(2.0);
        const auto a = synthesize_map(g, src, pl, basis, std::nullopt, 1);
        const auto b = synthesize_map(g, twice, pl, basis, std::nullopt, 1);
        for (std::size_t k = 0; k < a.map.values.size(); ++k)
            CHECK(b.map.values[k] - a.map.values[k] == doctest::Approx(3.0103).epsilon(1e-5));
    }
    SUBCASE("without shadowing the map depends only on geometry")
    {
        std::vector<SourceConfig> src{{{1.3, 2.2}, {5.0}}};
        CHECK(synthesize_map(g, src, pl, basis, std::nullopt, 1).map.values ==
              synthesize_map(g, src, pl, basis, std::nullopt, 2).map.values);
    }
    SUBCASE("basis reconstruction reproduces the synthesized map")
    {
        ChannelModel sh;
        const auto wide = BasisSet::uniform(BasisKind::raised_cosine, 3, 2400e6, 2440e6, 32, 10e6, 0.4);
        std::vector<SourceConfig> src{{{1.3, 2.2}, {5.0, 8.0, 6.0}}, {{6.1, 4.7}, {9.0, 5.5, 11.0}}};
        const auto r = synthesize_map(g, src, sh, wide, -100.0, 3);
        const auto back = reconstruct_map(g, r.coefficients, wide);
        CHECK(testing::max_abs_diff(back.values, r.map.values) < 1e-10);
    }
    SUBCASE("power count must match the signal bases")
    {
        std::vector<SourceConfig> src{{{1.0, 1.0}, {5.0, 6.0}}};
        CHECK_THROWS_AS(synthesize_map(g, src, pl, basis, std::nullopt, 1), std::invalid_argument);
    }
}

TEST_CASE("sensor sampling")
{
    GridSpec g = GridSpec::square(6, 6.0);
    MapTensor m(g, {});
    for (std::size_t k = 0; k < m.values.size(); ++k)
        m.values[k] = -60.0 - static_cast<double>(k);

    SUBCASE("noise-free, every cell")
    {
        const auto s = sample_map(m, g.cell_count(), 0.0, {}, 1);
        CHECK(s.values == m.values);
        CHECK(s.omega.size() == g.cell_count());
    }
    SUBCASE("no samples")
    {
        const auto s = sample_map(m, 0, 1.0, {}, 1);
        CHECK(s.omega.empty());
        CHECK(std::all_of(s.sample_mask.begin(), s.sample_mask.end(), [](double v) { return v == 0.0; }));
    }
    SUBCASE("too many samples")
    {
        CHECK_THROWS_AS(sample_map(m, 37, 1.0, {}, 1), std::invalid_argument);
        std::vector<std::uint8_t> b(36, 0);
        b[0] = b[1] = 1;
        CHECK_THROWS_AS(sample_map(m, 35, 1.0, b, 1), std::invalid_argument);
        const auto s = sample_map(m, 34, 1.0, b, 1);
        CHECK(s.observed(0, 0) == false);
        CHECK(s.network_mask()[0] == -1.0);
    }
    SUBCASE("measurement noise has the requested spread")
    {
        // Monte-Carlo check on one cell.
        Rng rng(23);
        MapTensor one(GridSpec::square(1, 1.0), {}, -70.0);
        double acc = 0.0, sq = 0.0;
        const int N = 10000;
        for (int t = 0; t < N; ++t) {
            const double v = sample_map(one, 1, 1.0, {}, rng).values[0] + 70.0;
            acc += v;
            sq += v * v;
        }
        const double mean = acc / N;
        const double sd = std::sqrt(sq / N - mean * mean);
        CHECK(sd == doctest::Approx(1.0).epsilon(0.05));
    }
    SUBCASE("draws are uniform over eligible cells")
    {
        Rng rng(5);
        std::map<std::size_t, int> hits;
        for (int t = 0; t < 3600; ++t)
            for (const Cell& c : sample_map(m, 1, 0.0, {}, rng).omega)
                ++hits[g.index(c.i, c.j)];
        CHECK(hits.size() == 36);
        for (const auto& [cell, n] : hits)
            CHECK(n > 50); // expected 100 each
    }
}
