#include "support.hpp"

#include "radiomap/grid.hpp"

using namespace radiomap;

namespace {

// Exhaustive nearest-grid-point scan, first minimum in row-major order wins.
std::size_t brute_nearest(const GridSpec& g, Point2 x)
{
    std::size_t best = 0;
    double bd = 1e300;
    for (std::size_t i = 0; i < g.n_y; ++i)
        for (std::size_t j = 0; j < g.n_x; ++j) {
            const Point2 p = g.point(i, j);
            const double d = std::hypot(p.x - x.x, p.y - x.y);
            if (d < bd) {
                bd = d;
                best = g.index(i, j);
            }
        }
    return best;
}

MeasurementSet single_freq(std::vector<Point2> pts, std::vector<double> vals)
{
    MeasurementSet m;
    m.locations = std::move(pts);
    for (double v : vals)
        m.values.push_back({v});
    return m;
}

} // namespace

TEST_CASE("grid points follow origin plus index times spacing")
{
    GridSpec g;
    g.n_y = 3;
    g.n_x = 4;
    g.delta_x = 2.0;
    g.delta_y = 5.0;
    g.origin = {10.0, -1.0};
    const Point2 p = g.point(2, 3);
    CHECK(p.x == doctest::Approx(16.0));
    CHECK(p.y == doctest::Approx(9.0));
    g.delta_x = 0.0;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}

TEST_CASE("assignment to the nearest grid point")
{
    GridSpec g = GridSpec::square(4, 4.0);

    SUBCASE("measurement on a grid point")
    {
        const auto a = assign_to_grid(g, single_freq({{0.0, 0.0}}, {-60.0}));
        REQUIRE(a.at(0, 0).size() == 1);
        CHECK(a.at(0, 0)[0] == 0);
    }
    SUBCASE("random points match an exhaustive scan")
    {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(-1.5, 4.5);
        std::vector<Point2> pts;
        for (int n = 0; n < 10; ++n)
            pts.push_back({u(rng), u(rng)});
        const auto a = assign_to_grid(g, single_freq(pts, std::vector<double>(10, -50.0)));
        for (std::size_t n = 0; n < pts.size(); ++n) {
            const std::size_t c = brute_nearest(g, pts[n]);
            const auto& members = a.members[c];
            CHECK(std::find(members.begin(), members.end(), n) != members.end());
        }
    }
    SUBCASE("ties go to the row-major first cell")
    {
        const auto a = assign_to_grid(g, single_freq({{0.5, 0.0}, {0.5, 0.5}}, {-60.0, -61.0}));
        CHECK(a.at(0, 0).size() == 2);
        CHECK(a.at(0, 1).empty());
    }
    SUBCASE("every measurement lands in exactly one cell")
    {
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> u(-10.0, 10.0);
        std::vector<Point2> pts;
        for (int n = 0; n < 200; ++n)
            pts.push_back({u(rng), u(rng)});
        const auto a = assign_to_grid(g, single_freq(pts, std::vector<double>(200, -50.0)));
        std::vector<int> seen(200, 0);
        std::size_t total = 0;
        for (const auto& m : a.members) {
            total += m.size();
            for (auto n : m)
                ++seen[n];
        }
        CHECK(total == 200);
        CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
    }
}

TEST_CASE("aggregation averages linear power")
{
    GridSpec g = GridSpec::square(2, 2.0);
    SUBCASE("one measurement")
    {
        auto m = single_freq({{0.0, 0.0}}, {-60.0});
        const auto s = aggregate(g, m, assign_to_grid(g, m));
        CHECK(s.values[0] == doctest::Approx(-60.0).epsilon(1e-14));
        CHECK(s.sample_mask[0] == 1.0);
    }
    SUBCASE("two measurements in one cell")
    {
        auto m = single_freq({{0.0, 0.0}, {0.1, 0.1}}, {-60.0, -70.0});
        const auto s = aggregate(g, m, assign_to_grid(g, m));
        // 10 log10((1e-6 + 1e-7) / 2)
        CHECK(s.values[0] == doctest::Approx(-62.59637310505756).epsilon(1e-12));
        CHECK(s.omega.size() == 1);
    }
    SUBCASE("misses hold the fill value and mask 0")
    {
        auto m = single_freq({{0.0, 0.0}}, {-60.0});
        const auto s = aggregate(g, m, assign_to_grid(g, m));
        CHECK(s.values[3] == kMissFillDb);
        CHECK(s.sample_mask[3] == 0.0);
    }
    SUBCASE("empty measurement set gives an empty omega")
    {
        MeasurementSet m;
        const auto s = aggregate(g, m, assign_to_grid(g, m));
        CHECK(s.omega.empty());
        CHECK(std::all_of(s.sample_mask.begin(), s.sample_mask.end(), [](double v) { return v == 0.0; }));
        s.validate();
    }
}

TEST_CASE("aggregation properties")
{
    GridSpec g = GridSpec::square(5, 10.0);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 10.0), val(-100.0, -40.0);

    SUBCASE("mask agrees with omega and with non-empty index sets")
    {
        std::vector<Point2> pts;
        std::vector<double> vals;
        for (int n = 0; n < 30; ++n) {
            pts.push_back({u(rng), u(rng)});
            vals.push_back(val(rng));
        }
        auto m = single_freq(pts, vals);
        const auto a = assign_to_grid(g, m);
        const auto s = aggregate(g, m, a);
        s.validate();
        for (std::size_t c = 0; c < g.cell_count(); ++c) {
            const Cell cell = g.cell(c);
            const bool in_omega = std::find(s.omega.begin(), s.omega.end(), cell) != s.omega.end();
            CHECK(in_omega == (s.sample_mask[c] == 1.0));
            CHECK(in_omega == !a.members[c].empty());
        }
    }
    SUBCASE("measurements on grid points are reproduced exactly")
    {
        std::vector<Point2> pts;
        std::vector<double> vals;
        for (std::size_t c = 0; c < g.cell_count(); c += 2) {
            pts.push_back(g.point(g.cell(c)));
            vals.push_back(val(rng));
        }
        auto m = single_freq(pts, vals);
        const auto s = aggregate(g, m, assign_to_grid(g, m));
        for (std::size_t n = 0; n < pts.size(); ++n)
            CHECK(std::abs(s.values[2 * n] - vals[n]) < 1e-12);
    }
}

TEST_CASE("combined masks")
{
    GridSpec g = GridSpec::square(2, 2.0);
    const std::vector<double> mask{1, 0, 0, 0};
    CHECK(combine_masks(g, mask, {}) == mask);
    const std::vector<std::uint8_t> b{0, 0, 0, 1};
    const auto m = combine_masks(g, mask, b);
    CHECK(m == std::vector<double>{1, 0, 0, -1});
    CHECK(combine_masks(g, mask, b) == m);
    CHECK_THROWS_WITH_AS(combine_masks(g, mask, {1, 0, 0, 0}), doctest::Contains("(0,0)"), std::invalid_argument);
}

TEST_CASE("smoothing over nearest grid points")
{
    GridSpec g = GridSpec::square(5, 5.0);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> val(-90.0, -50.0);
    MapTensor m(g, {});
    for (auto& v : m.values)
        v = val(rng);

    CHECK(smooth_map(m, 1).values == m.values);

    MapTensor flat(g, {}, -70.0);
    for (double v : smooth_map(flat, 9).values)
        CHECK(v == doctest::Approx(-70.0).epsilon(1e-13));

    // Interior cell: its 9 nearest points are the 3x3 block around it.
    const auto s = smooth_map(m, 9);
    double acc = 0.0;
    for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj)
            acc += std::pow(10.0, m.at(2 + di, 2 + dj, 0) / 10.0);
    CHECK(s.at(2, 2, 0) == doctest::Approx(10.0 * std::log10(acc / 9.0)).epsilon(1e-12));

    CHECK_THROWS_AS(smooth_map(m, 26), std::invalid_argument);
    CHECK_THROWS_AS(smooth_map(m, 0), std::invalid_argument);
}

TEST_CASE("nearest cells break distance ties row-major")
{
    GridSpec g = GridSpec::square(5, 5.0);
    const auto c = nearest_cells(g, {2, 2}, 5);
    // Centre, then the four unit-distance neighbours in row-major order.
    CHECK(c == std::vector<std::size_t>{12, 7, 11, 13, 17});
}
