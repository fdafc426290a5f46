#include "support.hpp"

#include "radiomap/baselines.hpp"
#include "radiomap/propagation.hpp"

using namespace radiomap;

namespace {

SampledMap random_sampled(std::size_t n, std::size_t count, std::uint64_t seed)
{
    GridSpec g = GridSpec::square(n, static_cast<double>(n));
    MapTensor m(g, {});
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-90.0, -50.0);
    for (auto& v : m.values)
        v = u(rng);
    return sample_map(m, count, 0.0, {}, seed);
}

} // namespace

TEST_CASE("knn against a full sort")
{
    const SampledMap s = random_sampled(9, 17, 3);
    const GridSpec& g = s.grid;
    for (std::size_t k : {1u, 4u, 17u}) {
        const MapTensor est = knn_estimate(s, k);
        for (std::size_t i = 0; i < g.n_y; ++i)
            for (std::size_t j = 0; j < g.n_x; ++j) {
                std::vector<std::tuple<double, std::size_t, std::size_t, double>> all;
                for (const Cell& c : s.omega) {
                    const double d = distance(g.point(i, j), g.point(c));
                    all.emplace_back(d * d, c.i, c.j, s.at(c.i, c.j, 0));
                }
                std::sort(all.begin(), all.end());
                double acc = 0.0;
                for (std::size_t n = 0; n < k; ++n)
                    acc += std::get<3>(all[n]);
                CHECK(est.at(i, j, 0) == doctest::Approx(acc / static_cast<double>(k)).epsilon(1e-12));
            }
    }
    CHECK_THROWS_AS(knn_estimate(s, 18), std::invalid_argument);
}

TEST_CASE("knn with k=1 reproduces observed cells")
{
    const SampledMap s = random_sampled(6, 10, 4);
    const MapTensor est = knn_estimate(s, 1);
    for (const Cell& c : s.omega)
        CHECK(est.at(c.i, c.j, 0) == s.at(c.i, c.j, 0));
}

TEST_CASE("kriging against a direct solve")
{
    const SampledMap s = random_sampled(8, 12, 5);
    const double sigma = 1.5, reg = 1e-3;
    const std::size_t n = s.omega.size();
    Eigen::MatrixXd K(n, n);
    Eigen::VectorXd y(n);
    for (std::size_t a = 0; a < n; ++a) {
        y(a) = s.at(s.omega[a].i, s.omega[a].j, 0);
        for (std::size_t b = 0; b < n; ++b) {
            const double d = distance(s.grid.point(s.omega[a]), s.grid.point(s.omega[b]));
            K(a, b) = std::exp(-d * d / (2 * sigma * sigma)) + (a == b ? reg : 0.0);
        }
    }
    const Eigen::VectorXd w = K.fullPivLu().solve(y);
    const MapTensor est = kriging_estimate(s, reg, sigma);
    for (std::size_t c = 0; c < s.grid.cell_count(); ++c) {
        const Point2 p = s.grid.point(s.grid.cell(c));
        double v = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
            const double d = distance(p, s.grid.point(s.omega[a]));
            v += std::exp(-d * d / (2 * sigma * sigma)) * w(a);
        }
        CHECK(est.values[c] == doctest::Approx(v).epsilon(1e-9));
    }
}

TEST_CASE("kriging interpolates as the regularization vanishes")
{
    const SampledMap s = random_sampled(10, 15, 6);
    const MapTensor est = kriging_estimate(s, 1e-12, 1.0);
    for (const Cell& c : s.omega)
        CHECK(est.at(c.i, c.j, 0) == doctest::Approx(s.at(c.i, c.j, 0)).epsilon(1e-6));
}

TEST_CASE("automatic kernel width")
{
    CHECK(auto_kernel_sigma(GridSpec::square(32, 100.0), 100) == doctest::Approx(5.0 * 10.0));
}

TEST_CASE("nuclear norm completion")
{
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    Eigen::MatrixXd u(12, 1), v(10, 1);
    for (auto& x : u.reshaped())
        x = g(rng);
    for (auto& x : v.reshaped())
        x = g(rng);
    const Eigen::MatrixXd Y = u * v.transpose();

    SUBCASE("full observation and tiny regularization return the data")
    {
        const Eigen::MatrixXd M = Eigen::MatrixXd::Ones(12, 10);
        SvtStatus st;
        const auto X = nuclear_norm_complete(Y, M, 1e-9, 1.0, 100, 1e-12, &st);
        CHECK((X - Y).cwiseAbs().maxCoeff() < 1e-6);
    }
    SUBCASE("objective never increases and the rank-one matrix is recovered")
    {
        Eigen::MatrixXd M(12, 10);
        std::bernoulli_distribution keep(0.6);
        for (auto& x : M.reshaped())
            x = keep(rng) ? 1.0 : 0.0;
        SvtStatus st;
        const auto X = nuclear_norm_complete(Y.cwiseProduct(M), M, 1e-3, 1.0, 50000, 1e-9, &st);
        CHECK(st.converged);
        for (std::size_t k = 1; k < st.objective.size(); ++k)
            CHECK(st.objective[k] <= st.objective[k - 1] + 1e-12);
        CHECK((X - Y).norm() / Y.norm() < 1e-2);
    }
    SUBCASE("a large regularization shrinks everything to zero")
    {
        const Eigen::MatrixXd M = Eigen::MatrixXd::Ones(12, 10);
        const auto X = nuclear_norm_complete(Y, M, 1e6, 1.0, 10, 1e-9);
        CHECK(X.isZero());
    }
}

TEST_CASE("centered nuclear-norm completion")
{
    // A constant map is rank one; around its mean it is zero, so the centered solver returns it exactly.
    GridSpec g = GridSpec::square(10, 10.0);
    MapTensor m(g, {}, -72.5);
    const SampledMap s = sample_map(m, 30, 0.0, {}, 3);
    BaselineConfig c;
    c.method = BaselineMethod::nuclear_norm;
    c.svt_center = true;
    const MapTensor est = run_baseline(s, c);
    for (double v : est.values)
        CHECK(v == doctest::Approx(-72.5).epsilon(1e-12));
    c.svt_center = false;
    const MapTensor raw = run_baseline(s, c);
    CHECK(raw.at(s.omega[0].i, s.omega[0].j, 0) == doctest::Approx(-72.5).epsilon(1e-3));
}

TEST_CASE("baseline configuration")
{
    BaselineConfig c;
    c.k = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    CHECK(baseline_method_from_string("nuclear_norm") == BaselineMethod::nuclear_norm);
    CHECK_THROWS_AS(kriging_estimate(random_sampled(4, 0, 1), 1e-5, 1.0), std::invalid_argument);
}
