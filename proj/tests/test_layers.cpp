#include "support.hpp"

#include "radiomap/layers.hpp"

using namespace radiomap;

namespace {

// Direct evaluation of the same-padded convolution (sign -1) or its adjoint (sign +1).
Tensor<double> naive_conv(const Tensor<double>& x, Conv2d<double>& L, int sign)
{
    const int k = static_cast<int>(L.kernel_size() / 2);
    Tensor<double> y(x.n, x.h, x.w, L.out_channels());
    for (std::size_t b = 0; b < x.n; ++b)
        for (std::size_t i = 0; i < x.h; ++i)
            for (std::size_t j = 0; j < x.w; ++j)
                for (std::size_t co = 0; co < L.out_channels(); ++co) {
                    double acc = L.bias_data()[co];
                    for (int u = -k; u <= k; ++u)
                        for (int v = -k; v <= k; ++v) {
                            const long ii = static_cast<long>(i) + sign * u, jj = static_cast<long>(j) + sign * v;
                            if (ii < 0 || jj < 0 || ii >= static_cast<long>(x.h) || jj >= static_cast<long>(x.w))
                                continue;
                            for (std::size_t ci = 0; ci < x.c; ++ci)
                                acc += L.kernel(u, v, ci, co) *
                                       x(b, static_cast<std::size_t>(ii), static_cast<std::size_t>(jj), ci);
                        }
                    y(b, i, j, co) = acc;
                }
    return y;
}

double weighted_sum(const Tensor<double>& y, const Tensor<double>& r)
{
    double s = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k)
        s += y.data[k] * r.data[k];
    return s;
}

// Central differences of sum(r * layer(x)) against backward(r), for the input and all parameters.
void check_gradients(Layer<double>& L, Tensor<double> x, std::mt19937_64& rng, double tol = 1e-6)
{
    const Tensor<double> y = L.forward_train(x);
    const Tensor<double> r = testing::random_tensor<double>(y.n, y.h, y.w, y.c, rng);
    L.zero_grad();
    const Tensor<double> dx = L.backward(r);
    REQUIRE(dx.same_shape(x));
    const double h = 1e-6;

    for (std::size_t k = 0; k < x.size(); ++k) {
        const double keep = x.data[k];
        x.data[k] = keep + h;
        const double up = weighted_sum(L.forward(x), r);
        x.data[k] = keep - h;
        const double dn = weighted_sum(L.forward(x), r);
        x.data[k] = keep;
        CHECK(dx.data[k] == doctest::Approx((up - dn) / (2 * h)).epsilon(tol).scale(1.0));
    }
    for (auto& p : L.params())
        for (std::size_t k = 0; k < p.value->size(); ++k) {
            auto& v = (*p.value)[k];
            const double keep = v;
            v = keep + h;
            const double up = weighted_sum(L.forward(x), r);
            v = keep - h;
            const double dn = weighted_sum(L.forward(x), r);
            v = keep;
            CHECK((*p.grad)[k] == doctest::Approx((up - dn) / (2 * h)).epsilon(tol).scale(1.0));
        }
}

void randomize(Layer<double>& L, std::mt19937_64& rng)
{
    std::normal_distribution<double> g(0.0, 0.5);
    for (auto& p : L.params())
        for (auto& v : *p.value)
            v = g(rng);
}

} // namespace

TEST_CASE("identity kernel reproduces the input")
{
    std::mt19937_64 rng(1);
    Conv2d<double> L(3, 1, 1, false);
    L.kernel(0, 0, 0, 0) = 1.0;
    const auto x = testing::random_tensor<double>(2, 5, 6, 1, rng);
    CHECK(L.forward(x).data == x.data);
}

TEST_CASE("all-ones 3x3 kernel sums the neighborhood")
{
    Conv2d<double> L(3, 1, 1, false);
    for (int u = -1; u <= 1; ++u)
        for (int v = -1; v <= 1; ++v)
            L.kernel(u, v, 0, 0) = 1.0;
    const Tensor<double> x(1, 4, 4, 1, 1.0);
    const auto y = L.forward(x);
    CHECK(y(0, 1, 1, 0) == 9.0);
    CHECK(y(0, 0, 0, 0) == 4.0); // corner sees four in-grid cells
    CHECK(y(0, 0, 2, 0) == 6.0);
}

TEST_CASE("convolution matches direct evaluation")
{
    std::mt19937_64 rng(2);
    for (bool transpose : {false, true})
        for (std::size_t K : {1u, 3u, 5u}) {
            Conv2d<double> L(K, 3, 4, transpose);
            randomize(L, rng);
            const auto x = testing::random_tensor<double>(2, 6, 5, 3, rng);
            const auto y = L.forward(x);
            const auto ref = naive_conv(x, L, transpose ? 1 : -1);
            CHECK(testing::max_abs_diff(y.data, ref.data) < 1e-12);
        }
}

TEST_CASE("transpose convolution is the adjoint")
{
    std::mt19937_64 rng(3);
    Conv2d<double> A(3, 2, 3, false), At(3, 3, 2, true);
    randomize(A, rng);
    std::fill(A.bias_data().begin(), A.bias_data().end(), 0.0);
    for (int u = -1; u <= 1; ++u)
        for (int v = -1; v <= 1; ++v)
            for (std::size_t ci = 0; ci < 2; ++ci)
                for (std::size_t co = 0; co < 3; ++co)
                    At.kernel(u, v, co, ci) = A.kernel(u, v, ci, co);
    const auto x = testing::random_tensor<double>(1, 5, 5, 2, rng);
    const auto y = testing::random_tensor<double>(1, 5, 5, 3, rng);
    CHECK(weighted_sum(A.forward(x), y) == doctest::Approx(weighted_sum(At.forward(y), x)).epsilon(1e-12));
}

TEST_CASE("shift equivariance away from borders")
{
    std::mt19937_64 rng(4);
    Conv2d<double> L(3, 1, 2, false);
    randomize(L, rng);
    Tensor<double> x(1, 9, 9, 1), xs(1, 9, 9, 1);
    for (std::size_t i = 2; i < 5; ++i)
        for (std::size_t j = 2; j < 5; ++j) {
            x(0, i, j, 0) = static_cast<double>(i * 7 + j);
            xs(0, i + 2, j + 1, 0) = x(0, i, j, 0);
        }
    const auto y = L.forward(x), ys = L.forward(xs);
    for (std::size_t i = 1; i < 6; ++i)
        for (std::size_t j = 1; j < 6; ++j)
            for (std::size_t c = 0; c < 2; ++c)
                CHECK(ys(0, i + 2, j + 1, c) == doctest::Approx(y(0, i, j, c)).epsilon(1e-12));
}

TEST_CASE("pooling and up-sampling examples")
{
    Tensor<double> x(1, 2, 2, 1);
    x.data = {1.0, 2.0, 3.0, 4.0};
    AvgPool2<double> pool;
    CHECK(pool.forward(x).data == std::vector<double>{2.5});
    CHECK_THROWS_AS(pool.forward(Tensor<double>(1, 3, 2, 1)), std::invalid_argument);

    BilinearUpsample2<double> up;
    Tensor<double> ramp(1, 1, 2, 1);
    ramp.data = {0.0, 1.0};
    const auto r = up.forward(ramp);
    REQUIRE(r.w == 4);
    CHECK(r(0, 0, 0, 0) == doctest::Approx(0.0));
    CHECK(r(0, 0, 1, 0) == doctest::Approx(1.0 / 3.0));
    CHECK(r(0, 0, 2, 0) == doctest::Approx(2.0 / 3.0));
    CHECK(r(0, 0, 3, 0) == doctest::Approx(1.0));
    CHECK(r(0, 1, 2, 0) == r(0, 0, 2, 0));

    Tensor<double> c(1, 3, 3, 2, -4.5);
    CHECK(std::all_of(up.forward(c).data.begin(), up.forward(c).data.end(), [](double v) { return v == -4.5; }));
}

TEST_CASE("rectifiers")
{
    Tensor<double> x(1, 1, 2, 2);
    x.data = {-2.0, 3.0, 1.0, -1.0};
    LeakyRectifier<double> p(2, 0.25, true);
    p.leak_data()[1] = 0.5;
    CHECK(p.forward(x).data == std::vector<double>{-0.5, 3.0, 1.0, -0.5});
    CHECK(p.params().size() == 1);
    LeakyRectifier<double> l(2, 0.1, false);
    CHECK(l.params().empty());
    CHECK(l.kind() == LayerKind::leaky_relu);
}

TEST_CASE("finite-difference gradients")
{
    std::mt19937_64 rng(5);
    SUBCASE("conv")
    {
        Conv2d<double> L(3, 2, 3, false);
        randomize(L, rng);
        check_gradients(L, testing::random_tensor<double>(2, 4, 5, 2, rng), rng);
    }
    SUBCASE("conv transpose")
    {
        Conv2d<double> L(3, 3, 2, true);
        randomize(L, rng);
        check_gradients(L, testing::random_tensor<double>(1, 4, 4, 3, rng), rng);
    }
    SUBCASE("1x1 conv")
    {
        Conv2d<double> L(1, 3, 2, false);
        randomize(L, rng);
        check_gradients(L, testing::random_tensor<double>(2, 2, 3, 3, rng), rng);
    }
    SUBCASE("prelu, including the leak")
    {
        LeakyRectifier<double> L(3, 0.25, true);
        check_gradients(L, testing::random_tensor<double>(2, 3, 3, 3, rng), rng);
    }
    SUBCASE("pool")
    {
        AvgPool2<double> L;
        check_gradients(L, testing::random_tensor<double>(2, 4, 6, 2, rng), rng);
    }
    SUBCASE("upsample")
    {
        BilinearUpsample2<double> L;
        check_gradients(L, testing::random_tensor<double>(2, 3, 2, 2, rng), rng);
    }
    SUBCASE("dense")
    {
        Dense<double> L({2, 2, 3}, {1, 1, 4});
        randomize(L, rng);
        check_gradients(L, testing::random_tensor<double>(3, 2, 2, 3, rng), rng);
    }
    SUBCASE("output scale")
    {
        OutputScale<double> L(-70.0, 20.0);
        check_gradients(L, testing::random_tensor<double>(1, 2, 2, 2, rng), rng);
    }
    SUBCASE("dB conversions and basis expansion")
    {
        DbToLinear<double> a;
        check_gradients(a, testing::random_tensor<double>(1, 2, 2, 3, rng, -3.0, 3.0), rng);
        LinearToDb<double> b;
        check_gradients(b, testing::random_tensor<double>(1, 2, 2, 3, rng, 0.5, 2.0), rng);
        Eigen::MatrixXd beta(3, 4);
        beta.setRandom();
        BemLayer<double> c(beta);
        check_gradients(c, testing::random_tensor<double>(2, 2, 2, 3, rng), rng);
    }
}

TEST_CASE("fixed layers")
{
    Tensor<double> x(1, 1, 3, 2);
    x.data = {-50.0, 1.0, -90.0, 0.0, -70.0, -1.0};
    InputNorm<double> n(1, -70.0, 20.0);
    CHECK(n.forward(x).data == std::vector<double>{1.0, 1.0, 0.0, 0.0, 0.0, -1.0});

    LinearToDb<double> db;
    Tensor<double> z(1, 1, 1, 2);
    z.data = {0.0, 100.0};
    CHECK(db.forward(z).data == std::vector<double>{-200.0, 20.0});

    Eigen::MatrixXd beta(2, 3);
    beta << 1, 2, 3, 4, 5, 6;
    BemLayer<double> bem(beta);
    Tensor<double> p(1, 1, 1, 2);
    p.data = {1.0, 10.0};
    CHECK(bem.forward(p).data == std::vector<double>{41.0, 52.0, 63.0});
    CHECK(bem.params().empty());
}

TEST_CASE("backward without a cached pass is an error")
{
    Conv2d<double> L(3, 1, 1, false);
    CHECK_THROWS_AS(L.backward(Tensor<double>(1, 2, 2, 1)), std::logic_error);
    L.forward_train(Tensor<double>(1, 2, 2, 1));
    L.clear_cache();
    CHECK_THROWS_AS(L.backward(Tensor<double>(1, 2, 2, 1)), std::logic_error);
}
