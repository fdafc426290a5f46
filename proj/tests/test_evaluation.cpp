#include "support.hpp"

#include "radiomap/evaluation.hpp"

#include <fstream>

using namespace radiomap;

TEST_CASE("error metric")
{
    GridSpec g = GridSpec::square(2, 2.0);
    MapTensor a(g, {}, -60.0), b(g, {}, -60.0);
    CHECK(rmse(a, b) == 0.0);
    b.values = {-58.0, -60.0, -60.0, -62.0};
    CHECK(squared_error_mean(a, b) == doctest::Approx(2.0));
    CHECK(rmse(a, b) == doctest::Approx(std::sqrt(2.0)));

    const auto s = summarize_trials({1.0, 4.0, 7.0});
    CHECK(s.rmse == doctest::Approx(2.0));
    // se(MSE) = sd / sqrt(3) with sample sd 3
    CHECK(s.stderr_rmse == doctest::Approx(std::sqrt(3.0) / 4.0));
    CHECK(summarize_trials({5.0}).stderr_rmse == 0.0);
}

TEST_CASE("pgm encoding")
{
    const auto bytes = encode_pgm(3, 1, {-110.0, -40.0, -500.0}, -110.0, -40.0);
    const std::string text(bytes.begin(), bytes.end());
    const std::string header = "P5\n# dB window [-110, -40]\n3 1\n255\n";
    REQUIRE(text.size() == header.size() + 3);
    CHECK(text.substr(0, header.size()) == header);
    CHECK(bytes[header.size() + 0] == 1);
    CHECK(bytes[header.size() + 1] == 255);
    CHECK(bytes[header.size() + 2] == 1); // clipped
    const std::vector<double> vis{1.0, 0.0, 1.0};
    CHECK(encode_pgm(3, 1, {-75.0, -75.0, -75.0}, -110.0, -40.0, &vis)[header.size() + 1] == 0);
}

TEST_CASE("sweep")
{
    ExperimentConfig cfg;
    cfg.data.grid = GridSpec::square(8, 40.0);
    cfg.data.channel.mode = PropagationMode::pathloss_only;
    cfg.data.omega_min = cfg.data.omega_max = 10;
    cfg.values = {5, 20};
    cfg.trials = 3;
    cfg.seed = 4;
    cfg.output_dir = testing::temp_dir("sweep");

    BaselineConfig knn;
    knn.k = 3;
    const auto rows = sweep(cfg, {oracle_estimator(), baseline_estimator("knn", knn)});
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].estimator == "true_map");
    CHECK(rows[0].rmse_db == 0.0);
    CHECK(rows[0].stderr_db == 0.0);
    CHECK(rows[1].estimator == "knn");
    CHECK(rows[1].trials == 3);
    CHECK(rows[3].rmse_db < rows[1].rmse_db);

    CHECK(std::filesystem::exists(cfg.output_dir / "sweep.csv"));
    CHECK(std::filesystem::exists(cfg.output_dir / "omega_size_5_true.pgm"));
    CHECK(std::filesystem::exists(cfg.output_dir / "omega_size_20_knn.pgm"));

    const std::string csv = sweep_csv(rows);
    CHECK(csv.rfind("sweep_variable,sweep_value,estimator,trials,rmse_db,stderr_db\n", 0) == 0);

    cfg.threads = 3;
    cfg.output_dir.clear();
    const auto again = sweep(cfg, {oracle_estimator(), baseline_estimator("knn", knn)});
    for (std::size_t k = 0; k < rows.size(); ++k)
        CHECK(again[k].rmse_db == rows[k].rmse_db);

    ExperimentConfig bad = cfg;
    bad.values = {1000};
    CHECK_THROWS(sweep(bad, {oracle_estimator()}));
}

TEST_CASE("code statistics and probes")
{
    const std::vector<std::vector<double>> codes{{1.0, 0.0}, {3.0, 0.0}, {2.0, 1.0}, {2.0, -1.0}};
    const auto st = code_statistics(codes);
    CHECK(st.mean(0) == doctest::Approx(2.0));
    CHECK(st.mean(1) == doctest::Approx(0.0));
    CHECK(st.covariance(0, 0) == doctest::Approx(0.5));
    CHECK(st.covariance(1, 1) == doctest::Approx(0.5));
    CHECK(st.covariance(0, 1) == doctest::Approx(0.0));
    CHECK(st.std(0) == doctest::Approx(std::sqrt(0.5)));
    CHECK(st.eigenvalues(0) >= st.eigenvalues(1));

    LatentProbe p;
    CHECK(probe_code(st, p) == std::vector<double>{2.0, 0.0});

    p.kind = ProbeKind::std_perturbation;
    p.subset = {2};
    const auto a = probe_code(st, p);
    CHECK(a[0] == doctest::Approx(2.0));
    CHECK(a[1] == doctest::Approx(-std::sqrt(0.5)));

    p.kind = ProbeKind::eigen_perturbation;
    p.alpha = 2.0;
    p.eigen_index = 1;
    const auto e = probe_code(st, p);
    const Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(e.data(), 2) - st.mean;
    CHECK(d.norm() == doctest::Approx(2.0));
    p.eigen_index = 3;
    CHECK_THROWS_AS(probe_code(st, p), std::out_of_range);
}
