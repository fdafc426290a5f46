#include "radiomap/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace radiomap {

std::string to_string(BaselineMethod m)
{
    switch (m) {
    case BaselineMethod::knn: return "knn";
    case BaselineMethod::kriging: return "kriging";
    case BaselineMethod::nuclear_norm: return "nuclear_norm";
    }
    return "?";
}

BaselineMethod baseline_method_from_string(const std::string& s)
{
    std::string k = s;
    std::replace(k.begin(), k.end(), '-', '_');
    for (auto m : {BaselineMethod::knn, BaselineMethod::kriging, BaselineMethod::nuclear_norm})
        if (to_string(m) == k)
            return m;
    throw std::invalid_argument("unknown baseline method '" + s + "' (expected knn, kriging or nuclear-norm)");
}

void BaselineConfig::validate() const
{
    if (k < 1)
        throw std::invalid_argument("knn needs k >= 1");
    if (!(reg >= 0.0))
        throw std::invalid_argument("regularization weight must be non-negative");
    if (svt_max_iterations < 1)
        throw std::invalid_argument("svt needs at least one iteration");
    if (!(svt_step > 0.0) || !(svt_tolerance > 0.0))
        throw std::invalid_argument("svt step and tolerance must be positive");
}

MapTensor knn_estimate(const SampledMap& sampled, std::size_t k)
{
    if (k < 1)
        throw std::invalid_argument("knn needs k >= 1");
    if (sampled.omega.size() < k)
        throw std::invalid_argument("knn with k=" + std::to_string(k) + " needs at least k observed cells, got " +
                                    std::to_string(sampled.omega.size()));
    const GridSpec& g = sampled.grid;
    const std::size_t nf = sampled.n_f();
    MapTensor out(g, sampled.frequencies);
    std::vector<std::pair<double, std::size_t>> dist(sampled.omega.size());
    for (std::size_t i = 0; i < g.n_y; ++i)
        for (std::size_t j = 0; j < g.n_x; ++j) {
            const Point2 x = g.point(i, j);
            // omega is row-major sorted, so (distance, position) gives the row-major tie-break.
            for (std::size_t n = 0; n < sampled.omega.size(); ++n) {
                const Point2 y = g.point(sampled.omega[n]);
                const double dx = x.x - y.x, dy = x.y - y.y;
                dist[n] = {dx * dx + dy * dy, n};
            }
            std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(k), dist.end());
            for (std::size_t f = 0; f < nf; ++f) {
                double s = 0.0;
                for (std::size_t n = 0; n < k; ++n) {
                    const Cell c = sampled.omega[dist[n].second];
                    s += sampled.at(c.i, c.j, f);
                }
                out.at(i, j, f) = s / static_cast<double>(k);
            }
        }
    return out;
}

double auto_kernel_sigma(const GridSpec& grid, std::size_t omega_size)
{
    if (omega_size == 0)
        throw std::invalid_argument("automatic kernel width needs at least one observation");
    return 5.0 * std::sqrt(grid.extent_y() * grid.extent_x() / static_cast<double>(omega_size));
}

MapTensor kriging_estimate(const SampledMap& sampled, double reg, double sigma)
{
    const std::size_t n = sampled.omega.size();
    if (n == 0)
        throw std::invalid_argument("kriging needs at least one observed cell");
    if (!(reg >= 0.0))
        throw std::invalid_argument("kriging regularization must be non-negative");
    const GridSpec& g = sampled.grid;
    if (!(sigma > 0.0))
        sigma = auto_kernel_sigma(g, n);
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    const std::size_t nf = sampled.n_f();

    std::vector<Point2> pts(n);
    for (std::size_t a = 0; a < n; ++a)
        pts[a] = g.point(sampled.omega[a]);
    auto kern = [&](Point2 p, Point2 q) {
        const double dx = p.x - q.x, dy = p.y - q.y;
        return std::exp(-(dx * dx + dy * dy) * inv2s2);
    };
    Eigen::MatrixXd K(n, n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            K(a, b) = kern(pts[a], pts[b]);
    K.diagonal().array() += reg;

    Eigen::MatrixXd Y(n, nf);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t f = 0; f < nf; ++f)
            Y(a, f) = sampled.at(sampled.omega[a].i, sampled.omega[a].j, f);

    Eigen::MatrixXd alpha;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(K);
    const bool singular = ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0 ||
                          ldlt.rcond() < 1e-300;
    if (!singular) {
        alpha = ldlt.solve(Y);
    } else {
        if (reg == 0.0)
            throw std::runtime_error("kriging Gram matrix is singular with reg = 0; use a positive regularization");
        alpha = K.completeOrthogonalDecomposition().solve(Y);
    }
    if (!alpha.allFinite())
        throw std::runtime_error("kriging solve produced non-finite weights; increase the regularization");

    MapTensor out(g, sampled.frequencies);
    Eigen::RowVectorXd kx(n);
    for (std::size_t i = 0; i < g.n_y; ++i)
        for (std::size_t j = 0; j < g.n_x; ++j) {
            const Point2 x = g.point(i, j);
            for (std::size_t a = 0; a < n; ++a)
                kx(a) = kern(x, pts[a]);
            const Eigen::RowVectorXd v = kx * alpha;
            for (std::size_t f = 0; f < nf; ++f)
                out.at(i, j, f) = v(f);
        }
    return out;
}

Eigen::MatrixXd nuclear_norm_complete(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& M, double reg, double step,
                                      std::size_t max_iterations, double tolerance, SvtStatus* status)
{
    if (Y.rows() != M.rows() || Y.cols() != M.cols())
        throw std::invalid_argument("nuclear norm: observation and mask shapes differ");
    if (!(reg >= 0.0) || !(step > 0.0) || max_iterations < 1)
        throw std::invalid_argument("nuclear norm: invalid solver settings");
    const Eigen::MatrixXd PY = M.cwiseProduct(Y);
    auto objective = [&](const Eigen::MatrixXd& X, double nuc) {
        return 0.5 * M.cwiseProduct(X - Y).squaredNorm() + reg * nuc;
    };

    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(Y.rows(), Y.cols());
    double prev = objective(X, 0.0);
    SvtStatus st;
    for (std::size_t it = 0; it < max_iterations; ++it) {
        const Eigen::MatrixXd Z = X - step * (M.cwiseProduct(X) - PY);
        Eigen::BDCSVD<Eigen::MatrixXd> svd(Z, Eigen::ComputeThinU | Eigen::ComputeThinV);
        Eigen::VectorXd s = (svd.singularValues().array() - step * reg).max(0.0);
        const Eigen::MatrixXd Xn = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
        const double obj = objective(Xn, s.sum());
        // Proximal gradient with step <= 1/L never increases the objective.
        if (obj > prev + 1e-9 * std::max(1.0, std::abs(prev)))
            throw std::logic_error("nuclear norm: objective increased from " + std::to_string(prev) + " to " +
                                   std::to_string(obj) + " at iteration " + std::to_string(it));
        const double denom = std::max(X.norm(), 1e-12);
        const double change = (Xn - X).norm() / denom;
        X = Xn;
        prev = obj;
        st.objective.push_back(obj);
        st.iterations = it + 1;
        st.final_relative_change = change;
        if (change < tolerance || Xn.norm() == 0.0) {
            st.converged = true;
            break;
        }
    }
    if (status)
        *status = st;
    return X;
}

MapTensor nuclear_norm_estimate(const SampledMap& sampled, const BaselineConfig& cfg, SvtStatus* status)
{
    cfg.validate();
    const GridSpec& g = sampled.grid;
    const std::size_t nf = sampled.n_f();
    MapTensor out(g, sampled.frequencies);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(g.n_y, g.n_x);
    for (const Cell& c : sampled.omega)
        M(c.i, c.j) = 1.0;
    SvtStatus agg;
    agg.converged = true;
    for (std::size_t f = 0; f < nf; ++f) {
        double mu = 0.0;
        if (cfg.svt_center && !sampled.omega.empty()) {
            for (const Cell& c : sampled.omega)
                mu += sampled.at(c.i, c.j, f);
            mu /= static_cast<double>(sampled.omega.size());
        }
        Eigen::MatrixXd Y(g.n_y, g.n_x);
        for (std::size_t i = 0; i < g.n_y; ++i)
            for (std::size_t j = 0; j < g.n_x; ++j)
                Y(i, j) = sampled.at(i, j, f) - mu;
        SvtStatus st;
        const Eigen::MatrixXd X =
            nuclear_norm_complete(Y, M, cfg.reg, cfg.svt_step, cfg.svt_max_iterations, cfg.svt_tolerance, &st);
        for (std::size_t i = 0; i < g.n_y; ++i)
            for (std::size_t j = 0; j < g.n_x; ++j)
                out.at(i, j, f) = X(i, j) + mu;
        agg.converged = agg.converged && st.converged;
        agg.iterations = std::max(agg.iterations, st.iterations);
        agg.final_relative_change = std::max(agg.final_relative_change, st.final_relative_change);
        if (f == 0)
            agg.objective = st.objective;
    }
    if (status)
        *status = agg;
    return out;
}

MapTensor run_baseline(const SampledMap& sampled, const BaselineConfig& cfg)
{
    cfg.validate();
    switch (cfg.method) {
    case BaselineMethod::knn: return knn_estimate(sampled, cfg.k);
    case BaselineMethod::kriging: return kriging_estimate(sampled, cfg.reg, cfg.kernel_sigma);
    case BaselineMethod::nuclear_norm: return nuclear_norm_estimate(sampled, cfg);
    }
    throw std::logic_error("unreachable baseline method");
}

} // namespace radiomap
