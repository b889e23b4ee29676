#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "glue/baselines.hpp"
#include "glue/dataset.hpp"
#include "glue/error.hpp"
#include "glue/linalg.hpp"
#include "glue/rng.hpp"
#include "test_support.hpp"

using namespace glue;

namespace {

TimeSeriesDataset dataset_from(Matrix values) {
    TimeSeriesDataset ds;
    ds.values = std::move(values);
    for (std::size_t j = 0; j < ds.values.cols(); ++j)
        ds.sensor_names.push_back("s" + std::to_string(j));
    ds.trajectory_starts = {0};
    ds.norm_stats.assign(ds.values.cols(), NormStat{});
    ds.validate();
    return ds;
}

// Independent dense solver for the normal-equations oracle: plain Gaussian
// elimination with partial pivoting, no shared code with cholesky_solve.
std::vector<double> gauss_solve(Matrix a, std::vector<double> b) {
    const std::size_t n = a.rows();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
        for (std::size_t c = 0; c < n; ++c) std::swap(a(col, c), a(pivot, c));
        std::swap(b[col], b[pivot]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            for (std::size_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t c = i + 1; c < n; ++c) acc -= a(i, c) * x[c];
        x[i] = acc / a(i, i);
    }
    return x;
}

}  // namespace

TEST_CASE("baseline kind names round-trip") {
    for (auto k : {BaselineKind::pca, BaselineKind::knn, BaselineKind::ae, BaselineKind::var})
        CHECK(baseline_kind_from_string(to_string(k)) == k);
    CHECK_THROWS_AS(baseline_kind_from_string("svm"), ConfigError);
}

TEST_CASE("window flattening conventions") {
    // 2 sensors, w = 3, values laid out so every cell is identifiable:
    // sensor s at time t holds 10*s + t.
    Matrix v(6, 2);
    for (std::size_t t = 0; t < 6; ++t)
        for (std::size_t s = 0; s < 2; ++s) v(t, s) = 10.0 * static_cast<double>(s) +
                                                      static_cast<double>(t);
    const TimeSeriesDataset ds = dataset_from(std::move(v));
    const WindowSet windows = make_windows(ds, 3);
    const WindowBatch batch = windows.all();
    REQUIRE(batch.size() == 3);  // targets at t = 3, 4, 5

    SUBCASE("reconstruction rows cover the window ending at the target") {
        const Matrix rows = reconstruction_rows(batch);
        REQUIRE(rows.rows() == 3);
        REQUIRE(rows.cols() == 6);
        // First element targets t=3: sensor 0 -> (1, 2, 3), sensor 1 -> (11, 12, 13).
        const std::vector<double> want = {1, 2, 3, 11, 12, 13};
        for (std::size_t j = 0; j < 6; ++j) CHECK(rows(0, j) == want[j]);
    }
    SUBCASE("design rows are intercept then lag-major blocks") {
        const Matrix design = regression_design(batch);
        REQUIRE(design.rows() == 3);
        REQUIRE(design.cols() == 7);
        // Element 0 targets t=3: lag1 = t=2 (both sensors), lag2 = t=1, lag3 = t=0.
        const std::vector<double> want = {1, 2, 12, 1, 11, 0, 10};
        for (std::size_t j = 0; j < 7; ++j) CHECK(design(0, j) == want[j]);
    }
}

TEST_CASE("pca_fit") {
    SUBCASE("2-D points on a line: first axis along it, zero residual") {
        Matrix rows(8, 2);
        for (std::size_t i = 0; i < 8; ++i) {
            const double t = static_cast<double>(i) - 3.5;
            rows(i, 0) = 3.0 * t;
            rows(i, 1) = 4.0 * t;
        }
        const PcaModel model = pca_fit(rows, 1);
        CHECK(std::abs(model.axes(0, 0)) == doctest::Approx(0.6).epsilon(1e-10));
        CHECK(std::abs(model.axes(1, 0)) == doctest::Approx(0.8).epsilon(1e-10));
        CHECK(model.axes(1, 0) > 0.0);  // sign rule: largest coordinate positive
        for (std::size_t i = 0; i < 8; ++i)
            CHECK(pca_score(model, rows.row_span(i)) == doctest::Approx(0.0).epsilon(1e-18));
    }
    SUBCASE("full rank reconstructs every training row") {
        Rng rng(15);
        const Matrix rows = testsup::random_matrix(rng, 12, 4);
        const PcaModel model = pca_fit(rows, 4);
        for (std::size_t i = 0; i < 12; ++i)
            CHECK(pca_score(model, rows.row_span(i)) < 1e-18);
    }
    SUBCASE("axes satisfy the eigen property of the covariance") {
        Rng rng(23);
        const Matrix rows = testsup::random_matrix(rng, 11, 3);
        const Matrix cov = covariance(rows);
        const PcaModel model = pca_fit(rows, 3);
        for (std::size_t c = 0; c < 3; ++c) {
            double norm_sq = 0.0;
            for (std::size_t r = 0; r < 3; ++r) {
                double cv = 0.0;  // (C v)_r
                for (std::size_t j = 0; j < 3; ++j) cv += cov(r, j) * model.axes(j, c);
                CHECK(cv == doctest::Approx(model.variances[c] * model.axes(r, c))
                                .epsilon(1e-8)
                                .scale(1.0));
                norm_sq += model.axes(r, c) * model.axes(r, c);
            }
            CHECK(norm_sq == doctest::Approx(1.0).epsilon(1e-10));
        }
        CHECK(std::is_sorted(model.variances.rbegin(), model.variances.rend()));
    }
    SUBCASE("automatic component count meets the variance target") {
        // Independent axes with std 10, 3, 0.1: one component explains ~92%,
        // two explain ~99.99%.
        Rng rng(7);
        Matrix rows(400, 3);
        for (std::size_t i = 0; i < rows.rows(); ++i) {
            rows(i, 0) = 10.0 * rng.gaussian();
            rows(i, 1) = 3.0 * rng.gaussian();
            rows(i, 2) = 0.1 * rng.gaussian();
        }
        const PcaModel model = pca_fit(rows);  // default: >= 95%
        CHECK(model.n_components() == 2);
        double top2 = model.variances[0] + model.variances[1];
        double total = top2 + model.variances[2];
        CHECK(top2 >= 0.95 * total);
    }
    SUBCASE("identical rows are degenerate") {
        Matrix rows(6, 3, 2.5);
        CHECK_THROWS_AS(pca_fit(rows, 1), NumericError);
    }
    SUBCASE("component count cannot exceed the dimension") {
        Rng rng(3);
        CHECK_THROWS_AS(pca_fit(testsup::random_matrix(rng, 5, 3), 4), ConfigError);
    }
}

TEST_CASE("pca_score geometry") {
    // Hand-built model: axes e0, e1 in R^3, zero mean.
    PcaModel model;
    model.mean = {0.0, 0.0, 0.0};
    model.axes = Matrix(3, 2);
    model.axes(0, 0) = 1.0;
    model.axes(1, 1) = 1.0;
    model.variances = {2.0, 1.0, 0.5};

    SUBCASE("in-span point scores zero") {
        CHECK(pca_score(model, std::vector<double>{3.0, -2.0, 0.0}) == 0.0);
    }
    SUBCASE("orthogonal unit vector scores one") {
        CHECK(pca_score(model, std::vector<double>{0.0, 0.0, 1.0}) == 1.0);
    }
    SUBCASE("random case matches the projector oracle") {
        Rng rng(19);
        const Matrix rows = testsup::random_matrix(rng, 30, 4);
        const PcaModel fitted = pca_fit(rows, 2);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> x(4);
            for (auto& v : x) v = rng.gaussian();
            // Oracle: residual = (I - A A^T)(x - mean), computed densely.
            std::vector<double> c(4);
            for (std::size_t i = 0; i < 4; ++i) c[i] = x[i] - fitted.mean[i];
            double want = 0.0;
            for (std::size_t r = 0; r < 4; ++r) {
                double proj = 0.0;
                for (std::size_t k = 0; k < 2; ++k) {
                    double coord = 0.0;
                    for (std::size_t j = 0; j < 4; ++j) coord += fitted.axes(j, k) * c[j];
                    proj += fitted.axes(r, k) * coord;
                }
                const double resid = c[r] - proj;
                want += resid * resid;
            }
            CHECK(pca_score(fitted, x) == doctest::Approx(want).epsilon(1e-12));
        }
    }
    SUBCASE("reconstruction error is non-increasing in the component count") {
        Rng rng(29);
        const Matrix rows = testsup::random_matrix(rng, 40, 5);
        std::vector<double> x(5);
        for (auto& v : x) v = rng.gaussian();
        double prev = std::numeric_limits<double>::infinity();
        for (std::size_t m = 1; m <= 5; ++m) {
            const double err = pca_score(pca_fit(rows, m), x);
            CHECK(err <= prev + 1e-12);
            prev = err;
        }
    }
}

TEST_CASE("knn_score") {
    SUBCASE("query equal to a training point, k=1") {
        Matrix train(3, 2);
        train(0, 0) = 1.0; train(0, 1) = 2.0;
        train(1, 0) = -5.0; train(1, 1) = 0.0;
        train(2, 0) = 4.0; train(2, 1) = 4.0;
        CHECK(knn_score(train, std::vector<double>{-5.0, 0.0}, 1) == 0.0);
    }
    SUBCASE("1-D anchor: train {0, 10}, query 1, k=2 gives 10") {
        Matrix train(2, 1);
        train(1, 0) = 10.0;
        CHECK(knn_score(train, std::vector<double>{1.0}, 2) == 10.0);
    }
    SUBCASE("matches an exhaustive-scan oracle") {
        Rng rng(47);
        const Matrix train = testsup::random_matrix(rng, 25, 3);
        for (int trial = 0; trial < 30; ++trial) {
            std::vector<double> q(3);
            for (auto& v : q) v = rng.gaussian();
            std::vector<double> dist;
            for (std::size_t i = 0; i < train.rows(); ++i) {
                double sq = 0.0;
                for (std::size_t j = 0; j < 3; ++j)
                    sq += (train(i, j) - q[j]) * (train(i, j) - q[j]);
                dist.push_back(std::sqrt(sq));
            }
            std::sort(dist.begin(), dist.end());
            const std::size_t k = 1 + static_cast<std::size_t>(rng.below(25));
            double want = 0.0;
            for (std::size_t i = 0; i < k; ++i) want += dist[i];
            CHECK(knn_score(train, q, k) == want);
        }
    }
    SUBCASE("invariant to the training set order, bitwise") {
        Rng rng(53);
        Matrix train = testsup::random_matrix(rng, 20, 4);
        std::vector<double> q(4);
        for (auto& v : q) v = rng.gaussian();
        const double base = knn_score(train, q, 5);

        const std::vector<std::size_t> perm = rng.permutation(20);
        Matrix shuffled(20, 4);
        for (std::size_t i = 0; i < 20; ++i)
            for (std::size_t j = 0; j < 4; ++j) shuffled(i, j) = train(perm[i], j);
        CHECK(knn_score(shuffled, q, 5) == base);
    }
    SUBCASE("k bounds") {
        Matrix train(2, 1);
        const std::vector<double> q = {0.0};
        CHECK_THROWS_AS(knn_score(train, q, 0), ConfigError);
        CHECK_THROWS_AS(knn_score(train, q, 3), ConfigError);
    }
}

TEST_CASE("autoencoder") {
    // Rank-2 data in R^6 with an offset: well within reach of a bottleneck
    // of 3 and the default hidden width.
    auto make_rows = [](std::uint64_t seed, std::size_t count) {
        Rng rng(seed);
        Matrix rows(count, 6);
        for (std::size_t i = 0; i < count; ++i) {
            const double a = rng.gaussian(), b = rng.gaussian();
            for (std::size_t j = 0; j < 6; ++j) {
                const double phase = static_cast<double>(j) * 0.9;
                rows(i, j) = 0.3 + a * std::sin(phase) * 0.5 + b * std::cos(phase) * 0.5;
            }
        }
        return rows;
    };

    SUBCASE("untrained model is deterministic for a fixed seed") {
        const Matrix rows = make_rows(1, 10);
        AeConfig cfg;
        cfg.epochs = 0;
        const AeModel a = ae_fit(rows, cfg);
        const AeModel b = ae_fit(rows, cfg);
        REQUIRE(a.blocks.size() == b.blocks.size());
        for (std::size_t i = 0; i < a.blocks.size(); ++i)
            for (std::size_t j = 0; j < a.blocks[i].value.size(); ++j)
                CHECK(a.blocks[i].value[j] == b.blocks[i].value[j]);
        CHECK(a.bottleneck == 2);  // ceil(6 / 4)
        CHECK(a.hidden == 4);      // ceil((6 + 2) / 2)
    }
    SUBCASE("training drives the reconstruction error below 1e-2") {
        const Matrix rows = make_rows(2, 120);
        AeConfig cfg;
        cfg.bottleneck = 3;
        cfg.epochs = 400;
        cfg.lr = 3e-3;
        cfg.seed = 4;
        const AeModel model = ae_fit(rows, cfg);
        const std::vector<double> scores = ae_scores(model, rows);
        double mean = 0.0;
        for (double s : scores) mean += s;
        mean /= static_cast<double>(scores.size()) * 6.0;  // per-entry MSE
        CHECK(mean < 1e-2);
    }
    SUBCASE("out-of-distribution points score higher than in-distribution ones") {
        const Matrix rows = make_rows(3, 120);
        AeConfig cfg;
        cfg.bottleneck = 3;
        cfg.epochs = 200;
        cfg.lr = 3e-3;
        const AeModel model = ae_fit(rows, cfg);

        const Matrix fresh = make_rows(99, 20);
        double in_dist = 0.0, far_out = 0.0;
        for (std::size_t i = 0; i < fresh.rows(); ++i) {
            std::vector<double> x(fresh.row_span(i).begin(), fresh.row_span(i).end());
            in_dist += ae_score(model, x);
            for (auto& v : x) v += 10.0;  // a 10-sigma offset, far outside training
            far_out += ae_score(model, x);
        }
        CHECK(far_out > in_dist * 10.0);
    }
    SUBCASE("non-finite loss aborts") {
        Matrix rows(8, 4, 1e308);
        AeConfig cfg;
        cfg.epochs = 3;
        CHECK_THROWS_AS(ae_fit(rows, cfg), NumericError);
    }
    SUBCASE("bottleneck must compress") {
        const Matrix rows = make_rows(5, 10);
        AeConfig cfg;
        cfg.bottleneck = 6;
        CHECK_THROWS_AS(ae_fit(rows, cfg), ConfigError);
    }
}

TEST_CASE("var") {
    SUBCASE("noiseless AR(1) is recovered exactly") {
        // x_t = 0.5 x_{t-1}, order 1: coefficient 0.5, intercept 0.
        Matrix v(40, 1);
        v(0, 0) = 1.0;
        for (std::size_t t = 1; t < 40; ++t) v(t, 0) = 0.5 * v(t - 1, 0);
        const TimeSeriesDataset ds = dataset_from(std::move(v));
        const WindowSet windows = make_windows(ds, 1);
        const VarModel model = var_fit(windows.all());

        CHECK_FALSE(model.ridge_applied);
        CHECK(model.coef(0, 0) == doctest::Approx(0.0).epsilon(1e-8).scale(1.0));
        CHECK(model.coef(1, 0) == doctest::Approx(0.5).epsilon(1e-8));

        Matrix hist(1, 1);
        hist(0, 0) = 0.25;
        CHECK(var_forecast(model, hist)[0] == doctest::Approx(0.125).epsilon(1e-8));
    }
    SUBCASE("white noise yields near-zero coefficients and intercept-led forecasts") {
        Rng rng(61);
        Matrix v(3000, 1);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = rng.gaussian();
        const TimeSeriesDataset ds = dataset_from(std::move(v));
        const VarModel model = var_fit(make_windows(ds, 2).all());

        CHECK(std::abs(model.coef(0, 0)) < 0.1);  // intercept ~ mean ~ 0
        CHECK(std::abs(model.coef(1, 0)) < 0.1);
        CHECK(std::abs(model.coef(2, 0)) < 0.1);
        Matrix hist(1, 2);
        hist(0, 0) = 0.4;
        hist(0, 1) = -0.2;
        CHECK(std::abs(var_forecast(model, hist)[0] - model.coef(0, 0)) < 0.1);
    }
    SUBCASE("matches the closed-form normal-equations oracle on a 50 x 2 toy") {
        Rng rng(67);
        Matrix v(50, 2);
        v(0, 0) = 0.3;
        v(0, 1) = -0.1;
        for (std::size_t t = 1; t < 50; ++t) {
            v(t, 0) = 0.4 * v(t - 1, 0) - 0.2 * v(t - 1, 1) + 0.1 * rng.gaussian();
            v(t, 1) = 0.3 * v(t - 1, 0) + 0.5 * v(t - 1, 1) + 0.1 * rng.gaussian();
        }
        const TimeSeriesDataset ds = dataset_from(std::move(v));
        const WindowBatch batch = make_windows(ds, 1).all();
        const VarModel model = var_fit(batch);

        const Matrix design = regression_design(batch);
        const std::size_t k = design.cols();
        Matrix gram(k, k);
        for (std::size_t i = 0; i < batch.size(); ++i)
            for (std::size_t a = 0; a < k; ++a)
                for (std::size_t b = 0; b < k; ++b)
                    gram(a, b) += design(i, a) * design(i, b);
        for (std::size_t j = 0; j < 2; ++j) {
            std::vector<double> rhs(k, 0.0);
            for (std::size_t i = 0; i < batch.size(); ++i)
                for (std::size_t a = 0; a < k; ++a) rhs[a] += design(i, a) * batch.targets(i, j);
            const std::vector<double> beta = gauss_solve(gram, rhs);
            for (std::size_t a = 0; a < k; ++a)
                CHECK(model.coef(a, j) == doctest::Approx(beta[a]).epsilon(1e-8).scale(1.0));
        }
    }
    SUBCASE("perfectly collinear lags fall back to ridge") {
        // Noiseless AR(1) with order 2: lag-2 column = 2 x lag-1 column.
        Matrix v(60, 1);
        v(0, 0) = 1.0;
        for (std::size_t t = 1; t < 60; ++t) v(t, 0) = 0.5 * v(t - 1, 0);
        const TimeSeriesDataset ds = dataset_from(std::move(v));
        const VarModel model = var_fit(make_windows(ds, 2).all());
        CHECK(model.ridge_applied);
        CHECK(std::isfinite(model.coef(1, 0)));
    }
    SUBCASE("too few equations") {
        Rng rng(71);
        Matrix v = testsup::random_matrix(rng, 12, 2);
        const TimeSeriesDataset ds = dataset_from(std::move(v));
        // w=5 on 12 rows leaves 7 windows for 11 coefficients.
        CHECK_THROWS_AS(var_fit(make_windows(ds, 5).all()), ShapeError);
    }
}

TEST_CASE("linalg oracles behind the baselines") {
    SUBCASE("sym_eigen reproduces a known spectrum") {
        // A = Q diag(9, 4, 1) Q^T for a hand-built orthonormal Q.
        const double s = 1.0 / std::sqrt(2.0);
        Matrix q(3, 3);
        q(0, 0) = s;   q(0, 1) = -s;  q(0, 2) = 0.0;
        q(1, 0) = s;   q(1, 1) = s;   q(1, 2) = 0.0;
        q(2, 0) = 0.0; q(2, 1) = 0.0; q(2, 2) = 1.0;
        const std::vector<double> lambda = {9.0, 4.0, 1.0};
        Matrix a(3, 3);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j)
                for (std::size_t k = 0; k < 3; ++k)
                    a(i, j) += q(i, k) * lambda[k] * q(j, k);

        const SymEigen eig = sym_eigen(a);
        for (std::size_t k = 0; k < 3; ++k)
            CHECK(eig.values[k] == doctest::Approx(lambda[k]).epsilon(1e-10));
        for (std::size_t k = 0; k < 3; ++k)
            for (std::size_t i = 0; i < 3; ++i)
                CHECK(std::abs(eig.vectors(i, k)) ==
                      doctest::Approx(std::abs(q(i, k))).epsilon(1e-8).scale(1.0));
    }
    SUBCASE("cholesky_solve matches Gaussian elimination") {
        Rng rng(83);
        const Matrix basis = testsup::random_matrix(rng, 6, 4);
        Matrix spd(4, 4);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) {
                for (std::size_t k = 0; k < 6; ++k) spd(i, j) += basis(k, i) * basis(k, j);
                if (i == j) spd(i, j) += 0.5;
            }
        std::vector<double> b(4);
        for (auto& v : b) v = rng.gaussian();
        Matrix rhs(4, 1);
        for (std::size_t i = 0; i < 4; ++i) rhs(i, 0) = b[i];

        const Matrix x = cholesky_solve(spd, rhs);
        const std::vector<double> want = gauss_solve(spd, b);
        for (std::size_t i = 0; i < 4; ++i)
            CHECK(x(i, 0) == doctest::Approx(want[i]).epsilon(1e-10).scale(1.0));
    }
    SUBCASE("cholesky_solve rejects an indefinite matrix") {
        Matrix bad = Matrix::identity(2);
        bad(1, 1) = -1.0;
        CHECK_THROWS_AS(cholesky_solve(bad, Matrix(2, 1)), NumericError);
    }
}
