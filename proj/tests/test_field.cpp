#include <doctest.h>

#include <cmath>

#include "gfa/field.hpp"
#include "gfa/synthesis.hpp"
#include "oracles.hpp"

using namespace gfa;

TEST_CASE("snapshot autocovariance of a constant field follows the closed form") {
    // v = 1, u(t0) = 2: biased lags are 4 (N - h) / N.
    const Index n = 50;
    Matrix data = Matrix::Ones(n, 3);
    data.col(1) *= 2.0;
    const SeparableField field(data);
    const auto est = snapshot_autocov(field, 1, 10);
    for (Index h = 0; h <= 10; ++h)
        CHECK(est.lags[h] ==
              doctest::Approx(4.0 * static_cast<double>(n - h) / n).epsilon(1e-14));
    CHECK_THROWS_AS(snapshot_autocov(field, 3, 10), ArgumentError);
    CHECK_THROWS_AS(snapshot_autocov(field, 0, 50), ArgumentError);
}

TEST_CASE("snapshot lags divide by u(t0)^2 to the space autocovariance") {
    const auto [loading, noise] = exchangeable_model(2.0, 1.0);
    const auto sample = gen_separable_field({loading}, noise, TimeSpec::ar1(0.9), 300, 12, 4);
    const Index t0 = 5;
    const double u2 = sample.time_component[t0] * sample.time_component[t0];
    const auto snap = snapshot_autocov(sample.field, t0, 40);
    const auto space = sample_autocov(sample.space_component, 40, AutocovKind::Biased);
    for (Index h = 0; h <= 40; ++h)
        CHECK(snap.lags[h] == doctest::Approx(u2 * space.lags[h]).epsilon(1e-12));
}

TEST_CASE("two snapshots of a separable field have proportional lag curves") {
    const auto sample = gen_separable_field({LoadingSpec::constant(1.0)},
                                            NoiseSpec::white(0.5), TimeSpec::ar1(0.8), 200, 8, 2);
    const auto a = snapshot_autocov(sample.field, 2, 30);
    const auto b = snapshot_autocov(sample.field, 6, 30);
    const double ratio0 = a.lags[0] / b.lags[0];
    for (Index h = 1; h <= 30; ++h)
        CHECK(a.lags[h] / b.lags[h] == doctest::Approx(ratio0).epsilon(1e-10));
}

TEST_CASE("flock extraction recovers the factor path of an exchangeable field") {
    const auto [loading, noise] = exchangeable_model(2.0, 1.0);
    const auto sample =
        gen_separable_field({loading}, noise, TimeSpec::ar1(0.9), 600, 150, 4);
    const auto result = extract_flock(sample.field);
    REQUIRE(result.q == 1);
    CHECK(result.verdict == FlockVerdict::Flock);

    // Recovered factor path tracks z * u(t).
    const Vector truth = sample.space_factors[0] * sample.time_component;
    const double corr = oracle::correlation(result.factors.row(0).transpose(), truth);
    CHECK(corr >= 0.9);

    // Identity split (to machine rounding) and near-constant loading.
    CHECK((result.flock + result.residual - sample.field.data).cwiseAbs().maxCoeff() <=
          1e-15 * sample.field.data.cwiseAbs().maxCoeff());
    const double fmax = result.loadings.col(0).maxCoeff();
    const double fmin = result.loadings.col(0).minCoeff();
    CHECK(fmin / fmax > 0.8);

    // Flock and residual entries stay nearly uncorrelated.
    const double t = static_cast<double>(sample.field.time_size());
    const double cross = (result.flock.cwiseProduct(result.residual)).mean();
    const double scale = std::sqrt((result.flock.cwiseProduct(result.flock)).mean() *
                                   (result.residual.cwiseProduct(result.residual)).mean());
    CHECK(std::abs(cross) / scale <= 5.0 / std::sqrt(t));
}

TEST_CASE("a field with only short-range space correlation has no flock") {
    const auto sample = gen_separable_field(
        {}, NoiseSpec::moving_average((Vector(2) << 1.0, 0.5).finished()),
        TimeSpec::ar1(0.8), 600, 100, 6);
    const auto result = extract_flock(sample.field);
    CHECK(result.q == 0);
    CHECK(result.verdict == FlockVerdict::NoFlock);
    CHECK(result.flock.cwiseAbs().maxCoeff() == 0.0);
    CHECK((result.residual - sample.field.data).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("a deterministic constant space profile is reproduced exactly") {
    const Index n = 128, t = 64;
    Vector u(t);
    for (Index s = 0; s < t; ++s)
        u[s] = std::sin(0.37 * static_cast<double>(s + 1)) + 1.4;
    const Matrix data = Vector::Constant(n, 3.0) * u.transpose();
    const SeparableField field(data);
    const auto result = extract_flock(field);
    REQUIRE(result.q == 1);
    CHECK((result.flock - data).cwiseAbs().maxCoeff() < 1e-8 * data.cwiseAbs().maxCoeff());
    CHECK(result.residual.cwiseAbs().maxCoeff() < 1e-8 * data.cwiseAbs().maxCoeff());
}

TEST_CASE("separability defect is near zero for truly separable fields") {
    // Deterministic rank-one field: exactly separable, defect 0.
    const Index n = 100, t = 80;
    Matrix kt(n, t);
    for (Index k = 0; k < n; ++k)
        for (Index s = 0; s < t; ++s)
            kt(k, s) = static_cast<double>(k + 1) * static_cast<double>(s + 1);
    CHECK(separability_check(SeparableField(kt)) <= 1e-12);

    const auto [loading, noise] = exchangeable_model(2.0, 1.0);
    const auto sample =
        gen_separable_field({loading}, noise, TimeSpec::ar1(0.9), 600, 500, 4);
    CHECK(separability_check(sample.field) <= 0.1);
}

TEST_CASE("a sum of two separable fields scores a materially larger defect") {
    const auto a = gen_separable_field({LoadingSpec::constant(1.0)}, NoiseSpec::white(0.2),
                                       TimeSpec::ar1(0.9), 500, 400, 31);
    const auto b = gen_separable_field({LoadingSpec::cosine(0.8)}, NoiseSpec::white(0.2),
                                       TimeSpec::sinusoid(2.3), 500, 400, 32);
    const double single = separability_check(a.field);
    const double mixed =
        separability_check(SeparableField(a.field.data + b.field.data));
    CHECK(mixed > 2.0 * single);
    CHECK(mixed > 0.2);
}

TEST_CASE("separability check validates the sub-grid bounds") {
    const SeparableField field(Matrix::Ones(30, 30));
    CHECK_THROWS_AS(separability_check(field, 25, 10), ArgumentError);
    CHECK_THROWS_AS(separability_check(field, 10, 0), ArgumentError);
}

TEST_CASE("extraction is scale equivariant") {
    const auto [loading, noise] = exchangeable_model(2.0, 1.0);
    const auto sample =
        gen_separable_field({loading}, noise, TimeSpec::ar1(0.9), 400, 80, 4);
    const auto base = extract_flock(sample.field);
    const SeparableField scaled(4.0 * sample.field.data);
    const auto rescaled = extract_flock(scaled);
    REQUIRE(base.q == rescaled.q);
    CHECK((rescaled.flock - 4.0 * base.flock).cwiseAbs().maxCoeff() <=
          1e-12 * base.flock.cwiseAbs().maxCoeff());
    for (std::size_t k = 0; k < base.growth.entries.size(); ++k)
        CHECK(base.growth.entries[k].cls == rescaled.growth.entries[k].cls);
}

TEST_CASE("flock parameters validate the grid") {
    const SeparableField field(Matrix::Ones(64, 8));
    FlockParams params;
    params.grid = {16, 32, 128};
    CHECK_THROWS_AS(extract_flock(field, params), ArgumentError);
}
