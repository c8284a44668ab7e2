#include <doctest.h>

#include <Eigen/Dense>

#include "gfa/random.hpp"
#include "gfa/spectral.hpp"
#include "gfa/synthesis.hpp"
#include "oracles.hpp"

using namespace gfa;

namespace {

Matrix random_psd(const CounterRng& rng, Index n, std::uint64_t salt) {
    Matrix b(n, n);
    for (Index j = 0; j < n; ++j)
        b.col(j) = rng.normal_vector(salt + static_cast<std::uint64_t>(j) * n, n);
    return b * b.transpose() / static_cast<double>(n);
}

}  // namespace

TEST_CASE("identity profile is flat at one") {
    const auto c = identity_supplier(64);
    const std::vector<Index> grid = {8, 16, 32, 64};
    const auto profile = eigen_profile(c, grid, 3);
    CHECK((profile.values.array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("exchangeable profile matches the closed form 1 + n rho") {
    const auto c = exchangeable_supplier(2.0, 1.0, 800);
    const std::vector<Index> grid = {100, 200, 400, 800};
    const auto profile = eigen_profile(c, grid, 2);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const double n = static_cast<double>(grid[g]);
        CHECK(profile.values(static_cast<Index>(g), 0) ==
              doctest::Approx(1.0 + n).epsilon(1e-8));
        CHECK(profile.values(static_cast<Index>(g), 1) == doctest::Approx(1.0).epsilon(1e-8));
    }
    // Cross-check the smallest size against the Jacobi oracle at n = 5.
    const auto small = eigen_profile(exchangeable_supplier(2.0, 1.0, 5),
                                     std::vector<Index>{5}, 2);
    const auto ev = oracle::jacobi_eigenvalues(exchangeable_supplier(2.0, 1.0, 5).eval(5));
    CHECK(small.values(0, 0) == doctest::Approx(ev[0]).epsilon(1e-12));
    CHECK(small.values(0, 1) == doctest::Approx(ev[1]).epsilon(1e-12));
}

TEST_CASE("geometric rank-one profile climbs the partial sums toward 1/3") {
    const auto c = analytic_covariance({LoadingSpec::geometric(0.5)}, std::nullopt, 64);
    const std::vector<Index> grid = {8, 16, 32, 64};
    const auto profile = eigen_profile(c, grid, 1);
    for (std::size_t g = 0; g < grid.size(); ++g)
        CHECK(profile.values(static_cast<Index>(g), 0) ==
              doctest::Approx(oracle::geometric_sum(0.25, grid[g])).epsilon(1e-10));
}

TEST_CASE("eigenvalue monotonicity holds on random nested PSD truncations") {
    const CounterRng rng(404);
    for (int trial = 0; trial < 20; ++trial) {
        const Index n = 40 + 8 * trial;
        const auto c = dense_supplier(random_psd(rng, n, static_cast<std::uint64_t>(trial) << 32));
        const std::vector<Index> grid = {n / 4, n / 2, n};
        const int m = 1 + trial % 10;
        const auto profile = eigen_profile(c, grid, m);
        for (Index g = 0; g + 1 < static_cast<Index>(grid.size()); ++g)
            for (int k = 0; k < m; ++k)
                CHECK(profile.values(g + 1, k) >=
                      profile.values(g, k) - 1e-8 * std::abs(profile.values(g, k)) - 1e-12);
    }
}

TEST_CASE("a non-nested supplier trips the monotonicity check") {
    // Each eval rescales the whole matrix, so the truncations are not leading
    // blocks of one covariance and the eigenvalues shrink with n.
    const CovarianceSupplier c(CovarianceSupplier::Source::Analytic, 64, [](Index n) {
        return Matrix(Matrix::Identity(n, n) * (100.0 / static_cast<double>(n)));
    });
    CHECK_THROWS_AS(eigen_profile(c, std::vector<Index>{16, 32, 64}, 4), NumericalError);
}

TEST_CASE("profile argument validation") {
    const auto c = identity_supplier(32);
    CHECK_THROWS_AS(eigen_profile(c, std::vector<Index>{}, 1), ArgumentError);
    CHECK_THROWS_AS(eigen_profile(c, std::vector<Index>{8, 8}, 1), ArgumentError);
    CHECK_THROWS_AS(eigen_profile(c, std::vector<Index>{8, 64}, 9), ArgumentError);
    CHECK_THROWS_AS(eigen_profile(c, std::vector<Index>{8, 128}, 2), ArgumentError);
}

TEST_CASE("detector finds one diverging eigenvalue in the exchangeable family") {
    const auto c = exchangeable_supplier(2.0, 1.0, 800);
    const auto profile = eigen_profile(c, std::vector<Index>{100, 200, 400, 800}, 4);
    const auto report = detect_factor_count(profile);
    CHECK(report.q == 1);
    CHECK(!report.ambiguous);
    CHECK(report.entries[0].mean_ratio == doctest::Approx(2.0).epsilon(0.02));
    CHECK(report.entries[1].mean_ratio == doctest::Approx(1.0).epsilon(0.02));
    CHECK(report.entries[0].cls == GrowthClass::Diverging);
    CHECK(report.entries[1].cls == GrowthClass::Bounded);
}

TEST_CASE("detector separates two aggregate directions from white noise") {
    const auto c = analytic_covariance(
        {LoadingSpec::constant(1.0), LoadingSpec::sign_pattern(2)}, NoiseSpec::white(1.0), 512);
    const auto profile = eigen_profile(c, std::vector<Index>{64, 128, 256, 512}, 5);
    const auto report = detect_factor_count(profile);
    CHECK(report.q == 2);
    CHECK(!report.ambiguous);
    // Closed form: lambda_1 = lambda_2 = n + 1, the rest exactly 1.
    CHECK(profile.values(3, 0) == doctest::Approx(513.0).epsilon(1e-10));
    CHECK(profile.values(3, 2) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("bounded geometric covariance yields q = 0") {
    const auto c = analytic_covariance({LoadingSpec::geometric(0.5)}, std::nullopt, 512);
    const auto profile = eigen_profile(c, std::vector<Index>{64, 128, 256, 512}, 3);
    const auto report = detect_factor_count(profile);
    CHECK(report.q == 0);
}

TEST_CASE("detector refuses a profile where everything diverges") {
    const auto c = analytic_covariance({LoadingSpec::constant(1.0),
                                        LoadingSpec::sign_pattern(1),
                                        LoadingSpec::sign_pattern(2)},
                                       std::nullopt, 512);
    const auto profile = eigen_profile(c, std::vector<Index>{64, 128, 256, 512}, 3);
    CHECK_THROWS_AS(detect_factor_count(profile), NumericalError);
}

TEST_CASE("cap keeps fast-growing but small eigenvalues out of the count") {
    EigenProfile profile;
    profile.grid = {100, 200, 400};
    profile.values.resize(3, 3);
    // k=1 diverges for real; k=3 grows at ~1.6x but stays tiny; k=2 flat.
    profile.values << 100.0, 1.0, 0.10,
                      200.0, 1.0, 0.16,
                      400.0, 1.0, 0.26;
    const auto report = detect_factor_count(profile);
    CHECK(report.q == 1);
    CHECK(report.entries[2].mean_ratio > 1.5);
    CHECK(report.entries[2].cls == GrowthClass::Bounded);  // below the cap
}

TEST_CASE("detection is invariant under positive rescaling of the covariance") {
    const CounterRng rng(55);
    for (int trial = 0; trial < 100; ++trial) {
        EigenProfile profile;
        profile.grid = {64, 128, 256};
        profile.values.resize(3, 4);
        for (int k = 0; k < 4; ++k) {
            const double base = 0.5 + rng.uniform(static_cast<std::uint64_t>(trial) * 8 + k);
            const double rate =
                1.0 + 1.5 * rng.uniform(static_cast<std::uint64_t>(trial) * 8 + 4 + k);
            profile.values(0, k) = base * (k == 0 ? 100.0 : 1.0);
            profile.values(1, k) = profile.values(0, k) * rate;
            profile.values(2, k) = profile.values(1, k) * rate;
        }
        // Keep rows sorted descending as a real profile would be.
        for (Index g = 0; g < 3; ++g) {
            std::vector<double> row(4);
            for (int k = 0; k < 4; ++k)
                row[static_cast<std::size_t>(k)] = profile.values(g, k);
            std::sort(row.begin(), row.end(), std::greater<>());
            for (int k = 0; k < 4; ++k)
                profile.values(g, k) = row[static_cast<std::size_t>(k)];
        }
        EigenProfile scaled = profile;
        scaled.values *= 1024.0;

        GrowthReport a, b;
        bool threw_a = false, threw_b = false;
        try {
            a = detect_factor_count(profile);
        } catch (const NumericalError&) {
            threw_a = true;
        }
        try {
            b = detect_factor_count(scaled);
        } catch (const NumericalError&) {
            threw_b = true;
        }
        REQUIRE(threw_a == threw_b);
        if (!threw_a) {
            CHECK(a.q == b.q);
            for (std::size_t k = 0; k < a.entries.size(); ++k)
                CHECK(a.entries[k].cls == b.entries[k].cls);
        }
    }
}

TEST_CASE("rank-one extraction is exact on 4 * ones") {
    const Matrix sigma = 4.0 * Matrix::Ones(3, 3);
    const Matrix f = extract_loadings(sigma, 1);
    CHECK(f.rows() == 3);
    CHECK(f.cols() == 1);
    for (Index k = 0; k < 3; ++k)
        CHECK(f(k, 0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("exchangeable loading is near the constant sqrt(rho) profile") {
    const auto c = exchangeable_supplier(2.0, 1.0, 100);
    const Matrix f = extract_loadings(c.eval(100), 1);
    CHECK((f.col(0).array() - 1.0).abs().maxCoeff() <= 0.02);
}

TEST_CASE("low-noise perturbation recovers the loading Gramian") {
    const Index n = 64;
    Matrix f(n, 2);
    f.col(0) = LoadingSpec::constant(1.0).materialize(n);
    f.col(1) = LoadingSpec::sign_pattern(2).materialize(n);
    const Matrix sigma = f * f.transpose() + 0.01 * Matrix::Identity(n, n);
    const Matrix fhat = extract_loadings(sigma, 2);
    const double err = (fhat * fhat.transpose() - f * f.transpose()).norm();
    CHECK(err <= 0.01 * std::sqrt(static_cast<double>(n)));
}

TEST_CASE("noiseless rank-q spectral truncation reproduces F F^T to machine precision") {
    const CounterRng rng(9001);
    for (int trial = 0; trial < 20; ++trial) {
        const Index n = 24 + trial;
        Matrix f(n, 2);
        f.col(0) = rng.normal_vector(static_cast<std::uint64_t>(trial) * 1000, n) +
                   Vector::Constant(n, 3.0);
        f.col(1) = rng.normal_vector(static_cast<std::uint64_t>(trial) * 1000 + 500, n);
        const Matrix sigma = f * f.transpose();
        const Matrix fhat = extract_loadings(sigma, 2);
        CHECK((fhat * fhat.transpose() - sigma).norm() <= 1e-10 * sigma.norm());
    }
}

TEST_CASE("extraction errors: degenerate factor and PSD violation") {
    CHECK_THROWS_AS(extract_loadings(Matrix::Ones(3, 3), 2), NumericalError);
    Matrix indef = Matrix::Identity(3, 3);
    indef(2, 2) = -1.0;
    CHECK_THROWS_AS(extract_loadings(indef, 1), NumericalError);
    CHECK_THROWS_AS(extract_loadings(Matrix::Identity(3, 3), 0), ArgumentError);
}

TEST_CASE("strong linear independence: orthogonal profiles grow like sqrt(n)") {
    std::vector<Matrix> over_grid;
    for (const Index n : {64, 128, 256, 512}) {
        Matrix f(n, 2);
        f.col(0) = LoadingSpec::constant(1.0).materialize(n);
        f.col(1) = LoadingSpec::sign_pattern(2).materialize(n);
        over_grid.push_back(f);
    }
    const auto report = strong_li_diagnostic(over_grid);
    CHECK(report.verdict == StrongLiVerdict::Strong);
    for (std::size_t g = 0; g < 4; ++g) {
        const double n = static_cast<double>(report.grid[g]);
        CHECK(report.residual_norms(static_cast<Index>(g), 0) ==
              doctest::Approx(std::sqrt(n)).epsilon(1e-10));
    }
    CHECK(report.growth_rates[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
}

TEST_CASE("strong linear independence: the 1 - 2^-k companion is weak") {
    std::vector<Matrix> over_grid;
    for (const Index n : {256, 512, 1024, 2048}) {
        Matrix f(n, 2);
        f.col(0) = LoadingSpec::constant(1.0).materialize(n);
        f.col(1) = LoadingSpec::one_minus_geometric(0.5).materialize(n);
        over_grid.push_back(f);
    }
    const auto report = strong_li_diagnostic(over_grid);
    CHECK(report.verdict == StrongLiVerdict::Weak);
    // Residual norm^2 of the companion settles at w - u^2/n -> 1/3.
    const Index last = 3;
    const double expected =
        oracle::geometric_sum(0.25, 2048) -
        oracle::geometric_sum(0.5, 2048) * oracle::geometric_sum(0.5, 2048) / 2048.0;
    const double got = report.residual_norms(last, 1);
    CHECK(got * got == doctest::Approx(expected).epsilon(1e-8));
    CHECK(got * got == doctest::Approx(1.0 / 3.0).epsilon(2e-3));
}

TEST_CASE("single factor diagnostic uses the full norm and is strong for constants") {
    std::vector<Matrix> over_grid;
    for (const Index n : {64, 128, 256})
        over_grid.push_back(LoadingSpec::constant(1.0).materialize(n));
    const auto report = strong_li_diagnostic(over_grid);
    CHECK(report.verdict == StrongLiVerdict::Strong);
    CHECK(report.residual_norms(0, 0) == doctest::Approx(8.0));
}

TEST_CASE("collinear loadings are flagged and weak") {
    std::vector<Matrix> over_grid;
    for (const Index n : {64, 128, 256}) {
        Matrix f(n, 2);
        f.col(0) = LoadingSpec::constant(1.0).materialize(n);
        f.col(1) = 2.0 * f.col(0);
        over_grid.push_back(f);
    }
    const auto report = strong_li_diagnostic(over_grid);
    CHECK(report.collinear);
    CHECK(report.verdict == StrongLiVerdict::Weak);
}

TEST_CASE("averaging over a constant loading is the arithmetic mean") {
    const Matrix f = LoadingSpec::constant(1.0).materialize(100);
    const auto ops = build_averaging_sequences(f);
    CHECK((ops.a - Matrix::Constant(1, 100, 0.01)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(ops.r(0, 0) == 1.0);
}

TEST_CASE("orthogonal loadings invert without mixing") {
    const Index n = 64;
    Matrix f(n, 2);
    f.col(0) = LoadingSpec::constant(1.0).materialize(n);
    f.col(1) = LoadingSpec::sign_pattern(2).materialize(n);
    const auto ops = build_averaging_sequences(f);
    CHECK((ops.r - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
    for (Index i = 0; i < 2; ++i)
        CHECK((ops.a.row(i) - f.col(i).transpose() / f.col(i).squaredNorm())
                  .cwiseAbs()
                  .maxCoeff() < 1e-15);
}

TEST_CASE("the left inverse contract A F = R holds tightly") {
    const Index n = 10;
    Matrix f(n, 2);
    f.col(0) = LoadingSpec::constant(1.0).materialize(n);
    f.col(1) = LoadingSpec::one_minus_geometric(0.5).materialize(n);
    const auto ops = build_averaging_sequences(f);
    CHECK((ops.a * f - ops.r).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(ops.r(1, 0) == 0.0);
    CHECK(ops.r(0, 0) == 1.0);
    CHECK(ops.r(1, 1) == 1.0);
}

TEST_CASE("averaging rows have norm 1 over the Gram-Schmidt norms") {
    const CounterRng rng(808);
    for (int trial = 0; trial < 30; ++trial) {
        const Index n = 16 + trial;
        const Index q = 1 + trial % 4;
        Matrix f(n, q);
        for (Index j = 0; j < q; ++j)
            f.col(j) = rng.normal_vector(static_cast<std::uint64_t>(trial * 8 + j) * 64, n);
        const auto ops = build_averaging_sequences(f);
        const Matrix product = ops.a * f;
        CHECK((product - ops.r).cwiseAbs().maxCoeff() < 1e-10);
        for (Index i = 0; i < q; ++i) {
            CHECK(ops.a.row(i).norm() ==
                  doctest::Approx(1.0 / ops.orthogonal_basis.col(i).norm()).epsilon(1e-10));
            for (Index j = 0; j < i; ++j)
                CHECK(product(i, j) == doctest::Approx(0.0).epsilon(1e-10));
        }
    }
}

TEST_CASE("rank-deficient loading matrices name the offending column") {
    Matrix f(8, 2);
    f.col(0) = LoadingSpec::constant(1.0).materialize(8);
    f.col(1) = 3.0 * f.col(0);
    try {
        build_averaging_sequences(f);
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("column 2") != std::string::npos);
    }
}

TEST_CASE("noiseless factor realization is exact in analytic mode") {
    const auto sample = gen_aggregate({LoadingSpec::constant(1.0)}, 32, 6, 303);
    const Matrix f = LoadingSpec::constant(1.0).materialize(32);
    const auto ops = build_averaging_sequences(f);
    const auto real = realize_factors(sample.ensemble, f, ops, WhitenMode::Analytic);
    CHECK((real.factors - sample.factors).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(real.idiosyncratic.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("factor recovery under white noise reaches 0.99 correlation") {
    const Index n = 1000, m = 200;
    auto sample = gen_aggregate({LoadingSpec::constant(1.0)}, n, m, 71);
    const auto noise = gen_idiosyncratic(NoiseSpec::white(1.0), n, m, 72);
    sample.ensemble.data += noise.data;

    const Matrix sigma =
        sample.ensemble.data * sample.ensemble.data.transpose() / static_cast<double>(m);
    const Matrix f = extract_loadings(sigma, 1);
    const auto ops = build_averaging_sequences(f);
    const auto real = realize_factors(sample.ensemble, f, ops);
    const double corr = oracle::correlation(real.factors.row(0).transpose(),
                                            sample.factors.row(0).transpose());
    CHECK(std::abs(corr) >= 0.99);
    // Split identity holds to machine rounding (the parts are stored as exact
    // complements, so the recombination error is at most one rounding step).
    const double scale = sample.ensemble.data.cwiseAbs().maxCoeff();
    CHECK((real.aggregate + real.idiosyncratic - sample.ensemble.data).cwiseAbs().maxCoeff() <=
          1e-15 * scale);
    const Matrix cov_x = real.factors * real.factors.transpose() / static_cast<double>(m);
    CHECK((cov_x - Matrix::Identity(1, 1)).cwiseAbs().maxCoeff() < 1e-10);
    // Factors vs residual rows: sample cross-covariance stays small.
    const Matrix cross = real.factors * real.idiosyncratic.transpose() / static_cast<double>(m);
    CHECK(cross.cwiseAbs().maxCoeff() < 0.1);
}

TEST_CASE("realization requires enough replicates and a nonsingular z covariance") {
    Matrix f2(16, 2);
    f2.col(0) = LoadingSpec::constant(1.0).materialize(16);
    f2.col(1) = LoadingSpec::sign_pattern(2).materialize(16);
    const auto ops2 = build_averaging_sequences(f2);
    const SampleEnsemble tiny(Matrix::Ones(16, 1), EnsembleKind::Replicates);
    CHECK_THROWS_AS(realize_factors(tiny, f2, ops2), NumericalError);

    // Data never excites the second direction: singular z covariance.
    const auto sample = gen_aggregate({LoadingSpec::constant(1.0)}, 16, 8, 5);
    CHECK_THROWS_AS(realize_factors(sample.ensemble, f2, ops2), NumericalError);
}

TEST_CASE("idiosyncrasy test separates bounded from growing noise") {
    const std::vector<Index> grid = {100, 400, 1600};

    const auto white = gen_idiosyncratic(NoiseSpec::white(1.0), 1600, 300, 21);
    const auto white_report = idiosyncrasy_test(white, arithmetic_mean_family(), grid);
    CHECK(white_report.verdict == IdiosyncrasyVerdict::Consistent);
    CHECK(white_report.variance[0] == doctest::Approx(1.0 / 100.0).epsilon(0.5));
    CHECK(white_report.variance[2] == doctest::Approx(1.0 / 1600.0).epsilon(0.5));

    const auto growing = gen_idiosyncratic(NoiseSpec::white_growing(), 1600, 300, 22);
    const auto growing_report = idiosyncrasy_test(growing, unit_spike_family(), grid);
    CHECK(growing_report.verdict == IdiosyncrasyVerdict::NotIdiosyncratic);
    for (const double v : growing_report.variance)
        CHECK(v == doctest::Approx(1.0).epsilon(0.35));

    const auto ma = gen_idiosyncratic(
        NoiseSpec::moving_average((Vector(2) << 1.0, 0.5).finished()), 1600, 300, 23);
    Vector base(1600);
    for (Index k = 0; k < 1600; ++k)
        base[k] = std::pow(0.9, static_cast<double>(k + 1));
    const auto shifted = idiosyncrasy_test(ma, shifted_tail_family(base),
                                           std::vector<Index>{8, 16, 32});
    CHECK(shifted.verdict == IdiosyncrasyVerdict::Consistent);

    CHECK_THROWS_AS(idiosyncrasy_test(white, arithmetic_mean_family(),
                                      std::vector<Index>{100, 400}),
                    ArgumentError);
}

TEST_CASE("full decomposition on the exchangeable covariance") {
    const auto c = exchangeable_supplier(2.0, 1.0, 400);
    const auto gfa = gfa_decompose(c, std::vector<Index>{50, 100, 200, 400}, 4);
    CHECK(gfa.q == 1);
    const Matrix sigma = c.eval(400);
    CHECK((gfa.loadings * gfa.loadings.transpose() + gfa.idio_cov - sigma)
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK(gfa.sli.verdict == StrongLiVerdict::Strong);
    // The idiosyncratic remainder keeps a bounded top eigenvalue.
    Eigen::SelfAdjointEigenSolver<Matrix> es(gfa.idio_cov, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().maxCoeff() < 2.0);
}

TEST_CASE("power iteration agrees with the dense solver") {
    const CounterRng rng(66);
    Matrix y(64, 128);
    for (Index j = 0; j < y.cols(); ++j)
        y.col(j) = rng.normal_vector(static_cast<std::uint64_t>(j) * 64, 64);
    const double top = top_sample_eigenvalue(y, 64);
    Eigen::SelfAdjointEigenSolver<Matrix> es(y * y.transpose() / 128.0, Eigen::EigenvaluesOnly);
    CHECK(top == doctest::Approx(es.eigenvalues().maxCoeff()).epsilon(1e-6));
}
