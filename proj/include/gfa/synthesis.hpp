#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gfa/types.hpp"

namespace gfa {

/// Deterministic loading profile f(k), k = 1..N.
///
/// The constant, sign-pattern and cosine families are bounded and not square
/// summable; the geometric family with |lambda| < 1 is square summable and is
/// provided deliberately as the non-aggregate counterexample.
struct LoadingSpec {
    enum class Family { Constant, SignPattern, Cosine, Geometric, OneMinusGeometric, Custom };

    Family family = Family::Constant;
    double param = 1.0;   ///< c, theta or lambda depending on the family
    Index period = 2;     ///< sign-pattern block length
    Vector custom;        ///< explicit profile for Family::Custom

    static LoadingSpec constant(double c);
    static LoadingSpec sign_pattern(Index period);
    static LoadingSpec cosine(double theta);
    static LoadingSpec geometric(double lambda);             ///< f(k) = lambda^k
    static LoadingSpec one_minus_geometric(double lambda);   ///< f(k) = 1 - lambda^k
    static LoadingSpec custom_vector(Vector f);

    Vector materialize(Index n) const;
    bool square_summable() const;
    std::string description() const;

    bool operator==(const LoadingSpec& other) const;
};

/// Idiosyncratic-candidate noise model.
///
/// White, moving-average and banded noises have covariance operators with
/// uniformly bounded spectral norm. The growing-variance white noise
/// (Var y(k) = k) is the counterexample that is neither idiosyncratic nor
/// aggregate.
struct NoiseSpec {
    enum class Kind { White, WhiteGrowing, MovingAverage, Banded };

    Kind kind = Kind::White;
    double sigma = 1.0;
    Vector ma_coeffs;     ///< c_0..c_m for the moving average

    static NoiseSpec white(double sigma);
    static NoiseSpec white_growing();
    static NoiseSpec moving_average(Vector coeffs);
    static NoiseSpec banded(Index bandwidth, double decay);  ///< MA with coeffs decay^j

    bool bounded() const { return kind != Kind::WhiteGrowing; }

    /// Autocovariance sequence sigma(0..max_lag) for the stationary kinds.
    Vector autocov(Index max_lag) const;

    std::string description() const;
};

/// Stationary unit-variance time process for separable fields.
struct TimeSpec {
    enum class Kind { Iid, Ar1, Sinusoid };

    Kind kind = Kind::Iid;
    double phi = 0.0;     ///< AR(1) coefficient, |phi| < 1
    double omega = 0.0;   ///< sinusoid frequency

    static TimeSpec iid();
    static TimeSpec ar1(double phi);
    static TimeSpec sinusoid(double omega);

    /// sigma_u(tau) for lag tau (expectation over the random phase for sinusoids).
    double autocov(Index tau) const;

    std::string description() const;
};

struct AggregateSample {
    SampleEnsemble ensemble;
    Matrix factors;  ///< q x M true factor draws
};

/// y(k) = sum_i f_i(k) x_i with i.i.d. standard normal factors per replicate.
AggregateSample gen_aggregate(const std::vector<LoadingSpec>& specs, Index n, Index m,
                              std::uint64_t seed);

/// Columns are i.i.d. draws with the covariance structure of the noise spec.
SampleEnsemble gen_idiosyncratic(const NoiseSpec& spec, Index n, Index m, std::uint64_t seed);

struct PDLine {
    double omega = 0.0;
    double amplitude_var = 1.0;
};

struct PDSample {
    SampleEnsemble ensemble;
    PDLineModel truth;  ///< realized (v_i, w_i) draws per replicate
};

/// y(k) = sum_i v_i cos(omega_i k) + w_i sin(omega_i k), v_i, w_i independent
/// zero-mean normals of equal variance per line.
PDSample gen_pd_stationary(const std::vector<PDLine>& lines, Index n, Index m,
                           std::uint64_t seed);

/// Evaluates the deterministic reconstruction of a line model for one replicate.
Vector pd_signal(const PDLineModel& model, Index n, Index replicate = 0);

struct FieldSample {
    SeparableField field;
    Vector space_component;  ///< realized v(k)
    Vector time_component;   ///< realized u(t)
    Vector space_factors;    ///< realized z_i of the space process
};

/// y(k,t) = v(k) u(t); v(k) = sum_i f_i(k) z_i + noise, u per the time spec.
/// The declared covariance models are attached when the space process is
/// shift-stationary (constant loadings + stationary noise).
FieldSample gen_separable_field(const std::vector<LoadingSpec>& space_loadings,
                                const std::optional<NoiseSpec>& space_noise,
                                const TimeSpec& time, Index n, Index t, std::uint64_t seed);

/// Analytic covariance supplier of the model sum_i f_i f_i^T + noise covariance.
CovarianceSupplier analytic_covariance(const std::vector<LoadingSpec>& specs,
                                       const std::optional<NoiseSpec>& noise, Index max_n);

/// Loading + noise pair realizing an exchangeable covariance (sigma^2 diagonal,
/// rho off-diagonal): f(k) = sqrt(rho) and white residual of variance
/// sigma^2 - rho, so that f f^T has off-diagonal entries exactly rho.
std::pair<LoadingSpec, NoiseSpec> exchangeable_model(double sigma2, double rho);

}  // namespace gfa
