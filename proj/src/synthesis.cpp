#include "gfa/synthesis.hpp"

#include <cmath>
#include <sstream>

#include "gfa/random.hpp"

namespace gfa {
namespace {

// Stream ids for the counter generator; fixed so every scenario draws from
// disjoint, order-independent lanes.
constexpr std::uint64_t kFactorStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kSpaceStream = 3;
constexpr std::uint64_t kTimeStream = 4;
constexpr std::uint64_t kAmplitudeStream = 5;

std::string format_double(double x) {
    std::ostringstream out;
    out << x;
    return out.str();
}

}  // namespace

LoadingSpec LoadingSpec::constant(double c) {
    LoadingSpec s;
    s.family = Family::Constant;
    s.param = c;
    return s;
}

LoadingSpec LoadingSpec::sign_pattern(Index period) {
    if (period < 1)
        throw ArgumentError("LoadingSpec::sign_pattern: period must be >= 1");
    LoadingSpec s;
    s.family = Family::SignPattern;
    s.period = period;
    return s;
}

LoadingSpec LoadingSpec::cosine(double theta) {
    LoadingSpec s;
    s.family = Family::Cosine;
    s.param = theta;
    return s;
}

LoadingSpec LoadingSpec::geometric(double lambda) {
    if (std::abs(lambda) >= 1.0)
        throw ArgumentError("LoadingSpec::geometric: requires |lambda| < 1");
    LoadingSpec s;
    s.family = Family::Geometric;
    s.param = lambda;
    return s;
}

LoadingSpec LoadingSpec::one_minus_geometric(double lambda) {
    if (std::abs(lambda) >= 1.0)
        throw ArgumentError("LoadingSpec::one_minus_geometric: requires |lambda| < 1");
    LoadingSpec s;
    s.family = Family::OneMinusGeometric;
    s.param = lambda;
    return s;
}

LoadingSpec LoadingSpec::custom_vector(Vector f) {
    if (f.size() < 1)
        throw ArgumentError("LoadingSpec::custom_vector: empty profile");
    LoadingSpec s;
    s.family = Family::Custom;
    s.custom = std::move(f);
    return s;
}

Vector LoadingSpec::materialize(Index n) const {
    if (n < 1)
        throw ArgumentError("LoadingSpec::materialize: n must be >= 1");
    Vector f(n);
    switch (family) {
        case Family::Constant:
            f.setConstant(param);
            break;
        case Family::SignPattern:
            for (Index k = 0; k < n; ++k)
                f[k] = ((k / period) % 2 == 0) ? 1.0 : -1.0;
            break;
        case Family::Cosine:
            for (Index k = 0; k < n; ++k)
                f[k] = std::cos(param * static_cast<double>(k + 1));
            break;
        case Family::Geometric:
            for (Index k = 0; k < n; ++k)
                f[k] = std::pow(param, static_cast<double>(k + 1));
            break;
        case Family::OneMinusGeometric:
            for (Index k = 0; k < n; ++k)
                f[k] = 1.0 - std::pow(param, static_cast<double>(k + 1));
            break;
        case Family::Custom:
            if (custom.size() < n)
                throw ArgumentError("LoadingSpec::materialize: custom profile shorter than n");
            f = custom.head(n);
            break;
    }
    return f;
}

bool LoadingSpec::square_summable() const {
    switch (family) {
        case Family::Geometric:
            return true;
        case Family::Custom:
            return false;  // unknown; treated as the generic bounded case
        default:
            return false;
    }
}

std::string LoadingSpec::description() const {
    switch (family) {
        case Family::Constant: return "constant(" + format_double(param) + ")";
        case Family::SignPattern: return "sign_pattern(" + std::to_string(period) + ")";
        case Family::Cosine: return "cosine(" + format_double(param) + ")";
        case Family::Geometric: return "geometric(" + format_double(param) + ")";
        case Family::OneMinusGeometric:
            return "one_minus_geometric(" + format_double(param) + ")";
        case Family::Custom: return "custom(" + std::to_string(custom.size()) + ")";
    }
    return "unknown";
}

bool LoadingSpec::operator==(const LoadingSpec& other) const {
    if (family != other.family)
        return false;
    if (family == Family::Custom)
        return custom.size() == other.custom.size() && custom == other.custom;
    if (family == Family::SignPattern)
        return period == other.period;
    return param == other.param;
}

NoiseSpec NoiseSpec::white(double sigma) {
    if (sigma <= 0.0)
        throw ArgumentError("NoiseSpec::white: sigma must be positive");
    NoiseSpec s;
    s.kind = Kind::White;
    s.sigma = sigma;
    return s;
}

NoiseSpec NoiseSpec::white_growing() {
    NoiseSpec s;
    s.kind = Kind::WhiteGrowing;
    return s;
}

NoiseSpec NoiseSpec::moving_average(Vector coeffs) {
    if (coeffs.size() < 1)
        throw ArgumentError("NoiseSpec::moving_average: empty coefficient list");
    NoiseSpec s;
    s.kind = Kind::MovingAverage;
    s.ma_coeffs = std::move(coeffs);
    return s;
}

NoiseSpec NoiseSpec::banded(Index bandwidth, double decay) {
    if (bandwidth < 0)
        throw ArgumentError("NoiseSpec::banded: bandwidth must be >= 0");
    Vector coeffs(bandwidth + 1);
    for (Index j = 0; j <= bandwidth; ++j)
        coeffs[j] = std::pow(decay, static_cast<double>(j));
    NoiseSpec s;
    s.kind = Kind::Banded;
    s.ma_coeffs = std::move(coeffs);
    return s;
}

Vector NoiseSpec::autocov(Index max_lag) const {
    Vector acov = Vector::Zero(max_lag + 1);
    switch (kind) {
        case Kind::White:
            acov[0] = sigma * sigma;
            break;
        case Kind::WhiteGrowing:
            throw ArgumentError("NoiseSpec::autocov: growing white noise is not stationary");
        case Kind::MovingAverage:
        case Kind::Banded: {
            const Index order = ma_coeffs.size() - 1;
            for (Index h = 0; h <= std::min(max_lag, order); ++h)
                for (Index j = 0; j + h <= order; ++j)
                    acov[h] += ma_coeffs[j] * ma_coeffs[j + h];
            break;
        }
    }
    return acov;
}

std::string NoiseSpec::description() const {
    switch (kind) {
        case Kind::White: return "white(" + format_double(sigma) + ")";
        case Kind::WhiteGrowing: return "white_growing";
        case Kind::MovingAverage: return "moving_average(" + std::to_string(ma_coeffs.size() - 1) + ")";
        case Kind::Banded: return "banded(" + std::to_string(ma_coeffs.size() - 1) + ")";
    }
    return "unknown";
}

TimeSpec TimeSpec::iid() { return {}; }

TimeSpec TimeSpec::ar1(double phi) {
    if (std::abs(phi) >= 1.0)
        throw ArgumentError("TimeSpec::ar1: requires |phi| < 1");
    TimeSpec s;
    s.kind = Kind::Ar1;
    s.phi = phi;
    return s;
}

TimeSpec TimeSpec::sinusoid(double omega) {
    TimeSpec s;
    s.kind = Kind::Sinusoid;
    s.omega = omega;
    return s;
}

double TimeSpec::autocov(Index tau) const {
    switch (kind) {
        case Kind::Iid: return tau == 0 ? 1.0 : 0.0;
        case Kind::Ar1: return std::pow(phi, static_cast<double>(tau));
        case Kind::Sinusoid: return std::cos(omega * static_cast<double>(tau));
    }
    return 0.0;
}

std::string TimeSpec::description() const {
    switch (kind) {
        case Kind::Iid: return "iid";
        case Kind::Ar1: return "ar1(" + format_double(phi) + ")";
        case Kind::Sinusoid: return "sinusoid(" + format_double(omega) + ")";
    }
    return "unknown";
}

namespace {

// One replicate column of the noise process. Counters are laid out so that any
// (column, position) pair maps to a unique counter regardless of call order.
Vector noise_column(const NoiseSpec& spec, const CounterRng& rng, Index n, Index column) {
    Vector y(n);
    switch (spec.kind) {
        case NoiseSpec::Kind::White:
            for (Index k = 0; k < n; ++k)
                y[k] = spec.sigma * rng.normal(static_cast<std::uint64_t>(column) * n + k);
            break;
        case NoiseSpec::Kind::WhiteGrowing:
            for (Index k = 0; k < n; ++k)
                y[k] = std::sqrt(static_cast<double>(k + 1)) *
                       rng.normal(static_cast<std::uint64_t>(column) * n + k);
            break;
        case NoiseSpec::Kind::MovingAverage:
        case NoiseSpec::Kind::Banded: {
            const Index order = spec.ma_coeffs.size() - 1;
            const Index stride = n + order;
            Vector eps(stride);
            for (Index k = 0; k < stride; ++k)
                eps[k] = rng.normal(static_cast<std::uint64_t>(column) * stride + k);
            for (Index k = 0; k < n; ++k) {
                double acc = 0.0;
                for (Index j = 0; j <= order; ++j)
                    acc += spec.ma_coeffs[j] * eps[k + order - j];
                y[k] = acc;
            }
            break;
        }
    }
    return y;
}

}  // namespace

AggregateSample gen_aggregate(const std::vector<LoadingSpec>& specs, Index n, Index m,
                              std::uint64_t seed) {
    if (specs.empty())
        throw ArgumentError("gen_aggregate: need at least one loading spec");
    if (n < 1 || m < 1)
        throw ArgumentError("gen_aggregate: n and m must be >= 1");
    for (std::size_t i = 0; i < specs.size(); ++i)
        for (std::size_t j = i + 1; j < specs.size(); ++j)
            if (specs[i] == specs[j])
                throw ArgumentError("gen_aggregate: loading specs must be distinct");

    const Index q = static_cast<Index>(specs.size());
    Matrix loadings(n, q);
    for (Index i = 0; i < q; ++i)
        loadings.col(i) = specs[static_cast<std::size_t>(i)].materialize(n);

    const CounterRng rng(seed, kFactorStream);
    Matrix factors(q, m);
    for (Index i = 0; i < q; ++i)
        for (Index col = 0; col < m; ++col)
            factors(i, col) = rng.normal(static_cast<std::uint64_t>(i) * m + col);

    Matrix data = loadings * factors;
    return {SampleEnsemble(std::move(data), EnsembleKind::Replicates,
                           "aggregate seed=" + std::to_string(seed)),
            std::move(factors)};
}

SampleEnsemble gen_idiosyncratic(const NoiseSpec& spec, Index n, Index m, std::uint64_t seed) {
    if (n < 1 || m < 1)
        throw ArgumentError("gen_idiosyncratic: n and m must be >= 1");
    const CounterRng rng(seed, kNoiseStream);
    Matrix data(n, m);
    for (Index col = 0; col < m; ++col)
        data.col(col) = noise_column(spec, rng, n, col);
    return SampleEnsemble(std::move(data), EnsembleKind::Replicates,
                          spec.description() + " seed=" + std::to_string(seed));
}

PDSample gen_pd_stationary(const std::vector<PDLine>& lines, Index n, Index m,
                           std::uint64_t seed) {
    if (n < 1 || m < 1)
        throw ArgumentError("gen_pd_stationary: n and m must be >= 1");
    constexpr double pi = 3.14159265358979323846;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].omega < 0.0 || lines[i].omega >= pi)
            throw ArgumentError("gen_pd_stationary: frequencies must lie in [0, pi)");
        for (std::size_t j = i + 1; j < lines.size(); ++j)
            if (lines[i].omega == lines[j].omega)
                throw ArgumentError("gen_pd_stationary: duplicate frequency");
    }

    const CounterRng rng(seed, kAmplitudeStream);
    PDLineModel truth;
    Matrix data = Matrix::Zero(n, m);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const double sd = std::sqrt(lines[i].amplitude_var);
        PDLineModel::Line line;
        line.omega = lines[i].omega;
        line.v = Vector(m);
        line.w = Vector(m);
        for (Index col = 0; col < m; ++col) {
            line.v[col] = sd * rng.normal((2 * i) * static_cast<std::uint64_t>(m) + col);
            line.w[col] = sd * rng.normal((2 * i + 1) * static_cast<std::uint64_t>(m) + col);
        }
        for (Index col = 0; col < m; ++col)
            for (Index k = 0; k < n; ++k) {
                const double arg = line.omega * static_cast<double>(k + 1);
                data(k, col) += line.v[col] * std::cos(arg) + line.w[col] * std::sin(arg);
            }
        truth.lines.push_back(std::move(line));
    }
    std::sort(truth.lines.begin(), truth.lines.end(),
              [](const auto& a, const auto& b) { return a.omega < b.omega; });
    return {SampleEnsemble(std::move(data), EnsembleKind::Replicates,
                           "pd seed=" + std::to_string(seed)),
            std::move(truth)};
}

Vector pd_signal(const PDLineModel& model, Index n, Index replicate) {
    Vector y = Vector::Zero(n);
    for (const auto& line : model.lines) {
        const double v = line.v.size() > replicate ? line.v[replicate] : 0.0;
        const double w = line.w.size() > replicate ? line.w[replicate] : 0.0;
        for (Index k = 0; k < n; ++k) {
            const double arg = line.omega * static_cast<double>(k + 1);
            y[k] += v * std::cos(arg) + w * std::sin(arg);
        }
    }
    return y;
}

FieldSample gen_separable_field(const std::vector<LoadingSpec>& space_loadings,
                                const std::optional<NoiseSpec>& space_noise,
                                const TimeSpec& time, Index n, Index t, std::uint64_t seed) {
    if (n < 1)
        throw ArgumentError("gen_separable_field: n must be >= 1");
    if (t < 1)
        throw ArgumentError("gen_separable_field: t must be >= 1");

    const CounterRng space_rng(seed, kSpaceStream);
    const Index q = static_cast<Index>(space_loadings.size());
    Vector z = space_rng.normal_vector(0, q);
    Vector v = Vector::Zero(n);
    for (Index i = 0; i < q; ++i)
        v += space_loadings[static_cast<std::size_t>(i)].materialize(n) * z[i];
    if (space_noise)
        v += noise_column(*space_noise, CounterRng(seed, kNoiseStream), n, 0);

    const CounterRng time_rng(seed, kTimeStream);
    Vector u(t);
    switch (time.kind) {
        case TimeSpec::Kind::Iid:
            u = time_rng.normal_vector(0, t);
            break;
        case TimeSpec::Kind::Ar1: {
            u[0] = time_rng.normal(0);
            const double innov = std::sqrt(1.0 - time.phi * time.phi);
            for (Index s = 1; s < t; ++s)
                u[s] = time.phi * u[s - 1] + innov * time_rng.normal(s);
            break;
        }
        case TimeSpec::Kind::Sinusoid: {
            const double phase = 6.283185307179586 * time_rng.uniform(0);
            for (Index s = 0; s < t; ++s)
                u[s] = std::sqrt(2.0) * std::sin(time.omega * static_cast<double>(s + 1) + phase);
            break;
        }
    }

    SeparableField field(v * u.transpose(), "field seed=" + std::to_string(seed));

    // Declared covariance models when both components are shift-stationary.
    const bool stationary_space =
        std::all_of(space_loadings.begin(), space_loadings.end(),
                    [](const LoadingSpec& s) { return s.family == LoadingSpec::Family::Constant; }) &&
        (!space_noise || space_noise->bounded());
    if (stationary_space) {
        double loading_product = 0.0;
        for (const auto& s : space_loadings)
            loading_product += s.param * s.param;
        Vector noise_acov;
        if (space_noise)
            noise_acov = space_noise->autocov(std::min<Index>(n - 1, 64));
        field.space_cov = [loading_product, noise_acov](Index k, Index j) {
            const Index h = std::abs(k - j);
            double c = loading_product;
            if (h < noise_acov.size())
                c += noise_acov[h];
            return c;
        };
        field.time_cov = [time](Index a, Index b) { return time.autocov(std::abs(a - b)); };
    }

    return {std::move(field), std::move(v), std::move(u), std::move(z)};
}

CovarianceSupplier analytic_covariance(const std::vector<LoadingSpec>& specs,
                                       const std::optional<NoiseSpec>& noise, Index max_n) {
    if (specs.empty() && !noise)
        throw ArgumentError("analytic_covariance: need loadings or noise");
    return {CovarianceSupplier::Source::Analytic, max_n, [specs, noise](Index n) {
                Matrix sigma = Matrix::Zero(n, n);
                for (const auto& s : specs) {
                    const Vector f = s.materialize(n);
                    sigma.selfadjointView<Eigen::Lower>().rankUpdate(f);
                }
                sigma.triangularView<Eigen::StrictlyUpper>() =
                    sigma.triangularView<Eigen::StrictlyLower>().transpose();
                if (noise) {
                    if (noise->kind == NoiseSpec::Kind::WhiteGrowing) {
                        for (Index k = 0; k < n; ++k)
                            sigma(k, k) += static_cast<double>(k + 1);
                    } else {
                        const Vector acov = noise->autocov(n - 1);
                        for (Index i = 0; i < n; ++i)
                            for (Index j = 0; j < n; ++j)
                                sigma(i, j) += acov[std::abs(i - j)];
                    }
                }
                return sigma;
            }};
}

std::pair<LoadingSpec, NoiseSpec> exchangeable_model(double sigma2, double rho) {
    if (rho <= 0.0 || sigma2 <= rho)
        throw ArgumentError("exchangeable_model: requires 0 < rho < sigma2");
    return {LoadingSpec::constant(std::sqrt(rho)), NoiseSpec::white(std::sqrt(sigma2 - rho))};
}

}  // namespace gfa
