#include "gfa/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include <unsupported/Eigen/FFT>

namespace gfa {
namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<std::complex<double>> fft_of(const Vector& x, Index nfft) {
    std::vector<double> padded(static_cast<std::size_t>(nfft), 0.0);
    for (Index i = 0; i < x.size(); ++i)
        padded[static_cast<std::size_t>(i)] = x[i];
    std::vector<std::complex<double>> out;
    Eigen::FFT<double> fft;
    fft.fwd(out, padded);
    return out;
}

Index next_pow2(Index n) {
    Index p = 1;
    while (p < n)
        p *= 2;
    return p;
}

// Density implied by a (possibly tapered) lag sequence, evaluated on a uniform
// grid over [0, pi] via FFT: S(w) = sigma(0) + 2 sum_h taper(h) sigma(h) cos(w h).
void lag_density(const Vector& lags, const Vector& taper, Index nfft, Vector& freq,
                 Vector& density) {
    Vector tapered = lags.cwiseProduct(taper);
    const auto spec = fft_of(tapered, nfft);
    const Index half = nfft / 2;
    freq.resize(half + 1);
    density.resize(half + 1);
    for (Index j = 0; j <= half; ++j) {
        freq[j] = 2.0 * kPi * static_cast<double>(j) / static_cast<double>(nfft);
        density[j] = 2.0 * spec[static_cast<std::size_t>(j)].real() - tapered[0];
    }
}

}  // namespace

Matrix AutocovEstimate::toeplitz(Index n) const {
    if (n < 1 || n > lags.size())
        throw ArgumentError("AutocovEstimate::toeplitz: n must be in [1, L+1]");
    Matrix t(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            t(i, j) = lags[std::abs(i - j)];
    return t;
}

AutocovEstimate sample_autocov(const Vector& series, Index max_lag, AutocovKind kind) {
    const Index n = series.size();
    if (n < 1)
        throw ArgumentError("sample_autocov: empty series");
    if (max_lag >= n)
        throw ArgumentError("sample_autocov: max_lag must be < N");

    AutocovEstimate est;
    est.n_used = n;
    est.kind = kind;
    est.lags.resize(max_lag + 1);
    for (Index h = 0; h <= max_lag; ++h) {
        const double dot = series.tail(n - h).dot(series.head(n - h));
        const double denom = (kind == AutocovKind::Biased) ? static_cast<double>(n)
                                                           : static_cast<double>(n - h);
        est.lags[h] = dot / denom;
    }
    if (est.lags[0] <= 0.0)
        throw NumericalError("sample_autocov: series has zero variance");
    return est;
}

SpectralDiagnostic spectral_density_diagnostic(const AutocovEstimate& acov, Index window,
                                               Index lambda_n, const Tolerances& tol) {
    const Index max_lag = acov.max_lag();
    if (window < 2 || window > max_lag + 1)
        throw ArgumentError("spectral_density_diagnostic: window must be in [2, L+1]");

    const Index nfft = next_pow2(std::max<Index>(4096, 8 * (max_lag + 1)));

    // Bartlett lag window of the requested length.
    auto bartlett = [&](Index w) {
        Vector taper = Vector::Zero(max_lag + 1);
        for (Index h = 0; h < std::min(w, max_lag + 1); ++h)
            taper[h] = 1.0 - static_cast<double>(h) / static_cast<double>(w);
        return taper;
    };

    SpectralDiagnostic diag;
    Vector density_half;
    Vector freq_half;
    lag_density(acov.lags, bartlett(window), nfft, diag.freq, diag.density);
    lag_density(acov.lags, bartlett(std::max<Index>(window / 2, 2)), nfft, freq_half,
                density_half);
    diag.sup_density = diag.density.maxCoeff();
    diag.window_growth = diag.sup_density / std::max(density_half.maxCoeff(), 1e-300);
    diag.line_suspect = diag.window_growth > 1.5;

    // Untapered truncated symbol bounds every Toeplitz eigenvalue from above.
    Vector symbol, symbol_freq;
    lag_density(acov.lags, Vector::Ones(max_lag + 1), nfft, symbol_freq, symbol);
    diag.symbol_sup = symbol.maxCoeff();

    diag.lambda1_n = (lambda_n > 0) ? std::min(lambda_n, max_lag + 1)
                                    : std::min<Index>(max_lag + 1, 1024);
    Eigen::SelfAdjointEigenSolver<Matrix> es(acov.toeplitz(diag.lambda1_n),
                                             Eigen::EigenvaluesOnly);
    diag.lambda1 = es.eigenvalues().maxCoeff();

    if (diag.lambda1 > diag.symbol_sup * (1.0 + tol.szego) + tol.num)
        throw NumericalError("spectral_density_diagnostic: Toeplitz top eigenvalue exceeds "
                             "the spectral sup bound");
    return diag;
}

namespace {

// Strongest periodogram peak with 3-point interpolation of the fractional bin
// offset in the complex DFT domain. Returns false when nothing exceeds the cut.
bool strongest_peak(const Vector& series, double threshold, double floor, double& omega,
                    double& peak_power) {
    const Index n = series.size();
    const auto spec = fft_of(series, n);
    const Index half = n / 2;
    Vector power(half + 1);
    for (Index j = 0; j <= half; ++j)
        power[j] = std::norm(spec[static_cast<std::size_t>(j)]) / static_cast<double>(n);

    std::vector<double> sorted(power.data() + 1, power.data() + half);
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double med = sorted[sorted.size() / 2];
    const double cut = std::max(threshold * med, floor);

    Index best = 0;
    for (Index j = 1; j < half; ++j)
        if (power[j] > cut && power[j] >= power[j - 1] && power[j] >= power[j + 1] &&
            (best == 0 || power[j] > power[best]))
            best = j;
    if (best == 0)
        return false;

    const std::complex<double> xm = spec[static_cast<std::size_t>(best - 1)];
    const std::complex<double> x0 = spec[static_cast<std::size_t>(best)];
    const std::complex<double> xp = spec[static_cast<std::size_t>(best + 1)];
    double d = ((xm - xp) / (2.0 * x0 - xm - xp)).real();
    d = std::clamp(d, -0.5, 0.5);
    omega = 2.0 * kPi * (static_cast<double>(best) + d) / static_cast<double>(n);
    peak_power = power[best];
    return omega < kPi;
}

// Least-squares sinusoid fit at a fixed frequency, subtracted in place.
void deflate_line(Vector& series, double omega) {
    const Index n = series.size();
    Vector c(n), s(n);
    for (Index k = 0; k < n; ++k) {
        const double arg = omega * static_cast<double>(k + 1);
        c[k] = std::cos(arg);
        s[k] = std::sin(arg);
    }
    Eigen::Matrix2d gram;
    gram << c.squaredNorm(), c.dot(s), c.dot(s), s.squaredNorm();
    if (std::abs(gram.determinant()) < 1e-9 * gram.trace() * gram.trace()) {
        series -= (c.dot(series) / c.squaredNorm()) * c;  // sine channel degenerate
        return;
    }
    const Eigen::Vector2d coeff = gram.inverse() * Eigen::Vector2d(c.dot(series), s.dot(series));
    series -= coeff[0] * c + coeff[1] * s;
}

}  // namespace

std::vector<double> detect_lines(const Vector& series, int max_lines, double threshold) {
    const Index n = series.size();
    if (n < 64)
        throw ArgumentError("detect_lines: need at least 64 samples");
    if (max_lines < 0)
        throw ArgumentError("detect_lines: max_lines must be >= 0");

    // Sequential deflation: take the dominant peak, remove the fitted sinusoid
    // and rescan. Removing a line removes its window sidelobes with it, which
    // a single-pass scan would otherwise report as extra lines. The absolute
    // floor stops the recursion on near-noise-free inputs once only the
    // interpolation remnant (orders of magnitude below any real line) is left.
    const double floor = 1e-7 * series.squaredNorm();
    Vector residual = series;
    std::vector<double> lines;
    for (int round = 0; round < max_lines; ++round) {
        double omega = 0.0, peak = 0.0;
        if (!strongest_peak(residual, threshold, floor, omega, peak))
            break;
        lines.push_back(omega);
        deflate_line(residual, omega);
    }
    std::sort(lines.begin(), lines.end());
    return lines;
}

AmplitudePair recover_amplitudes(const Vector& series, double omega, Index n) {
    if (n < 1 || n > series.size())
        throw ArgumentError("recover_amplitudes: window must be in [1, N]");
    if (omega < 0.0 || omega >= kPi)
        throw ArgumentError("recover_amplitudes: omega must lie in [0, pi)");

    AmplitudePair out;
    if (omega == 0.0) {
        out.v = series.head(n).mean();
        return out;
    }

    double cs = 0.0, sn = 0.0;
    for (Index k = 0; k < n; ++k) {
        const double arg = omega * static_cast<double>(k + 1);
        cs += std::cos(arg) * series[k];
        sn += std::sin(arg) * series[k];
    }
    out.v = 2.0 * cs / static_cast<double>(n);

    const double guard = 4.0 * kPi / static_cast<double>(n);
    if (omega >= guard && omega <= kPi - guard)
        out.w = 2.0 * sn / static_cast<double>(n);
    return out;
}

double recover_sin_amplitude(const Vector& series, double omega, Index n) {
    const AmplitudePair pair = recover_amplitudes(series, omega, n);
    if (!pair.w)
        throw ArgumentError("recover_sin_amplitude: sine channel undefined this close to "
                            "omega = 0 or pi");
    return *pair.w;
}

double periodogram_at(const Vector& series, double omega) {
    std::complex<double> acc(0.0, 0.0);
    for (Index k = 0; k < series.size(); ++k) {
        const double arg = omega * static_cast<double>(k + 1);
        acc += series[k] * std::complex<double>(std::cos(arg), -std::sin(arg));
    }
    return std::norm(acc) / static_cast<double>(series.size());
}

double periodogram_median(const Vector& series) {
    const Index n = series.size();
    const auto spec = fft_of(series, n);
    const Index half = n / 2;
    std::vector<double> power;
    power.reserve(static_cast<std::size_t>(half - 1));
    for (Index j = 1; j < half; ++j)
        power.push_back(std::norm(spec[static_cast<std::size_t>(j)]) / static_cast<double>(n));
    std::nth_element(power.begin(), power.begin() + power.size() / 2, power.end());
    return power[power.size() / 2];
}

WoldSplit wold_split(const Vector& series, std::vector<double> lines, double threshold) {
    const Index n = series.size();
    std::sort(lines.begin(), lines.end());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i] < 0.0 || lines[i] >= kPi)
            throw ArgumentError("wold_split: frequencies must lie in [0, pi)");
        if (i > 0 && lines[i] == lines[i - 1])
            throw ArgumentError("wold_split: duplicate frequency");
    }

    WoldSplit out;
    out.pd = Vector::Zero(n);
    for (const double omega : lines) {
        const AmplitudePair amp = recover_amplitudes(series, omega, n);
        PDLineModel::Line line;
        line.omega = omega;
        line.v = Vector::Constant(1, amp.v);
        if (amp.w)
            line.w = Vector::Constant(1, *amp.w);
        for (Index k = 0; k < n; ++k) {
            const double arg = omega * static_cast<double>(k + 1);
            out.pd[k] += amp.v * std::cos(arg) + (amp.w ? *amp.w * std::sin(arg) : 0.0);
        }
        out.model.lines.push_back(std::move(line));
    }
    out.pnd = series - out.pd;
    // Keep the parts exact complements so recombination differs from the input
    // by at most one rounding step per entry.
    out.pd = series - out.pnd;

    if (!lines.empty()) {
        const double med = periodogram_median(out.pnd);
        // A remnant counts as a missed line only above both the median-relative
        // threshold and an absolute floor of 1e-6 of the input energy; below
        // that it is estimator rounding, not structure.
        const double floor = 1e-6 * series.squaredNorm();
        for (const double omega : lines) {
            const double p = periodogram_at(out.pnd, omega);
            if (p > threshold * std::max(med, 1e-300) && p > floor)
                out.incomplete.push_back(omega);
        }
    }
    return out;
}

}  // namespace gfa
