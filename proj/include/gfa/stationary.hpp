#pragma once

#include <optional>
#include <vector>

#include "gfa/types.hpp"

namespace gfa {

enum class AutocovKind { Biased, Unbiased };

/// Estimated autocovariance sequence of a single stationary realization.
///
/// The biased estimator divides every lag by N, which makes the full circulant
/// embedding (and hence every Toeplitz truncation) positive semidefinite; the
/// unbiased estimator divides by N - h.
struct AutocovEstimate {
    Vector lags;    ///< sigma(0..L)
    Index n_used = 0;
    AutocovKind kind = AutocovKind::Biased;

    Index max_lag() const { return lags.size() - 1; }

    /// Materializes the n x n Toeplitz matrix from the lags (n <= L + 1).
    Matrix toeplitz(Index n) const;
};

AutocovEstimate sample_autocov(const Vector& series, Index max_lag,
                               AutocovKind kind = AutocovKind::Biased);

/// Smoothed-periodogram density estimate with operator-norm cross-check.
struct SpectralDiagnostic {
    Vector freq;            ///< evaluation grid on [0, pi]
    Vector density;         ///< Bartlett-windowed estimate
    double sup_density = 0.0;
    double symbol_sup = 0.0;    ///< sup of the unwindowed truncated symbol
    double lambda1 = 0.0;       ///< top eigenvalue of a Toeplitz truncation
    Index lambda1_n = 0;        ///< truncation size used for lambda1
    bool line_suspect = false;  ///< sup grows with the window: spectral line, not a density
    double window_growth = 0.0; ///< sup(window) / sup(window/2)
};

/// Reports the sup of the windowed density over a frequency grid together with
/// lambda_1 of toeplitz(n), checking lambda_1 <= symbol_sup * (1 + tol.szego).
/// A sup that grows ~linearly with the window length flags LINE-SUSPECT.
SpectralDiagnostic spectral_density_diagnostic(const AutocovEstimate& acov, Index window,
                                               Index lambda_n = 0, const Tolerances& tol = {});

/// Periodogram peak detection with 3-point complex interpolation of the peak
/// bin. Returns at most max_lines frequencies, ascending; requires N >= 64.
/// threshold is the multiple of the periodogram median a peak must exceed.
std::vector<double> detect_lines(const Vector& series, int max_lines, double threshold = 20.0);

/// Sinusoid amplitude estimates from averaging functionals at frequency omega:
/// v = (2/n) sum cos(omega k) y(k), w = (2/n) sum sin(omega k) y(k); the factor
/// two compensates the 1/2 limit of the sin^2 / cos^2 time averages.
/// The sine channel is disengaged (nullopt) at omega = 0 and within 4*pi/n of
/// the interval endpoints, where sin(omega k) degenerates; at omega = 0 the
/// cosine channel reduces to the plain mean.
struct AmplitudePair {
    double v = 0.0;
    std::optional<double> w;
};

AmplitudePair recover_amplitudes(const Vector& series, double omega, Index n);

/// Sine-channel amplitude; throws ArgumentError where the channel is excluded.
double recover_sin_amplitude(const Vector& series, double omega, Index n);

/// Purely-deterministic / purely-nondeterministic split at the given line
/// frequencies: pd(k) = sum_i v_i cos(omega_i k) + w_i sin(omega_i k) with
/// amplitudes recovered at the full window, pnd = series - pd.
struct WoldSplit {
    Vector pd;
    Vector pnd;
    PDLineModel model;
    std::vector<double> incomplete;  ///< frequencies where the residual is still peaked
};

WoldSplit wold_split(const Vector& series, std::vector<double> lines, double threshold = 20.0);

/// Periodogram of a series evaluated at one arbitrary frequency.
double periodogram_at(const Vector& series, double omega);

/// Median of the FFT-grid periodogram (DC excluded).
double periodogram_median(const Vector& series);

}  // namespace gfa
