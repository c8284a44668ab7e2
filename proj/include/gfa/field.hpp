#pragma once

#include <vector>

#include "gfa/spectral.hpp"
#include "gfa/stationary.hpp"
#include "gfa/types.hpp"

namespace gfa {

/// Spatial autocovariance of one time snapshot y(., t0), biased estimator.
/// For a separable field this equals u(t0)^2 times the space autocovariance.
AutocovEstimate snapshot_autocov(const SeparableField& field, Index t0, Index max_lag);

enum class FlockVerdict { Flock, NoFlock };

struct FlockParams {
    std::vector<Index> grid;        ///< detection grid; empty = ratio-2 grid up to N/2
    int grid_points = 5;
    int top_m = 6;
    DetectionParams detection;
    double sample_psd_slack = 0.1;  ///< most negative eigenvalue allowed, as a fraction of lambda_1
    Tolerances tol;
};

struct FlockExtraction {
    int q = 0;
    FlockVerdict verdict = FlockVerdict::NoFlock;
    Matrix loadings;     ///< N x q
    Matrix factors;      ///< q x T, unit sample variance per row
    Matrix flock;        ///< N x T
    Matrix residual;     ///< field - flock
    GrowthReport growth;
    Vector pooled_lags;  ///< pooled spatial lag curve the detection ran on
};

/// Flocking extraction pipeline.
///
/// Per-snapshot spatial lag curves are estimated with the per-lag (unbiased)
/// normalization, divided by the snapshot variance so the time component
/// cancels, averaged over t and rescaled by the mean snapshot power. Detection
/// and loading extraction run on the resulting Toeplitz space covariance; the
/// time factors are realized by spatial averaging, x(t) = A y(., t), scaled to
/// unit sample variance per factor. flock = F x, residual = field - flock.
/// q = 0 is a valid outcome and yields an empty flock with verdict NoFlock.
FlockExtraction extract_flock(const SeparableField& field, const FlockParams& params = {});

/// Separability defect in [0, 1]: relative rank-one residual of the matrix of
/// sample lag products M(h, tau) = mean_k,t y(k+h, t+tau) y(k, t) over the
/// sub-grid h < space_lags, tau < time_lags (each at most 20). A separable
/// covariance makes M a product a(h) b(tau), hence exactly rank one.
double separability_check(const SeparableField& field, Index space_lags = 10,
                          Index time_lags = 10);

}  // namespace gfa
