#include "gfa/field.hpp"

#include <cmath>

namespace gfa {

AutocovEstimate snapshot_autocov(const SeparableField& field, Index t0, Index max_lag) {
    if (t0 < 0 || t0 >= field.time_size())
        throw ArgumentError("snapshot_autocov: t0 out of range");
    if (max_lag >= field.space_size())
        throw ArgumentError("snapshot_autocov: max_lag must be < N");
    return sample_autocov(field.data.col(t0), max_lag, AutocovKind::Biased);
}

namespace {

// Pooled spatial lag curve: per-snapshot unbiased lags normalized by the
// snapshot variance (the time factor cancels exactly for a separable field),
// averaged over t, then rescaled by the mean snapshot power. The per-lag
// normalization keeps non-decaying space covariances free of the linear taper
// the biased estimator would imprint on them.
Vector pooled_space_lags(const Matrix& data, Index max_lag) {
    const Index n = data.rows();
    const Index t = data.cols();
    Vector acc = Vector::Zero(max_lag + 1);
    double power = 0.0;
    Index used = 0;
    for (Index s = 0; s < t; ++s) {
        const auto col = data.col(s);
        const double lag0 = col.squaredNorm() / static_cast<double>(n);
        if (lag0 <= 0.0)
            continue;
        for (Index h = 0; h <= max_lag; ++h) {
            const double dot = col.tail(n - h).dot(col.head(n - h));
            acc[h] += dot / static_cast<double>(n - h) / lag0;
        }
        power += lag0;
        ++used;
    }
    if (used == 0)
        throw NumericalError("extract_flock: every snapshot has zero variance");
    return acc * (power / static_cast<double>(used * used));
}

}  // namespace

FlockExtraction extract_flock(const SeparableField& field, const FlockParams& params) {
    const Index n = field.space_size();
    const Index t = field.time_size();

    // Detection runs on truncations up to N/2 by default: the per-lag estimates
    // near the maximal lag rest on very few products, and their noise would
    // masquerade as eigenvalue growth. Loading extraction below still uses the
    // full N x N matrix, where the top eigenpairs are insensitive to that noise.
    std::vector<Index> grid = params.grid.empty()
                                  ? default_grid(std::max<Index>(n / 2, 1), params.grid_points)
                                  : params.grid;
    if (grid.back() > n)
        throw ArgumentError("extract_flock: grid exceeds the field's space size");
    const int top_m = std::min<Index>(params.top_m, grid.front());

    FlockExtraction out;
    out.pooled_lags = pooled_space_lags(field.data, n - 1);

    const CovarianceSupplier supplier =
        toeplitz_supplier(out.pooled_lags, CovarianceSupplier::Source::Sample);
    const EigenProfile profile = eigen_profile(supplier, grid, top_m, params.tol);
    out.growth = detect_factor_count(profile, params.detection);
    out.q = out.growth.q;

    if (out.q == 0) {
        out.verdict = FlockVerdict::NoFlock;
        out.loadings = Matrix::Zero(n, 0);
        out.factors = Matrix::Zero(0, t);
        out.flock = Matrix::Zero(n, t);
        out.residual = field.data;
        return out;
    }

    // The estimated Toeplitz matrix sits in the sample-statistical regime: its
    // bulk carries lag-estimation noise, so the PSD sanity check is taken
    // relative to the dominant eigenvalue rather than the entry scale.
    const Matrix sigma = supplier.eval(n);
    const Vector spectrum = detail::symmetric_eigenvalues(sigma);
    const double lambda_top = spectrum.maxCoeff();
    const double lambda_min = spectrum.minCoeff();
    if (lambda_top <= 0.0 || lambda_min < -params.sample_psd_slack * lambda_top)
        throw NumericalError("extract_flock: estimated space covariance is too indefinite");
    Tolerances tol = params.tol;
    tol.psd_rel = std::max(
        tol.psd_rel, 1.01 * std::max(0.0, -lambda_min) /
                         std::max(sigma.cwiseAbs().maxCoeff(), 1e-300));
    out.loadings = extract_loadings(sigma, out.q, tol);

    const AveragingOperator ops = build_averaging_sequences(out.loadings, params.tol);
    Matrix raw = ops.a * field.data;  // q x T
    out.factors.resize(out.q, t);
    for (Index i = 0; i < out.q; ++i) {
        const double rms = std::sqrt(raw.row(i).squaredNorm() / static_cast<double>(t));
        if (rms <= 0.0)
            throw NumericalError("extract_flock: realized factor has zero variance");
        out.factors.row(i) = raw.row(i) / rms;
    }

    out.flock = out.loadings * out.factors;
    out.residual = field.data - out.flock;
    // Store the flock as the exact complement of the stored residual so the
    // recombination error is at most one rounding step per entry.
    out.flock = field.data - out.residual;
    out.verdict = FlockVerdict::Flock;
    return out;
}

double separability_check(const SeparableField& field, Index space_lags, Index time_lags) {
    if (space_lags < 1 || space_lags > 20 || time_lags < 1 || time_lags > 20)
        throw ArgumentError("separability_check: sub-grid sizes must lie in [1, 20]");
    const Index n = field.space_size();
    const Index t = field.time_size();
    const Index p = std::min(space_lags, n);
    const Index s = std::min(time_lags, t);

    Matrix m(p, s);
    for (Index h = 0; h < p; ++h) {
        for (Index u = 0; u < s; ++u) {
            const Index nk = n - h;
            const Index nt = t - u;
            m(h, u) = field.data.block(h, u, nk, nt)
                          .cwiseProduct(field.data.block(0, 0, nk, nt))
                          .sum() /
                      static_cast<double>(nk * nt);
        }
    }

    Eigen::JacobiSVD<Matrix> svd(m);
    const Vector& sv = svd.singularValues();
    const double total = sv.squaredNorm();
    if (total <= 0.0)
        return 0.0;
    const double defect_sq = 1.0 - sv[0] * sv[0] / total;
    return std::sqrt(std::max(defect_sq, 0.0));
}

}  // namespace gfa
