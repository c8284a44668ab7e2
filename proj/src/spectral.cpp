#include "gfa/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace gfa {
namespace {

// First component with |x| above the noise floor decides the sign.
void apply_sign_convention(Eigen::Ref<Matrix> vectors) {
    for (Index j = 0; j < vectors.cols(); ++j) {
        for (Index i = 0; i < vectors.rows(); ++i) {
            const double x = vectors(i, j);
            if (std::abs(x) > 1e-10) {
                if (x < 0.0)
                    vectors.col(j) = -vectors.col(j);
                break;
            }
        }
    }
}

bool lex_less(const Vector& a, const Vector& b) {
    for (Index i = 0; i < a.size(); ++i) {
        if (a[i] < b[i]) return true;
        if (a[i] > b[i]) return false;
    }
    return false;
}

// Top-m eigenpairs, descending, sign convention applied, near-ties ordered by
// the sign-fixed eigenvector's lexicographic order. Falls back to an SVD with
// sign recovery when the tridiagonal iteration stalls on a degenerate spectrum.
void top_eigenpairs(const Matrix& sigma, int m, double tie_rel, Vector& values, Matrix& vectors,
                    double* min_eigenvalue = nullptr) {
    const Index n = sigma.rows();
    values.resize(m);
    vectors.resize(n, m);
    Eigen::SelfAdjointEigenSolver<Matrix> es(sigma);
    if (es.info() == Eigen::Success) {
        if (min_eigenvalue)
            *min_eigenvalue = es.eigenvalues().minCoeff();
        for (int k = 0; k < m; ++k) {
            values[k] = es.eigenvalues()[n - 1 - k];
            vectors.col(k) = es.eigenvectors().col(n - 1 - k);
        }
    } else {
        Eigen::BDCSVD<Matrix> svd(sigma, Eigen::ComputeThinU | Eigen::ComputeThinV);
        std::vector<std::pair<double, Index>> signed_values(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i) {
            const double sign =
                svd.matrixU().col(i).dot(svd.matrixV().col(i)) < 0.0 ? -1.0 : 1.0;
            signed_values[static_cast<std::size_t>(i)] = {sign * svd.singularValues()[i], i};
        }
        std::sort(signed_values.begin(), signed_values.end(),
                  [](const auto& a, const auto& b) { return a.first > b.first; });
        if (min_eigenvalue)
            *min_eigenvalue = signed_values.back().first;
        for (int k = 0; k < m; ++k) {
            values[k] = signed_values[static_cast<std::size_t>(k)].first;
            vectors.col(k) = svd.matrixU().col(signed_values[static_cast<std::size_t>(k)].second);
        }
    }
    apply_sign_convention(vectors);
    // Deterministic order within tied groups.
    for (int pass = 0; pass + 1 < m; ++pass) {
        for (int k = 0; k + 1 < m; ++k) {
            const double scale = std::max({std::abs(values[k]), std::abs(values[k + 1]), 1.0});
            if (std::abs(values[k] - values[k + 1]) <= tie_rel * scale &&
                lex_less(vectors.col(k + 1), vectors.col(k))) {
                std::swap(values[k], values[k + 1]);
                vectors.col(k).swap(vectors.col(k + 1));
            }
        }
    }
}

double median(std::vector<double> v) {
    const std::size_t h = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + h, v.end());
    double hi = v[h];
    if (v.size() % 2 == 0) {
        std::nth_element(v.begin(), v.begin() + h - 1, v.end());
        return 0.5 * (v[h - 1] + hi);
    }
    return hi;
}

Matrix inverse_sqrt_spd(const Matrix& s, double rank_rel, const char* what) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(s);
    const Vector& d = es.eigenvalues();
    const double dmax = d.maxCoeff();
    if (dmax <= 0.0 || d.minCoeff() <= rank_rel * dmax)
        throw NumericalError(std::string(what) + ": matrix is numerically singular");
    const Vector inv_root = d.array().sqrt().inverse();
    return es.eigenvectors() * inv_root.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

std::vector<Index> default_grid(Index n_max, int points) {
    if (n_max < 1 || points < 1)
        throw ArgumentError("default_grid: invalid parameters");
    std::vector<Index> grid(points);
    Index n = n_max;
    for (int i = points - 1; i >= 0; --i) {
        grid[i] = std::max<Index>(n, 1);
        n /= 2;
    }
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

EigenProfile eigen_profile(const CovarianceSupplier& c, std::span<const Index> grid, int top_m,
                           const Tolerances& tol) {
    if (grid.empty())
        throw ArgumentError("eigen_profile: empty grid");
    if (!std::is_sorted(grid.begin(), grid.end()) ||
        std::adjacent_find(grid.begin(), grid.end()) != grid.end())
        throw ArgumentError("eigen_profile: grid must be strictly increasing");
    if (grid.back() > c.max_n())
        throw ArgumentError("eigen_profile: grid exceeds supplier max_n");
    if (top_m < 1 || top_m > grid.front())
        throw ArgumentError("eigen_profile: top_m must be in [1, min(grid)]");

    EigenProfile profile;
    profile.grid.assign(grid.begin(), grid.end());
    const auto npts = static_cast<Index>(grid.size());
    profile.values.resize(npts, top_m);
    profile.vectors.resize(static_cast<std::size_t>(npts));

    for (Index g = 0; g < npts; ++g) {
        const Matrix sigma = c.eval(grid[static_cast<std::size_t>(g)]);
        Vector values;
        Matrix vectors;
        top_eigenpairs(sigma, top_m, tol.weyl_rel, values, vectors);
        profile.values.row(g) = values.transpose();
        // Orthonormality within the grid point.
        const Matrix gram = vectors.transpose() * vectors;
        if ((gram - Matrix::Identity(top_m, top_m)).cwiseAbs().maxCoeff() > tol.orth)
            throw NumericalError("eigen_profile: eigenvector block lost orthonormality");
        profile.vectors[static_cast<std::size_t>(g)] = std::move(vectors);
    }

    // Eigenvalues of nested principal submatrices are non-decreasing in n.
    for (Index g = 0; g + 1 < npts; ++g)
        for (int k = 0; k < top_m; ++k) {
            const double lo = profile.values(g, k);
            const double hi = profile.values(g + 1, k);
            if (hi < lo - tol.weyl_rel * std::max(std::abs(lo), 1.0))
                throw NumericalError(
                    "eigen_profile: eigenvalue monotonicity violated at n=" +
                    std::to_string(profile.grid[static_cast<std::size_t>(g + 1)]) + ", k=" +
                    std::to_string(k + 1) + " (supplier is not nested)");
        }
    return profile;
}

GrowthReport detect_factor_count(const EigenProfile& profile, const DetectionParams& params) {
    const auto npts = static_cast<Index>(profile.grid.size());
    if (npts < 3)
        throw ArgumentError("detect_factor_count: need at least 3 grid points");
    for (Index g = 0; g + 1 < npts; ++g)
        if (profile.grid[static_cast<std::size_t>(g + 1)] <
            2 * profile.grid[static_cast<std::size_t>(g)])
            throw ArgumentError("detect_factor_count: each grid size must be >= 2x the previous");

    const int m = static_cast<int>(profile.values.cols());
    GrowthReport report;
    report.gamma = params.gamma;
    report.tau_multiplier = params.tau_multiplier;
    report.entries.resize(static_cast<std::size_t>(m));

    // Eigenvalues at numerical zero carry no growth information; their ratios
    // are rounding noise and they are bounded by fiat.
    const double zero_floor = 1e-12 * std::max(profile.values.cwiseAbs().maxCoeff(), 1e-300);

    std::vector<double> trailing;
    for (int k = 0; k < m; ++k) {
        GrowthEntry& e = report.entries[static_cast<std::size_t>(k)];
        e.index = k + 1;
        for (Index g = 0; g + 1 < npts; ++g) {
            const double denom = std::max(profile.values(g, k), 1e-300);
            e.ratios.push_back(profile.values(g + 1, k) / denom);
        }
        e.mean_ratio = std::accumulate(e.ratios.begin(), e.ratios.end(), 0.0) /
                       static_cast<double>(e.ratios.size());
        e.value_at_max = profile.values(npts - 1, k);
        if (e.value_at_max <= zero_floor)
            e.mean_ratio = 1.0;
        if (e.mean_ratio <= params.gamma)
            trailing.push_back(e.value_at_max);
    }

    if (trailing.empty())
        throw NumericalError(
            "detect_factor_count: all tracked eigenvalues diverging; no decomposition "
            "detected at this m (increase the number of tracked eigenvalues)");

    report.trailing_median = median(trailing);
    report.tau = params.tau_multiplier * report.trailing_median;

    for (auto& e : report.entries)
        e.cls = (e.mean_ratio > params.gamma && e.value_at_max > report.tau)
                    ? GrowthClass::Diverging
                    : GrowthClass::Bounded;

    report.q = static_cast<int>(
        std::count_if(report.entries.begin(), report.entries.end(),
                      [](const GrowthEntry& e) { return e.cls == GrowthClass::Diverging; }));
    // Gap condition: diverging indices must be exactly the leading 1..q.
    report.ambiguous = false;
    for (int k = 0; k < report.q; ++k)
        if (report.entries[static_cast<std::size_t>(k)].cls != GrowthClass::Diverging)
            report.ambiguous = true;
    return report;
}

Matrix extract_loadings(const Matrix& sigma, int q, const Tolerances& tol) {
    const Index n = sigma.rows();
    if (sigma.cols() != n)
        throw ArgumentError("extract_loadings: matrix must be square");
    if (q < 1 || q > n)
        throw ArgumentError("extract_loadings: q must be in [1, N]");
    const double scale = std::max(sigma.cwiseAbs().maxCoeff(), 1e-300);
    if (detail::symmetry_defect(sigma) > 1e-8 * scale)
        throw ArgumentError("extract_loadings: matrix is not symmetric");

    Vector values;
    Matrix vectors;
    double min_eigenvalue = 0.0;
    top_eigenpairs(sigma, q, tol.weyl_rel, values, vectors, &min_eigenvalue);
    if (min_eigenvalue < -tol.psd_rel * scale)
        throw NumericalError("extract_loadings: matrix violates the PSD tolerance");
    if (values[q - 1] <= tol.rank_rel * std::max(values[0], 1e-300))
        throw NumericalError("extract_loadings: degenerate factor, eigenvalue " +
                             std::to_string(q) + " is below the rank cutoff");
    return vectors * values.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

StrongLiReport strong_li_diagnostic(const std::vector<Matrix>& loadings_over_grid,
                                    double gamma_sli) {
    if (loadings_over_grid.size() < 2)
        throw ArgumentError("strong_li_diagnostic: need loadings at >= 2 grid sizes");
    const Index q = loadings_over_grid.front().cols();
    if (q < 1)
        throw ArgumentError("strong_li_diagnostic: empty loading matrix");
    for (const auto& f : loadings_over_grid)
        if (f.cols() != q)
            throw ArgumentError("strong_li_diagnostic: factor count must agree across the grid");

    const auto npts = static_cast<Index>(loadings_over_grid.size());
    StrongLiReport report;
    report.gamma_sli = gamma_sli;
    report.residual_norms.resize(npts, q);
    report.grid.resize(static_cast<std::size_t>(npts));

    for (Index g = 0; g < npts; ++g) {
        const Matrix& f = loadings_over_grid[static_cast<std::size_t>(g)];
        report.grid[static_cast<std::size_t>(g)] = f.rows();
        for (Index i = 0; i < q; ++i) {
            if (q == 1) {  // empty projection span
                report.residual_norms(g, i) = f.col(i).norm();
                continue;
            }
            Matrix others(f.rows(), q - 1);
            Index c = 0;
            for (Index j = 0; j < q; ++j)
                if (j != i)
                    others.col(c++) = f.col(j);
            Eigen::ColPivHouseholderQR<Matrix> qr(others);
            qr.setThreshold(1e-12);
            if (qr.rank() < q - 1)
                report.collinear = true;
            const Vector coeff = qr.solve(f.col(i));
            const double residual = (f.col(i) - others * coeff).norm();
            if (residual <= 1e-10 * f.col(i).norm())
                report.collinear = true;
            report.residual_norms(g, i) = residual;
        }
    }

    report.growth_rates.resize(static_cast<std::size_t>(q));
    bool all_grow = true;
    for (Index i = 0; i < q; ++i) {
        const double first = report.residual_norms(0, i);
        const double last = report.residual_norms(npts - 1, i);
        const double rate = (first > 0.0)
                                ? std::pow(last / first, 1.0 / static_cast<double>(npts - 1))
                                : 0.0;
        report.growth_rates[static_cast<std::size_t>(i)] = rate;
        if (rate < gamma_sli)
            all_grow = false;
    }
    report.verdict = (all_grow && !report.collinear) ? StrongLiVerdict::Strong
                                                     : StrongLiVerdict::Weak;
    return report;
}

AveragingOperator build_averaging_sequences(const Matrix& loadings, const Tolerances& tol) {
    const Index n = loadings.rows();
    const Index q = loadings.cols();
    if (q < 1 || n < q)
        throw ArgumentError("build_averaging_sequences: need an N x q loading matrix, N >= q >= 1");

    // Modified Gram-Schmidt with one re-orthogonalization pass; R keeps a unit
    // diagonal so that F = G R exactly.
    Matrix g = loadings;
    Matrix r = Matrix::Identity(q, q);
    for (Index i = 0; i < q; ++i) {
        for (int pass = 0; pass < 2; ++pass) {
            for (Index j = 0; j < i; ++j) {
                const double gj2 = g.col(j).squaredNorm();
                const double proj = g.col(j).dot(g.col(i)) / gj2;
                g.col(i) -= proj * g.col(j);
                r(j, i) += proj;
            }
        }
        if (g.col(i).squaredNorm() <= tol.rank_rel * loadings.col(i).squaredNorm())
            throw NumericalError("build_averaging_sequences: column " + std::to_string(i + 1) +
                                 " is linearly dependent on the preceding columns");
    }

    AveragingOperator ops;
    ops.a.resize(q, n);
    for (Index i = 0; i < q; ++i)
        ops.a.row(i) = g.col(i).transpose() / g.col(i).squaredNorm();

    const Matrix product = ops.a * loadings;
    const double scale = std::max(r.cwiseAbs().maxCoeff(), 1.0);
    if ((product - r).cwiseAbs().maxCoeff() > tol.num * scale * 10.0)
        throw NumericalError("build_averaging_sequences: A*F deviates from R beyond tolerance");

    ops.orthogonal_basis = std::move(g);
    ops.r = std::move(r);
    return ops;
}

FactorRealization realize_factors(const SampleEnsemble& y, const Matrix& loadings,
                                  const AveragingOperator& ops, WhitenMode mode,
                                  const Tolerances& tol) {
    const Index n = y.size();
    const Index m = y.replicates();
    const Index q = loadings.cols();
    if (loadings.rows() != n || ops.a.cols() != n || ops.a.rows() != q)
        throw ArgumentError("realize_factors: dimension mismatch");

    const Matrix z = ops.a * y.data;  // q x M

    Matrix whitener;
    if (mode == WhitenMode::SampleCovariance) {
        if (m < q)
            throw NumericalError("realize_factors: fewer replicates than factors");
        const Matrix cov_z = z * z.transpose() / static_cast<double>(m);
        whitener = inverse_sqrt_spd(cov_z, tol.rank_rel,
                                    "realize_factors: sample covariance of z");
    } else {
        whitener = inverse_sqrt_spd(ops.r * ops.r.transpose(), tol.rank_rel,
                                    "realize_factors: R R^T");
    }

    FactorRealization out;
    out.factors = whitener * z;
    out.aggregate = loadings * ops.r.triangularView<Eigen::Upper>().solve(z);
    out.idiosyncratic = y.data - out.aggregate;
    // Re-express the aggregate as the exact complement of the stored residual,
    // so aggregate + idiosyncratic reproduces the data bit for bit.
    out.aggregate = y.data - out.idiosyncratic;
    out.r = ops.r;
    return out;
}

IdiosyncrasyReport idiosyncrasy_test(const SampleEnsemble& y, const AveragingFamily& family,
                                     std::span<const Index> grid, double decay_factor,
                                     const DetectionParams& params) {
    if (grid.size() < 3)
        throw ArgumentError("idiosyncrasy_test: need at least 3 grid points");
    if (!std::is_sorted(grid.begin(), grid.end()))
        throw ArgumentError("idiosyncrasy_test: grid must be increasing");
    if (grid.back() > y.size())
        throw ArgumentError("idiosyncrasy_test: grid exceeds the ensemble size");

    IdiosyncrasyReport report;
    report.grid.assign(grid.begin(), grid.end());
    report.decay_factor = decay_factor;

    // Finite-replicate correction for the eigenvalue-side check: with M
    // replicates the top sample eigenvalue of even a perfectly bounded noise
    // grows with the dimension like the (1 + sqrt(n/M))^2 bulk edge, so the
    // growth ratios are taken on the edge-normalized statistic.
    const double m = static_cast<double>(y.replicates());
    std::vector<double> corrected;
    for (const Index n : grid) {
        const AveragingSequence a = family(n);
        const Index support = std::min(a.weights.size(), y.size());
        const Eigen::RowVectorXd s =
            a.weights.head(support).transpose() * y.data.topRows(support);
        report.variance.push_back(s.squaredNorm() / static_cast<double>(s.size()));
        report.weight_norms.push_back(a.norm2);
        report.top_eigenvalue.push_back(top_sample_eigenvalue(y.data, n));
        const double edge = 1.0 + std::sqrt(static_cast<double>(n) / m);
        corrected.push_back(report.top_eigenvalue.back() / (edge * edge));
    }

    if (report.weight_norms.back() >= report.weight_norms.front())
        throw ArgumentError("idiosyncrasy_test: weight norms do not decay along the grid");

    const double decay_ok = report.variance.front() /
                            std::max(report.variance.back(), 1e-300);
    double mean_ratio = 0.0;
    for (std::size_t g = 0; g + 1 < corrected.size(); ++g)
        mean_ratio += corrected[g + 1] / std::max(corrected[g], 1e-300);
    mean_ratio /= static_cast<double>(corrected.size() - 1);

    const bool bounded_top = mean_ratio <= params.gamma;
    report.verdict = (decay_ok >= decay_factor && bounded_top)
                         ? IdiosyncrasyVerdict::Consistent
                         : IdiosyncrasyVerdict::NotIdiosyncratic;
    return report;
}

GFADecomposition gfa_decompose(const CovarianceSupplier& c, std::span<const Index> grid,
                               int top_m, const DetectionParams& params, const Tolerances& tol) {
    GFADecomposition out;
    const EigenProfile profile = eigen_profile(c, grid, top_m, tol);
    out.growth = detect_factor_count(profile, params);
    out.q = out.growth.q;

    const Index n = grid.back();
    const Matrix sigma = c.eval(n);
    if (out.q == 0) {
        out.loadings = Matrix::Zero(n, 0);
        out.idio_cov = sigma;
        return out;
    }

    out.loadings = extract_loadings(sigma, out.q, tol);
    out.idio_cov = sigma - out.loadings * out.loadings.transpose();

    std::vector<Matrix> per_grid;
    per_grid.reserve(profile.grid.size());
    for (std::size_t g = 0; g < profile.grid.size(); ++g) {
        const Matrix& v = profile.vectors[g];
        const Vector lam = profile.values.row(static_cast<Index>(g)).head(out.q);
        per_grid.push_back(v.leftCols(out.q) * lam.cwiseMax(0.0).cwiseSqrt().asDiagonal());
    }
    out.sli = strong_li_diagnostic(per_grid);
    return out;
}

double top_sample_eigenvalue(const Matrix& data, Index n) {
    if (n < 1 || n > data.rows())
        throw ArgumentError("top_sample_eigenvalue: n out of range");
    const auto y = data.topRows(n);
    const double m = static_cast<double>(data.cols());
    Vector v = Vector::Ones(n) / std::sqrt(static_cast<double>(n));
    double lambda = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
        Vector av = y * (y.transpose() * v) / m;
        const double next = v.dot(av);
        const double norm = av.norm();
        if (norm <= 0.0)
            return 0.0;
        v = av / norm;
        if (iter > 8 && std::abs(next - lambda) <= 1e-10 * std::max(next, 1.0)) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    return lambda;
}

}  // namespace gfa
