#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gfa {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Invalid argument or violated precondition.
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Numerical failure: loss of rank, PSD violation, non-finite data, and the like.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Central tolerance configuration.
///
/// Machine-precision checks (symmetry, orthogonality, algebraic identities) and
/// sample-statistical checks (factor covariances estimated from finitely many
/// replicates) live on very different scales, so they are kept as separate knobs.
struct Tolerances {
    double psd_rel = 1e-8;      ///< PSD slack relative to the max |entry| of the matrix
    double weyl_rel = 1e-8;     ///< eigenvalue monotonicity slack, relative
    double orth = 1e-10;        ///< orthonormality defect of eigenvector blocks
    double num = 1e-12;         ///< exact algebraic identities (A*F = R, norms)
    double rank_rel = 1e-10;    ///< rank cutoff relative to the leading eigenvalue
    double factor_cov = 0.1;    ///< sample covariance of factors vs identity
    double factor_cross = 0.1;  ///< factor vs residual sample cross-covariance
    double szego = 1e-6;        ///< operator norm vs spectral-sup slack
};

enum class EnsembleKind {
    Replicates,  ///< columns are i.i.d. draws of the cross-sectional vector
    TimeSeries   ///< columns are consecutive time samples of the same vector
};

/// A matrix of observations: rows = cross-section index k = 1..N,
/// columns = replicates or time points. Immutable after construction.
struct SampleEnsemble {
    Matrix data;
    EnsembleKind kind;
    std::string seed_info;  ///< optional provenance of synthetic data

    SampleEnsemble(Matrix d, EnsembleKind k, std::string info = {});

    Index size() const { return data.rows(); }
    Index replicates() const { return data.cols(); }
};

/// Serves nested leading principal submatrices Sigma_n of a covariance.
///
/// eval(n) must return the top-left n x n block of one fixed underlying matrix:
/// eval(n) is the leading block of eval(n') entrywise for n < n'.
class CovarianceSupplier {
public:
    enum class Source { Analytic, Sample };

    CovarianceSupplier(Source source, Index max_n, std::function<Matrix(Index)> eval)
        : source_(source), max_n_(max_n), eval_(std::move(eval)) {}

    Matrix eval(Index n) const;
    Index max_n() const { return max_n_; }
    Source source() const { return source_; }

private:
    Source source_;
    Index max_n_;
    std::function<Matrix(Index)> eval_;
};

CovarianceSupplier identity_supplier(Index max_n);

/// Exchangeable covariance: sigma^2 on the diagonal, rho off it. Requires sigma^2 > |rho|.
CovarianceSupplier exchangeable_supplier(double sigma2, double rho, Index max_n);

/// Serves leading blocks of a fixed dense matrix.
CovarianceSupplier dense_supplier(Matrix sigma,
                                  CovarianceSupplier::Source source = CovarianceSupplier::Source::Analytic);

/// Symmetric Toeplitz supplier built from a lag sequence (fast path for
/// autocovariance-backed suppliers: no full matrix is stored).
CovarianceSupplier toeplitz_supplier(Vector lags,
                                     CovarianceSupplier::Source source = CovarianceSupplier::Source::Sample);

/// Sample covariance (1/M) Y Y^T of a zero-mean replicate ensemble.
CovarianceSupplier sample_covariance_supplier(const SampleEnsemble& ensemble);

struct CovarianceValidation {
    Index n = 0;
    double symmetry_defect = 0.0;
    double min_eigenvalue = 0.0;
    bool nested = true;  ///< eval(n/2) equals the leading block of eval(n)
};

/// Validates Sigma_n: finite entries, symmetry, PSD up to tolerance, nestedness
/// against the n/2 truncation. Throws NumericalError on a hard violation.
CovarianceValidation validate_covariance(const CovarianceSupplier& c, Index n,
                                         const Tolerances& tol = {});

/// Top-m eigenpairs of Sigma_n along an increasing grid of truncation sizes.
struct EigenProfile {
    std::vector<Index> grid;       ///< n_1 < ... < n_G
    Matrix values;                 ///< G x m, descending within each row
    std::vector<Matrix> vectors;   ///< per grid point: n_g x m, orthonormal columns
};

enum class GrowthClass { Diverging, Bounded };

struct GrowthEntry {
    int index = 0;                 ///< eigenvalue index k (1-based)
    std::vector<double> ratios;    ///< lambda_{n_{g+1},k} / lambda_{n_g,k}
    double mean_ratio = 0.0;
    double value_at_max = 0.0;     ///< lambda at the largest grid point
    GrowthClass cls = GrowthClass::Bounded;
};

/// Outcome of the diverging-eigenvalue count detection.
struct GrowthReport {
    std::vector<GrowthEntry> entries;
    int q = 0;
    bool ambiguous = false;        ///< diverging indices are not a leading prefix
    double gamma = 0.0;            ///< growth-ratio threshold used
    double tau_multiplier = 0.0;   ///< cap multiplier on the trailing-eigenvalue median
    double tau = 0.0;              ///< resolved absolute cap
    double trailing_median = 0.0;
};

enum class StrongLiVerdict { Strong, Weak };

struct StrongLiReport {
    std::vector<Index> grid;
    Matrix residual_norms;              ///< G x q, ||f~_i^n||_2
    std::vector<double> growth_rates;   ///< per factor, geometric mean ratio per grid step
    StrongLiVerdict verdict = StrongLiVerdict::Weak;
    bool collinear = false;
    double gamma_sli = 0.0;
};

/// Result of a generalized factor analysis of a covariance sequence.
struct GFADecomposition {
    int q = 0;
    Matrix loadings;       ///< N x q, columns ordered by eigenvalue
    Matrix idio_cov;       ///< Sigma_N - F F^T
    GrowthReport growth;
    StrongLiReport sli;
};

/// A single weight vector of an averaging family (implicitly zero beyond its length).
struct AveragingSequence {
    Vector weights;
    double norm2 = 0.0;
    std::string label;

    AveragingSequence(Vector w, std::string lbl);
};

/// Family of averaging sequences indexed by the truncation size n.
using AveragingFamily = std::function<AveragingSequence(Index n)>;

AveragingFamily arithmetic_mean_family();                    // (1/n) (1,...,1)
AveragingFamily unit_spike_family();                         // (1/sqrt(n)) e_n
AveragingFamily shifted_tail_family(Vector base);            // a_n(k) = base(k+n)
AveragingFamily sinusoid_family(double omega, bool sine);    // (1/n) sin/cos(omega k)

/// Realized factor split of an ensemble: data = aggregate + idiosyncratic.
struct FactorRealization {
    Matrix factors;        ///< q x M, orthonormalized factor samples
    Matrix aggregate;      ///< N x M
    Matrix idiosyncratic;  ///< N x M
    Matrix r;              ///< q x q unit-diagonal upper-triangular from the Q-R step
};

/// Random-amplitude sinusoid model of the purely deterministic component.
struct PDLineModel {
    struct Line {
        double omega = 0.0;  ///< frequency in [0, pi)
        Vector v;            ///< cosine amplitudes, one per replicate
        Vector w;            ///< sine amplitudes (empty when unavailable, e.g. omega = 0)
    };
    std::vector<Line> lines;

    int nu() const { return static_cast<int>(lines.size()); }
};

/// N x T space-time sample array with optional declared component covariances.
struct SeparableField {
    Matrix data;  ///< y(k, t): rows = space index, columns = time
    std::function<double(Index, Index)> space_cov;  ///< optional sigma_v(k, j)
    std::function<double(Index, Index)> time_cov;   ///< optional sigma_u(t, s)
    std::string seed_info;

    explicit SeparableField(Matrix d, std::string info = {});

    Index space_size() const { return data.rows(); }
    Index time_size() const { return data.cols(); }

    /// With both model covariances declared, checks on a small sub-grid that the
    /// sample lag products factor as sigma_v * sigma_u up to one free scale.
    /// Returns the relative defect, or nullopt when a model is missing.
    std::optional<double> declared_separability_defect(Index space_lags = 6,
                                                       Index time_lags = 6) const;
};

namespace detail {

/// Max |a - a^T| entry; accepts any dense expression.
template <typename Derived>
double symmetry_defect(const Eigen::MatrixBase<Derived>& a) {
    return (a.derived() - a.derived().transpose()).cwiseAbs().maxCoeff();
}

/// Eigenvalues of a symmetric matrix, ascending. Falls back to an SVD with
/// sign recovery when the tridiagonal iteration stalls on a highly degenerate
/// spectrum.
Vector symmetric_eigenvalues(const Matrix& s);

}  // namespace detail

}  // namespace gfa
