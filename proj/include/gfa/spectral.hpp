#pragma once

#include <span>
#include <vector>

#include "gfa/types.hpp"

namespace gfa {

/// Geometric grid with ratio 2: {n_max/2^{p-1}, ..., n_max/2, n_max}.
std::vector<Index> default_grid(Index n_max, int points = 5);

/// Top-m eigenpairs of Sigma_n for each n in an increasing grid.
///
/// Eigenvalues are sorted descending; eigenvectors carry the sign convention
/// (first nonzero component positive) and ties are broken by the sign-fixed
/// eigenvector's lexicographic order. Monotonicity of each lambda_{n,k} along
/// the grid is asserted up to tol.weyl_rel; a violation beyond tolerance
/// signals a non-nested supplier and throws NumericalError.
EigenProfile eigen_profile(const CovarianceSupplier& c, std::span<const Index> grid, int top_m,
                           const Tolerances& tol = {});

struct DetectionParams {
    double gamma = 1.5;           ///< per-doubling growth-ratio threshold
    double tau_multiplier = 10.0; ///< cap vs the median of the trailing eigenvalues
};

/// Diverging-eigenvalue factor-count detection.
///
/// Index k is classified DIVERGING when the mean doubling ratio exceeds gamma
/// and the eigenvalue at the largest grid size exceeds the cap
/// tau = tau_multiplier * median(trailing eigenvalues). q is the number of
/// diverging indices; the report is flagged ambiguous when those indices are
/// not a leading prefix. Requires >= 3 grid points, each at least twice the
/// previous. Throws NumericalError when every tracked eigenvalue diverges
/// (no decomposition detectable at this m).
GrowthReport detect_factor_count(const EigenProfile& profile, const DetectionParams& params = {});

/// Loading matrix F = U_q Lambda_q^{1/2} from the top-q eigenpairs of sigma,
/// so that F F^T is the best rank-q spectral truncation. Throws NumericalError
/// when lambda_q falls below the rank cutoff.
Matrix extract_loadings(const Matrix& sigma, int q, const Tolerances& tol = {});

/// Per-factor projection-residual diagnostic across a grid of truncations.
///
/// For each grid point, f~_i = f_i - projection onto span{f_j, j != i}. The
/// verdict is STRONG when every factor's residual norm grows by at least
/// gamma_sli per grid step (geometric mean); rank deficiency at any grid point
/// yields a collinearity flag and verdict WEAK.
StrongLiReport strong_li_diagnostic(const std::vector<Matrix>& loadings_over_grid,
                                    double gamma_sli = 1.3);

/// Q-R data of the averaging-sequence construction.
struct AveragingOperator {
    Matrix orthogonal_basis;  ///< N x q, Gram-Schmidt columns g_i (not normalized)
    Matrix r;                 ///< q x q unit-diagonal upper-triangular, F = G R
    Matrix a;                 ///< q x N, row i = g_i^T / ||g_i||^2
};

/// Gram-Schmidt factorization F = G R with unit-diagonal R; each row of A has
/// Euclidean norm 1/||g_i|| and A F = R holds to tol.num. Throws NumericalError
/// naming the offending column on rank deficiency.
AveragingOperator build_averaging_sequences(const Matrix& loadings, const Tolerances& tol = {});

enum class WhitenMode {
    SampleCovariance,  ///< whiten z by the inverse square root of its sample covariance
    Analytic           ///< whiten by (R R^T)^{-1/2}
};

/// Internal factor realization: z = A y, factors x = whiten(z),
/// aggregate = F R^{-1} z, idiosyncratic = y - aggregate.
FactorRealization realize_factors(const SampleEnsemble& y, const Matrix& loadings,
                                  const AveragingOperator& ops,
                                  WhitenMode mode = WhitenMode::SampleCovariance,
                                  const Tolerances& tol = {});

enum class IdiosyncrasyVerdict { Consistent, NotIdiosyncratic };

struct IdiosyncrasyReport {
    std::vector<Index> grid;
    std::vector<double> variance;       ///< sample variance of a_n^T y per grid point
    std::vector<double> weight_norms;   ///< ||a_n||_2
    std::vector<double> top_eigenvalue; ///< lambda_1 of the sample covariance per grid point
    IdiosyncrasyVerdict verdict = IdiosyncrasyVerdict::NotIdiosyncratic;
    double decay_factor = 0.0;          ///< required first/last variance ratio
};

/// Applies an averaging family along the grid and tests for variance decay,
/// together with the eigenvalue-side boundedness check on lambda_1.
IdiosyncrasyReport idiosyncrasy_test(const SampleEnsemble& y, const AveragingFamily& family,
                                     std::span<const Index> grid, double decay_factor = 4.0,
                                     const DetectionParams& params = {});

/// Full pipeline on a covariance supplier: profile, detection, loading
/// extraction at the largest grid size, idiosyncratic remainder and the
/// strong-linear-independence diagnostic of the per-grid loadings.
GFADecomposition gfa_decompose(const CovarianceSupplier& c, std::span<const Index> grid,
                               int top_m, const DetectionParams& params = {},
                               const Tolerances& tol = {});

/// Largest eigenvalue of (1/M) Y_n Y_n^T without forming the matrix
/// (deterministic power iteration on the Gram form).
double top_sample_eigenvalue(const Matrix& data, Index n);

}  // namespace gfa
