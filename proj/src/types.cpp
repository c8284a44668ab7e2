#include "gfa/types.hpp"

#include <algorithm>
#include <cmath>

namespace gfa {

SampleEnsemble::SampleEnsemble(Matrix d, EnsembleKind k, std::string info)
    : data(std::move(d)), kind(k), seed_info(std::move(info)) {
    if (data.rows() < 1 || data.cols() < 1)
        throw ArgumentError("SampleEnsemble: need at least one row and one column");
    if (!data.allFinite())
        throw NumericalError("SampleEnsemble: non-finite entries");
}

Matrix CovarianceSupplier::eval(Index n) const {
    if (n < 1 || n > max_n_)
        throw ArgumentError("CovarianceSupplier::eval: n out of range [1, max_n]");
    return eval_(n);
}

CovarianceSupplier identity_supplier(Index max_n) {
    return {CovarianceSupplier::Source::Analytic, max_n,
            [](Index n) { return Matrix(Matrix::Identity(n, n)); }};
}

CovarianceSupplier exchangeable_supplier(double sigma2, double rho, Index max_n) {
    if (sigma2 <= std::abs(rho))
        throw ArgumentError("exchangeable_supplier: requires sigma2 > |rho|");
    return {CovarianceSupplier::Source::Analytic, max_n, [sigma2, rho](Index n) {
                Matrix s = Matrix::Constant(n, n, rho);
                s.diagonal().setConstant(sigma2);
                return s;
            }};
}

CovarianceSupplier dense_supplier(Matrix sigma, CovarianceSupplier::Source source) {
    if (sigma.rows() != sigma.cols())
        throw ArgumentError("dense_supplier: matrix must be square");
    const Index max_n = sigma.rows();
    return {source, max_n,
            [m = std::move(sigma)](Index n) { return Matrix(m.topLeftCorner(n, n)); }};
}

CovarianceSupplier toeplitz_supplier(Vector lags, CovarianceSupplier::Source source) {
    if (lags.size() < 1)
        throw ArgumentError("toeplitz_supplier: empty lag sequence");
    const Index max_n = lags.size();
    return {source, max_n, [l = std::move(lags)](Index n) {
                Matrix s(n, n);
                for (Index i = 0; i < n; ++i)
                    for (Index j = 0; j < n; ++j)
                        s(i, j) = l[std::abs(i - j)];
                return s;
            }};
}

CovarianceSupplier sample_covariance_supplier(const SampleEnsemble& ensemble) {
    // Zero-mean processes throughout, so no mean subtraction.
    const double m = static_cast<double>(ensemble.replicates());
    Matrix sigma = (ensemble.data * ensemble.data.transpose()) / m;
    sigma = ((sigma + sigma.transpose()) * 0.5).eval();
    return dense_supplier(std::move(sigma), CovarianceSupplier::Source::Sample);
}

namespace detail {

Vector symmetric_eigenvalues(const Matrix& s) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
    if (es.info() == Eigen::Success)
        return es.eigenvalues();
    Eigen::BDCSVD<Matrix> svd(s, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Vector values(s.rows());
    for (Index i = 0; i < s.rows(); ++i) {
        const double sign = svd.matrixU().col(i).dot(svd.matrixV().col(i)) < 0.0 ? -1.0 : 1.0;
        values[i] = sign * svd.singularValues()[i];
    }
    std::sort(values.data(), values.data() + values.size());
    return values;
}

}  // namespace detail

CovarianceValidation validate_covariance(const CovarianceSupplier& c, Index n,
                                         const Tolerances& tol) {
    if (n > c.max_n())
        throw ArgumentError("validate_covariance: n exceeds max_n");
    const Matrix sigma = c.eval(n);
    if (!sigma.allFinite())
        throw NumericalError("validate_covariance: non-finite entries");

    CovarianceValidation report;
    report.n = n;
    report.symmetry_defect = detail::symmetry_defect(sigma);

    const double scale = std::max(sigma.cwiseAbs().maxCoeff(), 1e-300);
    if (report.symmetry_defect > tol.num * scale)
        throw NumericalError("validate_covariance: matrix is not symmetric");

    report.min_eigenvalue = detail::symmetric_eigenvalues(sigma).minCoeff();
    if (report.min_eigenvalue < -tol.psd_rel * scale)
        throw NumericalError("validate_covariance: negative eigenvalue beyond PSD tolerance");

    if (n >= 2) {
        const Index half = n / 2;
        const Matrix head = c.eval(half);
        report.nested =
            (head - sigma.topLeftCorner(half, half)).cwiseAbs().maxCoeff() <= tol.num * scale;
    }
    return report;
}

AveragingSequence::AveragingSequence(Vector w, std::string lbl)
    : weights(std::move(w)), norm2(weights.norm()), label(std::move(lbl)) {
    if (!weights.allFinite())
        throw NumericalError("AveragingSequence: non-finite weights");
}

AveragingFamily arithmetic_mean_family() {
    return [](Index n) {
        return AveragingSequence(Vector::Constant(n, 1.0 / static_cast<double>(n)),
                                 "arithmetic-mean");
    };
}

AveragingFamily unit_spike_family() {
    return [](Index n) {
        Vector w = Vector::Zero(n);
        w[n - 1] = 1.0 / std::sqrt(static_cast<double>(n));
        return AveragingSequence(std::move(w), "unit-spike");
    };
}

AveragingFamily shifted_tail_family(Vector base) {
    // The n-th member reads the tail of the base functional: a_n(k) = base(k + n),
    // whose norm is the tail norm of base and hence tends to zero.
    return [b = std::move(base)](Index n) {
        Vector w = Vector::Zero(b.size());
        for (Index k = 0; k + n < b.size(); ++k)
            w[k] = b[k + n];
        return AveragingSequence(std::move(w), "shifted-tail");
    };
}

AveragingFamily sinusoid_family(double omega, bool sine) {
    return [omega, sine](Index n) {
        Vector w(n);
        for (Index k = 0; k < n; ++k) {
            const double arg = omega * static_cast<double>(k + 1);
            w[k] = (sine ? std::sin(arg) : std::cos(arg)) / static_cast<double>(n);
        }
        return AveragingSequence(std::move(w), sine ? "sin" : "cos");
    };
}

SeparableField::SeparableField(Matrix d, std::string info)
    : data(std::move(d)), seed_info(std::move(info)) {
    if (data.rows() < 1 || data.cols() < 1)
        throw ArgumentError("SeparableField: need at least one row and one column");
    if (!data.allFinite())
        throw NumericalError("SeparableField: non-finite entries");
}

std::optional<double> SeparableField::declared_separability_defect(Index space_lags,
                                                                   Index time_lags) const {
    if (!space_cov || !time_cov)
        return std::nullopt;
    const Index p = std::min(space_lags, space_size());
    const Index s = std::min(time_lags, time_size());

    // Sample second moments at small lags vs the declared product model, with one
    // free scale c absorbing the realized factor magnitude.
    Matrix sample(p, s), model(p, s);
    for (Index h = 0; h < p; ++h) {
        for (Index u = 0; u < s; ++u) {
            const Index nk = space_size() - h;
            const Index nt = time_size() - u;
            sample(h, u) =
                (data.block(h, u, nk, nt).cwiseProduct(data.block(0, 0, nk, nt))).sum() /
                static_cast<double>(nk * nt);
            model(h, u) = space_cov(h, 0) * time_cov(u, 0);
        }
    }
    const double mm = model.cwiseProduct(model).sum();
    if (mm <= 0.0)
        return 1.0;
    const double c = sample.cwiseProduct(model).sum() / mm;
    const double denom = sample.norm();
    if (denom <= 0.0)
        return 0.0;
    return (sample - c * model).norm() / denom;
}

}  // namespace gfa
