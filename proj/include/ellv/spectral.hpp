#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "ellv/csv.hpp"
#include "ellv/errors.hpp"
#include "ellv/random_interactions.hpp"
#include "ellv/rng.hpp"

namespace ellv {

/// Stability classification of one interaction matrix. `is_pd` refers to
/// 2I - (B + B^T), which is positive definite iff lambda_max(B+B^T) < 2;
/// that condition certifies a unique globally stable equilibrium.
struct StabilityVerdict {
    double lambda_max_sym = 0.0;  ///< largest eigenvalue of B + B^T
    double predicted_edge = std::numeric_limits<double>::quiet_NaN();
    bool is_admissible = false;
    bool is_pd = false;
};

/// Admissibility of (rho, alpha, mu): alpha > sqrt(2(1+rho)) and
/// mu < 1/2 + (1/2) sqrt(1 - 2(1+rho)/alpha^2), both strict.
inline bool is_admissible(double rho, double alpha, double mu) {
    if (!(std::abs(rho) <= 1.0)) throw ParameterError("is_admissible: |rho| must be <= 1");
    if (!(alpha > 0.0)) throw ParameterError("is_admissible: alpha must be > 0");
    const double edge = 2.0 * (1.0 + rho);
    if (!(alpha * alpha > edge)) return false;
    const double mu_max = 0.5 + 0.5 * std::sqrt(1.0 - edge / (alpha * alpha));
    return mu < mu_max;
}

/// Largest admissible mu for given (rho, alpha); -inf when no mu qualifies
/// (alpha at or below sqrt(2(1+rho))).
inline double admissible_mu_max(double rho, double alpha) {
    if (!(std::abs(rho) <= 1.0)) throw ParameterError("admissible_mu_max: |rho| must be <= 1");
    if (!(alpha > 0.0)) throw ParameterError("admissible_mu_max: alpha must be > 0");
    const double edge = 2.0 * (1.0 + rho);
    if (!(alpha * alpha > edge)) return -std::numeric_limits<double>::infinity();
    return 0.5 + 0.5 * std::sqrt(1.0 - edge / (alpha * alpha));
}

/// Almost-sure limit of lambda_max((A+A^T)/(alpha sqrt(n)) + (2 mu/n) 1 1^T):
/// the semicircle edge 2 sqrt(2(1+rho))/alpha, or the rank-one outlier
/// 2 mu + (1+rho)/(alpha^2 mu) once mu exceeds sqrt(1+rho)/(sqrt(2) alpha).
/// At the threshold the two expressions coincide; the bulk edge is returned.
inline double predicted_lambda_max_sym(double rho, double alpha, double mu) {
    if (!(std::abs(rho) <= 1.0))
        throw ParameterError("predicted_lambda_max_sym: |rho| must be <= 1");
    if (!(alpha > 0.0)) throw ParameterError("predicted_lambda_max_sym: alpha must be > 0");
    const double bulk = 2.0 * std::sqrt(2.0 * (1.0 + rho)) / alpha;
    const double threshold = std::sqrt(1.0 + rho) / (std::sqrt(2.0) * alpha);
    if (mu > threshold) return 2.0 * mu + (1.0 + rho) / (alpha * alpha * mu);
    return bulk;
}

namespace detail {

/// Largest eigenvalue of a symmetric operator by Lanczos with full
/// reorthogonalization. `matvec(x, y)` must compute y = S x for symmetric S.
/// Converges fast for the spectra handled here (isolated or soft edges);
/// the residual bound |beta_j s_j| is checked against `tol`.
inline double lanczos_lambda_max(const std::function<void(const Vector&, Vector&)>& matvec,
                                 Eigen::Index n, double tol, int max_iter,
                                 std::uint64_t seed) {
    max_iter = static_cast<int>(std::min<Eigen::Index>(max_iter, n));
    Rng rng(seed);
    Matrix v_basis(n, max_iter + 1);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
    v /= v.norm();
    v_basis.col(0) = v;

    std::vector<double> diag, subdiag;
    Vector w(n);
    double beta_prev = 0.0;
    double theta = 0.0;

    for (int j = 0; j < max_iter; ++j) {
        matvec(v_basis.col(j), w);
        const double alpha_j = v_basis.col(j).dot(w);
        w -= alpha_j * v_basis.col(j);
        if (j > 0) w -= beta_prev * v_basis.col(j - 1);
        // full reorthogonalization (twice is enough)
        for (int pass = 0; pass < 2; ++pass) {
            auto basis = v_basis.leftCols(j + 1);
            w.noalias() -= basis * (basis.transpose() * w);
        }
        diag.push_back(alpha_j);
        const double beta_j = w.norm();

        const bool check_now = (j + 1 == max_iter) || beta_j < 1e-14 || (j % 5 == 4);
        if (check_now) {
            const Eigen::Index m = static_cast<Eigen::Index>(diag.size());
            Eigen::SelfAdjointEigenSolver<Matrix> small_eig;
            small_eig.computeFromTridiagonal(
                Eigen::Map<const Vector>(diag.data(), m),
                Eigen::Map<const Vector>(subdiag.data(), static_cast<Eigen::Index>(subdiag.size())));
            if (small_eig.info() != Eigen::Success)
                throw NumericError("lanczos_lambda_max: tridiagonal eigensolver failed");
            theta = small_eig.eigenvalues()(m - 1);
            const double last_component = small_eig.eigenvectors()(m - 1, m - 1);
            const double residual = std::abs(beta_j * last_component);
            if (residual <= tol * std::max(1.0, std::abs(theta)) || beta_j < 1e-14)
                return theta;
        }
        subdiag.push_back(beta_j);
        v_basis.col(j + 1) = w / beta_j;
        beta_prev = beta_j;
    }
    throw NumericError("lanczos_lambda_max: no convergence in " +
                       std::to_string(max_iter) + " iterations");
}

} // namespace detail

/// Largest eigenvalue of a symmetric matrix: dense tridiagonalization for
/// small n, Lanczos (tolerance `tol`) beyond.
inline double lambda_max_symmetric(const Matrix& s, double tol = 1e-8) {
    if (s.rows() != s.cols()) throw ShapeError("lambda_max_symmetric: matrix must be square");
    const Eigen::Index n = s.rows();
    if (n <= 512) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(s, Eigen::EigenvaluesOnly);
        if (eig.info() != Eigen::Success)
            throw NumericError("lambda_max_symmetric: dense eigensolver failed");
        return eig.eigenvalues()(n - 1);
    }
    auto matvec = [&s](const Vector& x, Vector& y) {
        y.noalias() = s.selfadjointView<Eigen::Lower>() * x;
    };
    return detail::lanczos_lambda_max(matvec, n, tol, 600, /*seed=*/0x51ab5eedULL);
}

/// Verdict for a bare matrix (no ensemble parameters attached): lambda_max
/// and the positive-definiteness decision only.
inline StabilityVerdict check_stability_pd(const Matrix& b) {
    if (b.rows() != b.cols()) throw ShapeError("check_stability_pd: matrix must be square");
    StabilityVerdict verdict;
    Matrix sym = b + b.transpose();
    verdict.lambda_max_sym = lambda_max_symmetric(sym);
    verdict.is_pd = verdict.lambda_max_sym < 2.0;  // strict: boundary is not PD
    return verdict;
}

/// Full verdict for a sampled instance: adds the closed-form edge prediction
/// and the admissibility of its parameters.
inline StabilityVerdict check_stability_pd(const InteractionMatrix& im) {
    StabilityVerdict verdict = check_stability_pd(im.b);
    verdict.predicted_edge =
        predicted_lambda_max_sym(im.params.rho, im.params.alpha, im.params.mu);
    verdict.is_admissible = is_admissible(im.params.rho, im.params.alpha, im.params.mu);
    return verdict;
}

/// All eigenvalues of a real square matrix, unordered.
inline std::vector<std::complex<double>> empirical_spectrum(const Matrix& a) {
    if (a.rows() != a.cols()) throw ShapeError("empirical_spectrum: matrix must be square");
    Eigen::EigenSolver<Matrix> eig(a, /*computeEigenvectors=*/false);
    if (eig.info() != Eigen::Success)
        throw NumericError("empirical_spectrum: QR iteration did not converge (n=" +
                           std::to_string(a.rows()) + ")");
    const auto& vals = eig.eigenvalues();
    std::vector<std::complex<double>> out(vals.size());
    for (Eigen::Index i = 0; i < vals.size(); ++i) out[i] = vals(i);
    return out;
}

/// Largest singular value. Dense SVD for small matrices, Lanczos on A^T A
/// beyond.
inline double spectral_norm(const Matrix& a) {
    if (a.rows() != a.cols()) throw ShapeError("spectral_norm: matrix must be square");
    const Eigen::Index n = a.rows();
    if (n == 0) return 0.0;
    if (n <= 400) {
        return a.jacobiSvd().singularValues()(0);
    }
    Vector tmp(n);
    auto matvec = [&a, &tmp](const Vector& x, Vector& y) {
        tmp.noalias() = a * x;
        y.noalias() = a.transpose() * tmp;
    };
    const double lam = detail::lanczos_lambda_max(matvec, n, 1e-10, 600, /*seed=*/0x51ab5eedULL);
    return std::sqrt(std::max(0.0, lam));
}

/// Spectrum dump: columns re,im.
inline void write_spectrum_csv(const std::string& path,
                               const std::vector<std::complex<double>>& spectrum,
                               const std::string& meta = "") {
    CsvWriter csv;
    if (!meta.empty()) csv.comment(meta);
    csv.header({"re", "im"});
    for (const auto& z : spectrum) csv.row().col(z.real()).col(z.imag());
    csv.write_file(path);
}

/// Verdict dump: rho,alpha,mu,lambda_max,predicted_edge,is_admissible,is_pd.
inline void write_verdict_csv(const std::string& path, const ModelParams& params,
                              const StabilityVerdict& verdict,
                              const std::string& meta = "") {
    CsvWriter csv;
    if (!meta.empty()) csv.comment(meta);
    csv.header({"rho", "alpha", "mu", "lambda_max", "predicted_edge", "is_admissible",
                "is_pd"});
    csv.row()
        .col(params.rho)
        .col(params.alpha)
        .col(params.mu)
        .col(verdict.lambda_max_sym)
        .col(verdict.predicted_edge)
        .col(verdict.is_admissible)
        .col(verdict.is_pd);
    csv.write_file(path);
}

} // namespace ellv
