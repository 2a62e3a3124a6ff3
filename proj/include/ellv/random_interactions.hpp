#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ellv/csv.hpp"
#include "ellv/errors.hpp"
#include "ellv/rng.hpp"

namespace ellv {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Parameters of the elliptic interaction ensemble
///   B = A/(alpha sqrt(n)) + (mu/n) 1 1^T,
/// where A has standard normal entries with cov(A_ij, A_ji) = rho for i<j.
struct ModelParams {
    int n = 0;           ///< system size
    double rho = 0.0;    ///< pairwise covariance of mirrored entries
    double mu = 0.0;     ///< common mean shift
    double alpha = 1.0;  ///< interaction strength normalization

    void validate() const {
        if (n < 1) throw ParameterError("ModelParams: n must be >= 1");
        if (!(std::abs(rho) <= 1.0))
            throw ParameterError("ModelParams: |rho| must be <= 1");
        if (!(alpha > 0.0)) throw ParameterError("ModelParams: alpha must be > 0");
        if (!std::isfinite(mu)) throw ParameterError("ModelParams: mu must be finite");
    }
};

/// Per-pair covariances rho_ij for i<j, packed row-major over the strict
/// upper triangle. Generalizes the single-rho elliptic model.
class CovarianceProfile {
public:
    CovarianceProfile(int n, std::vector<double> upper)
        : n_(n), upper_(std::move(upper)) {
        if (n_ < 1) throw ParameterError("CovarianceProfile: n must be >= 1");
        const std::size_t expected =
            static_cast<std::size_t>(n_) * (n_ - 1) / 2;
        if (upper_.size() != expected)
            throw ShapeError("CovarianceProfile: expected n(n-1)/2 entries");
        for (double r : upper_)
            if (!(std::abs(r) <= 1.0))
                throw ParameterError("CovarianceProfile: |rho_ij| must be <= 1");
    }

    static CovarianceProfile constant(int n, double rho) {
        const std::size_t m = static_cast<std::size_t>(n) * (n - 1) / 2;
        return CovarianceProfile(n, std::vector<double>(m, rho));
    }

    /// Profile with rho_ij drawn i.i.d. uniform on [-1,1].
    static CovarianceProfile random_uniform(int n, std::uint64_t seed) {
        Rng rng(seed);
        const std::size_t m = static_cast<std::size_t>(n) * (n - 1) / 2;
        std::vector<double> upper(m);
        for (auto& r : upper) r = 2.0 * rng.uniform() - 1.0;
        return CovarianceProfile(n, std::move(upper));
    }

    int n() const { return n_; }

    double rho(int i, int j) const {
        // i < j required
        const std::size_t k = static_cast<std::size_t>(i) * n_ -
                              static_cast<std::size_t>(i) * (i + 1) / 2 +
                              (j - i - 1);
        return upper_[k];
    }

private:
    int n_;
    std::vector<double> upper_;
};

/// A sampled interaction instance: the raw correlated Gaussian A, the
/// assembled B, and the provenance needed to re-create it.
struct InteractionMatrix {
    Matrix a;            ///< raw correlated standard Gaussians
    Matrix b;            ///< a/(alpha sqrt(n)) + (mu/n) 1 1^T
    ModelParams params;
    std::uint64_t seed = 0;
};

/// Linear map sending an i.i.d. N(0,1) matrix X to an elliptic-correlated
/// one: diagonal preserved, and for i<j
///   G_ij = sqrt((1+rho)/2) X_ij + sqrt((1-rho)/2) X_ji,
///   G_ji = sqrt((1+rho)/2) X_ij - sqrt((1-rho)/2) X_ji.
/// Output entries are standard normal with cov(G_ij, G_ji) = rho.
inline Matrix gamma_map(const Matrix& x, double rho) {
    if (x.rows() != x.cols()) throw ShapeError("gamma_map: matrix must be square");
    if (!(std::abs(rho) <= 1.0)) throw ParameterError("gamma_map: |rho| must be <= 1");

    const Eigen::Index n = x.rows();
    const double cp = std::sqrt((1.0 + rho) / 2.0);
    const double cm = std::sqrt((1.0 - rho) / 2.0);
    Matrix g(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        g(i, i) = x(i, i);
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double u = x(i, j);
            const double v = x(j, i);
            g(i, j) = cp * u + cm * v;
            g(j, i) = cp * u - cm * v;
        }
    }
    return g;
}

/// gamma_map with a per-pair covariance profile rho_ij.
inline Matrix gamma_map_profile(const Matrix& x, const CovarianceProfile& profile) {
    if (x.rows() != x.cols())
        throw ShapeError("gamma_map_profile: matrix must be square");
    if (profile.n() != x.rows())
        throw ShapeError("gamma_map_profile: profile size does not match matrix");

    const Eigen::Index n = x.rows();
    Matrix g(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        g(i, i) = x(i, i);
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double rho = profile.rho(static_cast<int>(i), static_cast<int>(j));
            const double cp = std::sqrt((1.0 + rho) / 2.0);
            const double cm = std::sqrt((1.0 - rho) / 2.0);
            const double u = x(i, j);
            const double v = x(j, i);
            g(i, j) = cp * u + cm * v;
            g(j, i) = cp * u - cm * v;
        }
    }
    return g;
}

/// n x n matrix of i.i.d. standard normals, filled row-major.
inline Matrix sample_gaussian_iid(int n, Rng& rng) {
    if (n < 1) throw ParameterError("sample_gaussian_iid: n must be >= 1");
    Matrix x(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) x(i, j) = rng.normal();
    return x;
}

/// Raw elliptic Gaussian A with pairwise covariance rho.
inline Matrix sample_elliptic(int n, double rho, Rng& rng) {
    return gamma_map(sample_gaussian_iid(n, rng), rho);
}

/// Assembles B from a given raw Gaussian A. Exposed separately so tests can
/// force A (e.g. to zero) without touching the sampler.
inline InteractionMatrix assemble_interaction(Matrix a, const ModelParams& params,
                                              std::uint64_t seed = 0) {
    params.validate();
    if (a.rows() != params.n || a.cols() != params.n)
        throw ShapeError("assemble_interaction: matrix size does not match params.n");
    const double scale = 1.0 / (params.alpha * std::sqrt(static_cast<double>(params.n)));
    const double shift = params.mu / params.n;
    InteractionMatrix im;
    im.b = (a * scale).array() + shift;
    im.a = std::move(a);
    im.params = params;
    im.seed = seed;
    return im;
}

/// Samples one interaction instance. Deterministic in (params, seed):
/// moments are E(B_ij) = mu/n, var(B_ij) = 1/(alpha^2 n),
/// cov(B_ij, B_ji) = rho/(alpha^2 n) for i != j.
inline InteractionMatrix sample_interaction(const ModelParams& params,
                                            std::uint64_t seed) {
    params.validate();
    Rng rng(seed);
    return assemble_interaction(sample_elliptic(params.n, params.rho, rng), params, seed);
}

/// Covariance-profile variant; params.rho is ignored in favor of the profile.
inline InteractionMatrix sample_interaction_profile(const ModelParams& params,
                                                    const CovarianceProfile& profile,
                                                    std::uint64_t seed) {
    params.validate();
    if (profile.n() != params.n)
        throw ShapeError("sample_interaction_profile: profile size does not match params.n");
    Rng rng(seed);
    Matrix a = gamma_map_profile(sample_gaussian_iid(params.n, rng), profile);
    return assemble_interaction(std::move(a), params, seed);
}

/// Dumps B row-major at 17 significant digits, preceded by a provenance
/// header (`# n,rho,mu,alpha,seed` names, then their values).
inline void write_matrix_csv(const std::string& path, const InteractionMatrix& im) {
    CsvWriter csv;
    csv.comment("n,rho,mu,alpha,seed");
    csv.comment(std::to_string(im.params.n) + "," + fmt_g17(im.params.rho) + "," +
                fmt_g17(im.params.mu) + "," + fmt_g17(im.params.alpha) + "," +
                std::to_string(im.seed));
    for (Eigen::Index i = 0; i < im.b.rows(); ++i) {
        auto row = csv.row();
        for (Eigen::Index j = 0; j < im.b.cols(); ++j) row.col(im.b(i, j));
    }
    csv.write_file(path);
}

} // namespace ellv
