/** \file linalg.hpp
    Dense complex linear-algebra kernels used throughout the library.

    Everything here operates on a single Eigen::MatrixXcd block; the algebra
    module lifts these kernels blockwise to direct sums. The policy decisions
    live here in one place:
      - numerical rank: singular values above  dim_scale * eps * sigma_max;
      - pseudoinverse:  truncated-SVD Moore-Penrose inverse;
      - polar parts:    x = u|x| with u = U_r V_r*, |x| = V Sigma V*,
                        right support V_r V_r*, left support U_r U_r*;
      - matrix exp/log: Eigen's MatrixFunctions, with an explicit principal
                        branch-cut check for the logarithm;
      - randomness:     std::mt19937_64 + standard complex Gaussian entries.
*/
#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <complex>
#include <limits>
#include <random>

#include "bgl/errors.hpp"

namespace bgl {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;

/// Machine epsilon for double, spelled once.
inline constexpr double kEps = std::numeric_limits<double>::epsilon();

/// Projection self-consistency tolerance (p^2 = p, p* = p).
inline constexpr double kTauProj = 1e-10;

/// Default support-matching tolerance for groupoid composability.
inline constexpr double kTauMatch = 1e-8;

/// Largest singular value (spectral norm); 0 for empty matrices.
inline double spectral_norm(const Mat& a) {
    if (a.size() == 0) return 0.0;
    return a.jacobiSvd().singularValues()(0);
}

/// Rank cut-off below which singular values count as zero.
inline double rank_tolerance(double sigma_max, int dim_scale) {
    return std::max(dim_scale, 1) * kEps * sigma_max;
}

/** SVD of one block together with its numerical rank.
    dim_scale feeds the rank tolerance (callers pass the largest block
    dimension of the ambient algebra so the policy is uniform across blocks).
    tol_override > 0 replaces the default cut-off entirely. */
struct SvdParts {
    Mat u;        ///< left singular vectors (full)
    Mat v;        ///< right singular vectors (full)
    RVec sigma;   ///< singular values, descending
    int rank = 0; ///< number of singular values above the cut-off
    double tol = 0.0;
};

inline SvdParts svd_with_rank(const Mat& x, int dim_scale, double tol_override = -1.0) {
    SvdParts out;
    Eigen::JacobiSVD<Mat> svd(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
    out.u = svd.matrixU();
    out.v = svd.matrixV();
    out.sigma = svd.singularValues();
    const double smax = out.sigma.size() ? out.sigma(0) : 0.0;
    out.tol = tol_override > 0.0 ? tol_override : rank_tolerance(smax, dim_scale);
    out.rank = 0;
    for (int i = 0; i < out.sigma.size(); ++i)
        if (out.sigma(i) > out.tol) ++out.rank;
    return out;
}

inline int numerical_rank(const Mat& x, int dim_scale, double tol_override = -1.0) {
    return svd_with_rank(x, dim_scale, tol_override).rank;
}

/// Truncated-SVD Moore-Penrose pseudoinverse.
inline Mat pseudo_inverse(const Mat& x, int dim_scale, double tol_override = -1.0) {
    const SvdParts s = svd_with_rank(x, dim_scale, tol_override);
    Mat out = Mat::Zero(x.cols(), x.rows());
    for (int i = 0; i < s.rank; ++i)
        out += (1.0 / s.sigma(i)) * s.v.col(i) * s.u.col(i).adjoint();
    return out;
}

/** Polar-decomposition data of one block.
    u is the rank-r partial isometry with x = u * abs, abs = (x*x)^{1/2},
    and the two supports are the range projections of x* and x. */
struct PolarParts {
    Mat u;             ///< partial isometry U_r V_r*
    Mat abs;           ///< positive part V Sigma V*
    Mat right_support; ///< u* u = V_r V_r*
    Mat left_support;  ///< u u* = U_r U_r*
    int rank = 0;
};

inline PolarParts polar(const Mat& x, int dim_scale, double tol_override = -1.0) {
    const SvdParts s = svd_with_rank(x, dim_scale, tol_override);
    PolarParts out;
    const int n = static_cast<int>(x.rows());
    const int m = static_cast<int>(x.cols());
    out.rank = s.rank;
    out.u = Mat::Zero(n, m);
    out.abs = Mat::Zero(m, m);
    out.right_support = Mat::Zero(m, m);
    out.left_support = Mat::Zero(n, n);
    for (int i = 0; i < s.rank; ++i) {
        out.u += s.u.col(i) * s.v.col(i).adjoint();
        out.abs += s.sigma(i) * s.v.col(i) * s.v.col(i).adjoint();
        out.right_support += s.v.col(i) * s.v.col(i).adjoint();
        out.left_support += s.u.col(i) * s.u.col(i).adjoint();
    }
    return out;
}

/// Matrix exponential (scaling-and-squaring Pade via Eigen).
inline Mat mat_exp(const Mat& x) { return x.exp(); }

/** Principal matrix logarithm.
    Throws LogBranchError if any eigenvalue sits on the closed negative real
    axis (within a relative guard band), where the principal branch is not
    analytic. */
inline Mat mat_log_principal(const Mat& x) {
    const Eigen::ComplexEigenSolver<Mat> es(x, /*computeEigenvectors=*/false);
    const double scale = std::max(1.0, x.norm());
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
        const cplx lam = es.eigenvalues()(i);
        if (lam.real() <= 0.0 && std::abs(lam.imag()) <= 1e-12 * scale)
            throw LogBranchError("matrix logarithm: eigenvalue on the principal branch cut");
    }
    return x.log();
}

/** Orthonormal basis of the nullspace of a (possibly rectangular) matrix,
    returned as columns; empty (n x 0) when the kernel is trivial. */
inline Mat kernel_basis(const Mat& a, int dim_scale, double tol_override = -1.0) {
    if (a.rows() == 0) // no constraints: kernel is everything
        return Mat::Identity(a.cols(), a.cols());
    const SvdParts s = svd_with_rank(a, dim_scale, tol_override);
    const int n = static_cast<int>(a.cols());
    return s.v.rightCols(n - s.rank);
}

/** Orthonormal basis of the range of a Hermitian projection, via its
    eigendecomposition; columns span p's image. Deterministic for fixed p. */
inline Mat range_basis(const Mat& p, int rank) {
    Eigen::SelfAdjointEigenSolver<Mat> es(p);
    // eigenvalues ascending: the range eigenvectors are the last `rank` ones
    return es.eigenvectors().rightCols(rank);
}

/** Deterministic random source. Complex entries are (g1 + i g2)/sqrt(2) with
    g1, g2 standard normal, so E|z|^2 = 1 (standard complex Gaussian). */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double gaussian() { return normal_(eng_); }

    cplx cgaussian() {
        const double re = normal_(eng_);
        const double im = normal_(eng_);
        return cplx(re, im) / std::sqrt(2.0);
    }

    Mat cgaussian_matrix(int rows, int cols) {
        Mat m(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) m(i, j) = cgaussian();
        return m;
    }

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(eng_);
    }

    std::uint64_t integer(std::uint64_t bound) {
        return std::uniform_int_distribution<std::uint64_t>(0, bound - 1)(eng_);
    }

    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
    std::normal_distribution<double> normal_;
};

/** Stable 64-bit FNV-1a hash of a string; used to derive per-check RNG seeds
    so results do not depend on check execution order. */
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace bgl
