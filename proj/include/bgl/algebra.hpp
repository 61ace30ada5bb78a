/** \file algebra.hpp
    Block-diagonal matrix algebra over a fixed descriptor: arithmetic,
    trace pairing, polar parts, supports, partial (Moore-Penrose) inverse,
    center, Murray-von Neumann equivalence, and random generators.

    An AlgebraDescriptor fixes the block sizes (n_1,...,n_K); elements are
    lists of n_k x n_k complex matrices and only interoperate when their
    descriptors agree.  The predual is identified with the algebra itself
    through pairing(rho, x) = sum_k Tr(rho_k x_k).
*/
#pragma once

#include <cstdint>
#include <initializer_list>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "bgl/errors.hpp"
#include "bgl/linalg.hpp"

namespace bgl {

// ---------------------------------------------------------------------------
// Descriptor
// ---------------------------------------------------------------------------

/// Ordered list of block dimensions describing a direct sum of full
/// complex matrix algebras.
class AlgebraDescriptor {
public:
    explicit AlgebraDescriptor(std::vector<int> block_dims)
        : dims_(std::move(block_dims)) {
        if (dims_.empty()) throw DescriptorError("descriptor needs at least one block");
        for (int n : dims_)
            if (n < 1) throw DescriptorError("block dimension must be positive");
    }
    AlgebraDescriptor(std::initializer_list<int> dims)
        : AlgebraDescriptor(std::vector<int>(dims)) {}

    const std::vector<int>& block_dims() const { return dims_; }
    int blocks() const { return static_cast<int>(dims_.size()); }
    int dim(int k) const { return dims_[static_cast<std::size_t>(k)]; }
    int max_dim() const {
        int m = 1;
        for (int n : dims_) m = std::max(m, n);
        return m;
    }
    /// Complex dimension sum_k n_k^2 of the algebra as a vector space.
    int total_dim() const {
        int t = 0;
        for (int n : dims_) t += n * n;
        return t;
    }
    bool operator==(const AlgebraDescriptor& o) const { return dims_ == o.dims_; }
    bool operator!=(const AlgebraDescriptor& o) const { return !(*this == o); }

    /// Compact label such as "2" or "1+2", used in messages and check ids.
    std::string label() const {
        std::ostringstream s;
        for (std::size_t k = 0; k < dims_.size(); ++k) {
            if (k) s << '+';
            s << dims_[k];
        }
        return s.str();
    }

private:
    std::vector<int> dims_;
};

// ---------------------------------------------------------------------------
// Element
// ---------------------------------------------------------------------------

/// A block-diagonal complex matrix.  Value type: copies are independent,
/// operations never mutate their arguments.
class AlgebraElement {
public:
    AlgebraElement(AlgebraDescriptor desc, std::vector<Mat> blocks)
        : desc_(std::move(desc)), blocks_(std::move(blocks)) {
        if (static_cast<int>(blocks_.size()) != desc_.blocks())
            throw DescriptorError("block count does not match descriptor");
        for (int k = 0; k < desc_.blocks(); ++k)
            if (blocks_[static_cast<std::size_t>(k)].rows() != desc_.dim(k) ||
                blocks_[static_cast<std::size_t>(k)].cols() != desc_.dim(k))
                throw DescriptorError("block shape does not match descriptor");
    }

    static AlgebraElement zero(const AlgebraDescriptor& d) {
        std::vector<Mat> b;
        b.reserve(static_cast<std::size_t>(d.blocks()));
        for (int k = 0; k < d.blocks(); ++k) b.push_back(Mat::Zero(d.dim(k), d.dim(k)));
        return AlgebraElement(d, std::move(b));
    }
    static AlgebraElement identity(const AlgebraDescriptor& d) {
        std::vector<Mat> b;
        b.reserve(static_cast<std::size_t>(d.blocks()));
        for (int k = 0; k < d.blocks(); ++k) b.push_back(Mat::Identity(d.dim(k), d.dim(k)));
        return AlgebraElement(d, std::move(b));
    }

    const AlgebraDescriptor& descriptor() const { return desc_; }
    int blocks() const { return desc_.blocks(); }
    const Mat& block(int k) const { return blocks_[static_cast<std::size_t>(k)]; }
    Mat& block(int k) { return blocks_[static_cast<std::size_t>(k)]; }

    AlgebraElement adjoint() const {
        std::vector<Mat> b;
        b.reserve(blocks_.size());
        for (const Mat& m : blocks_) b.push_back(m.adjoint());
        return AlgebraElement(desc_, std::move(b));
    }

    /// Operator norm: largest singular value over all blocks.
    double norm() const {
        double n = 0.0;
        for (const Mat& m : blocks_) n = std::max(n, spectral_norm(m));
        return n;
    }

    /// Total trace sum_k Tr(x_k).
    cplx trace() const {
        cplx t = 0.0;
        for (const Mat& m : blocks_) t += m.trace();
        return t;
    }

    friend AlgebraElement operator+(const AlgebraElement& a, const AlgebraElement& b) {
        return zip(a, b, [](const Mat& x, const Mat& y) { return Mat(x + y); });
    }
    friend AlgebraElement operator-(const AlgebraElement& a, const AlgebraElement& b) {
        return zip(a, b, [](const Mat& x, const Mat& y) { return Mat(x - y); });
    }
    friend AlgebraElement operator*(const AlgebraElement& a, const AlgebraElement& b) {
        return zip(a, b, [](const Mat& x, const Mat& y) { return Mat(x * y); });
    }
    friend AlgebraElement operator*(cplx s, const AlgebraElement& a) {
        return a.map([s](const Mat& x) { return Mat(s * x); });
    }
    friend AlgebraElement operator*(double s, const AlgebraElement& a) {
        return cplx(s) * a;
    }
    friend AlgebraElement operator*(const AlgebraElement& a, cplx s) { return s * a; }
    friend AlgebraElement operator-(const AlgebraElement& a) { return cplx(-1.0) * a; }

    /// Apply a matrix function block by block.
    template <class F>
    AlgebraElement map(F&& f) const {
        std::vector<Mat> b;
        b.reserve(blocks_.size());
        for (const Mat& m : blocks_) b.push_back(f(m));
        return AlgebraElement(desc_, std::move(b));
    }

private:
    template <class F>
    static AlgebraElement zip(const AlgebraElement& a, const AlgebraElement& b, F&& f) {
        require_same_descriptor(a, b);
        std::vector<Mat> out;
        out.reserve(a.blocks_.size());
        for (std::size_t k = 0; k < a.blocks_.size(); ++k)
            out.push_back(f(a.blocks_[k], b.blocks_[k]));
        return AlgebraElement(a.desc_, std::move(out));
    }

    friend void require_same_descriptor(const AlgebraElement& a, const AlgebraElement& b) {
        if (a.desc_ != b.desc_)
            throw DescriptorError("elements live over different descriptors");
    }

    AlgebraDescriptor desc_;
    std::vector<Mat> blocks_;
};

inline double dist(const AlgebraElement& a, const AlgebraElement& b) {
    return (a - b).norm();
}

inline AlgebraElement commutator(const AlgebraElement& a, const AlgebraElement& b) {
    return a * b - b * a;
}

/// Trace pairing identifying the predual with the algebra:
/// pairing(rho, x) = sum_k Tr(rho_k x_k), bilinear, no conjugation.
inline cplx pairing(const AlgebraElement& rho, const AlgebraElement& x) {
    require_same_descriptor(rho, x);
    cplx t = 0.0;
    for (int k = 0; k < rho.blocks(); ++k) t += (rho.block(k) * x.block(k)).trace();
    return t;
}

// ---------------------------------------------------------------------------
// Coordinates: flatten an element onto C^total_dim (column-major per block)
// ---------------------------------------------------------------------------

inline Eigen::VectorXcd to_vector(const AlgebraElement& x) {
    Eigen::VectorXcd v(x.descriptor().total_dim());
    int at = 0;
    for (int k = 0; k < x.blocks(); ++k) {
        const int sz = x.descriptor().dim(k) * x.descriptor().dim(k);
        v.segment(at, sz) = Eigen::Map<const Eigen::VectorXcd>(x.block(k).data(), sz);
        at += sz;
    }
    return v;
}

inline AlgebraElement from_vector(const AlgebraDescriptor& d, const Eigen::VectorXcd& v) {
    if (v.size() != d.total_dim())
        throw DescriptorError("coordinate vector length does not match descriptor");
    std::vector<Mat> blocks;
    int at = 0;
    for (int k = 0; k < d.blocks(); ++k) {
        const int n = d.dim(k);
        blocks.push_back(Eigen::Map<const Mat>(v.segment(at, n * n).data(), n, n));
        at += n * n;
    }
    return AlgebraElement(d, std::move(blocks));
}

// ---------------------------------------------------------------------------
// Matrix units
// ---------------------------------------------------------------------------

/// e_{ij} in block k and zero elsewhere.
inline AlgebraElement matrix_unit(const AlgebraDescriptor& d, int k, int i, int j) {
    AlgebraElement e = AlgebraElement::zero(d);
    e.block(k)(i, j) = 1.0;
    return e;
}

/// All matrix units, ordered by block then row then column; a linear basis.
inline std::vector<AlgebraElement> matrix_units(const AlgebraDescriptor& d) {
    std::vector<AlgebraElement> units;
    units.reserve(static_cast<std::size_t>(d.total_dim()));
    for (int k = 0; k < d.blocks(); ++k)
        for (int i = 0; i < d.dim(k); ++i)
            for (int j = 0; j < d.dim(k); ++j) units.push_back(matrix_unit(d, k, i, j));
    return units;
}

// ---------------------------------------------------------------------------
// Projections
// ---------------------------------------------------------------------------

/// An element certified to satisfy p* = p and p^2 = p to tau_proj,
/// with per-block ranks cached.
class ProjectionElement {
public:
    explicit ProjectionElement(AlgebraElement p) : p_(std::move(p)) {
        if (dist(p_ * p_, p_) > kTauProj || dist(p_.adjoint(), p_) > kTauProj)
            throw ProjectionError("element is not an orthogonal projection");
        ranks_.reserve(static_cast<std::size_t>(p_.blocks()));
        for (int k = 0; k < p_.blocks(); ++k)
            ranks_.push_back(static_cast<int>(std::llround(p_.block(k).trace().real())));
    }

    const AlgebraElement& element() const { return p_; }
    const AlgebraDescriptor& descriptor() const { return p_.descriptor(); }
    const std::vector<int>& rank_vector() const { return ranks_; }
    int rank(int k) const { return ranks_[static_cast<std::size_t>(k)]; }
    int total_rank() const {
        int t = 0;
        for (int r : ranks_) t += r;
        return t;
    }
    const Mat& block(int k) const { return p_.block(k); }

private:
    AlgebraElement p_;
    std::vector<int> ranks_;
};

/// Complement 1 - p.
inline ProjectionElement complement(const ProjectionElement& p) {
    return ProjectionElement(AlgebraElement::identity(p.descriptor()) - p.element());
}

// ---------------------------------------------------------------------------
// Polar parts, supports, partial inverse
// ---------------------------------------------------------------------------

/// x = u * abs with a partial isometry u; support is the right support
/// u*u (the support projection of |x|).
struct PolarData {
    AlgebraElement u;
    AlgebraElement abs;
    ProjectionElement support;
};

inline PolarData polar_decompose(const AlgebraElement& x) {
    const AlgebraDescriptor& d = x.descriptor();
    std::vector<Mat> us, abss, supps;
    for (int k = 0; k < x.blocks(); ++k) {
        const PolarParts p = polar(x.block(k), d.max_dim());
        us.push_back(p.u);
        abss.push_back(p.abs);
        supps.push_back(p.right_support);
    }
    return PolarData{AlgebraElement(d, std::move(us)), AlgebraElement(d, std::move(abss)),
                     ProjectionElement(AlgebraElement(d, std::move(supps)))};
}

/// Target-side support uu*: the smallest projection with p x = x.
inline ProjectionElement left_support(const AlgebraElement& x) {
    const AlgebraDescriptor& d = x.descriptor();
    return ProjectionElement(x.map([&d](const Mat& m) {
        return polar(m, d.max_dim()).left_support;
    }));
}

/// Source-side support u*u: the smallest projection with x p = x.
inline ProjectionElement right_support(const AlgebraElement& x) {
    const AlgebraDescriptor& d = x.descriptor();
    return ProjectionElement(x.map([&d](const Mat& m) {
        return polar(m, d.max_dim()).right_support;
    }));
}

/// Groupoid inverse |x|^{-1}u*, computed as the Moore-Penrose pseudoinverse
/// (same element, better conditioned).  x * partial_inverse(x) is the left
/// support and partial_inverse(x) * x the right support.
inline AlgebraElement partial_inverse(const AlgebraElement& x) {
    const AlgebraDescriptor& d = x.descriptor();
    return x.map([&d](const Mat& m) { return pseudo_inverse(m, d.max_dim()); });
}

// ---------------------------------------------------------------------------
// Center
// ---------------------------------------------------------------------------

/// A projection is central iff it commutes with every matrix unit,
/// equivalently iff each block is 0 or the block identity.
inline bool is_central(const ProjectionElement& p) {
    const double tol = 64.0 * p.descriptor().max_dim() * kEps *
                       std::max(1.0, p.element().norm());
    for (int k = 0; k < p.descriptor().blocks(); ++k) {
        const int n = p.descriptor().dim(k);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                Mat e = Mat::Zero(n, n);
                e(i, j) = 1.0;
                if (spectral_norm(p.block(k) * e - e * p.block(k)) > tol) return false;
            }
    }
    return true;
}

/// All 2^K central projections: every subset of blocks contributes its
/// block identity.
inline std::vector<ProjectionElement> central_projections(const AlgebraDescriptor& d) {
    std::vector<ProjectionElement> out;
    const std::uint64_t count = std::uint64_t(1) << d.blocks();
    out.reserve(static_cast<std::size_t>(count));
    for (std::uint64_t mask = 0; mask < count; ++mask) {
        AlgebraElement p = AlgebraElement::zero(d);
        for (int k = 0; k < d.blocks(); ++k)
            if (mask & (std::uint64_t(1) << k)) p.block(k) = Mat::Identity(d.dim(k), d.dim(k));
        out.emplace_back(std::move(p));
    }
    return out;
}

/// Murray-von Neumann equivalence: for direct sums of full matrix blocks
/// this is exactly equality of per-block ranks.
inline bool mvn_equivalent(const ProjectionElement& p, const ProjectionElement& q) {
    if (p.descriptor() != q.descriptor())
        throw DescriptorError("projections live over different descriptors");
    return p.rank_vector() == q.rank_vector();
}

// ---------------------------------------------------------------------------
// Random generators
// ---------------------------------------------------------------------------

/// Element with i.i.d. standard complex Gaussian entries.
inline AlgebraElement random_element(const AlgebraDescriptor& d, Rng& rng) {
    std::vector<Mat> blocks;
    blocks.reserve(static_cast<std::size_t>(d.blocks()));
    for (int k = 0; k < d.blocks(); ++k)
        blocks.push_back(rng.cgaussian_matrix(d.dim(k), d.dim(k)));
    return AlgebraElement(d, std::move(blocks));
}

inline AlgebraElement random_element(const AlgebraDescriptor& d, std::uint64_t seed) {
    Rng rng(seed);
    return random_element(d, rng);
}

/// Haar-like random projection with prescribed per-block ranks:
/// Q diag(1_r, 0) Q* from the unitary QR factor of a Gaussian matrix.
inline ProjectionElement random_projection(const AlgebraDescriptor& d,
                                           const std::vector<int>& rank_vector, Rng& rng) {
    if (static_cast<int>(rank_vector.size()) != d.blocks())
        throw RankError("rank vector length does not match descriptor");
    std::vector<Mat> blocks;
    for (int k = 0; k < d.blocks(); ++k) {
        const int n = d.dim(k);
        const int r = rank_vector[static_cast<std::size_t>(k)];
        if (r < 0 || r > n) throw RankError("rank out of range for block");
        const Eigen::HouseholderQR<Mat> qr(rng.cgaussian_matrix(n, n));
        const Mat q = qr.householderQ();
        Mat diag = Mat::Zero(n, n);
        for (int i = 0; i < r; ++i) diag(i, i) = 1.0;
        blocks.push_back(q * diag * q.adjoint());
    }
    return ProjectionElement(AlgebraElement(d, std::move(blocks)));
}

inline ProjectionElement random_projection(const AlgebraDescriptor& d,
                                           const std::vector<int>& rank_vector,
                                           std::uint64_t seed) {
    Rng rng(seed);
    return random_projection(d, rank_vector, rng);
}

} // namespace bgl
