#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace pathmkv {

/// Truncation levels of the state space H and the noise space K.
struct SpaceSpec {
    std::size_t d = 1;   ///< dimension of H
    std::size_t dK = 1;  ///< number of scalar Brownian motions driving the system

    void validate() const;
    bool operator==(const SpaceSpec&) const = default;
};

/// Coordinates of an element of H (or K) against a fixed orthonormal basis.
class HilbertVec {
public:
    HilbertVec() = default;
    explicit HilbertVec(std::size_t dim) : coords_(dim, 0.0) {}
    explicit HilbertVec(std::vector<double> coords) : coords_(std::move(coords)) {}
    HilbertVec(std::initializer_list<double> coords) : coords_(coords) {}
    explicit HilbertVec(std::span<const double> coords) : coords_(coords.begin(), coords.end()) {}

    static HilbertVec basis(std::size_t dim, std::size_t k);

    std::size_t size() const noexcept { return coords_.size(); }
    double& operator[](std::size_t k) { return coords_[k]; }
    double operator[](std::size_t k) const { return coords_[k]; }
    std::span<const double> coords() const noexcept { return coords_; }
    std::span<double> coords() noexcept { return coords_; }
    const std::vector<double>& vector() const noexcept { return coords_; }

    HilbertVec& operator+=(const HilbertVec& other);
    HilbertVec& operator-=(const HilbertVec& other);
    HilbertVec& operator*=(double s);

    double norm() const;
    double norm_squared() const;

    bool operator==(const HilbertVec&) const = default;

private:
    std::vector<double> coords_;
};

HilbertVec operator+(HilbertVec a, const HilbertVec& b);
HilbertVec operator-(HilbertVec a, const HilbertVec& b);
HilbertVec operator*(double s, HilbertVec a);
double inner(const HilbertVec& a, const HilbertVec& b);
double inner(std::span<const double> a, std::span<const double> b);

/// Small dense row-major matrix, used for second-order derivative fields.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_(rows * cols, 0.0) {}

    static DenseMatrix diagonal(std::span<const double> diag);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    DenseMatrix transposed() const;
    /// (D + D^T) / 2
    DenseMatrix symmetrized() const;
    double max_abs_diff(const DenseMatrix& other) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> a_;
};

enum class OperatorKind { generator, bounded, hilbert_schmidt };

/// Operator diagonal in the common basis, stored by its eigenvalues.
///
/// For generators the pseudo-contraction bound eta (||e^{tA}|| <= e^{eta t}) is
/// stored alongside the eigenvalues; construction rejects an eta smaller than
/// the largest eigenvalue.
class SpectralOperator {
public:
    SpectralOperator() = default;

    static SpectralOperator generator(std::vector<double> eigenvalues);
    static SpectralOperator generator(std::vector<double> eigenvalues, double eta);
    static SpectralOperator bounded(std::vector<double> eigenvalues);
    static SpectralOperator hilbert_schmidt(std::vector<double> eigenvalues);
    static SpectralOperator identity(std::size_t dim);

    OperatorKind kind() const noexcept { return kind_; }
    std::span<const double> eigenvalues() const noexcept { return eig_; }
    double eigenvalue(std::size_t k) const { return eig_[k]; }
    std::size_t dim() const noexcept { return eig_.size(); }
    double eta() const noexcept { return eta_; }

    double hs_norm() const;
    double operator_norm() const;
    bool is_zero() const;

    HilbertVec apply(const HilbertVec& x) const;

    /// Re-checks the stored invariants; throws ConfigError when inconsistent.
    void validate() const;

private:
    SpectralOperator(std::vector<double> eig, OperatorKind kind, double eta)
        : eig_(std::move(eig)), kind_(kind), eta_(eta) {}

    std::vector<double> eig_;
    OperatorKind kind_ = OperatorKind::bounded;
    double eta_ = 0.0;
};

/// e^{tA} x for a diagonal generator A.
HilbertVec semigroup_apply(const SpectralOperator& A, double t, const HilbertVec& x);

/// Yosida approximation A_n = n A (n - A)^{-1}; requires n > eta.
SpectralOperator yosida(const SpectralOperator& A, double n);

/// F* x. Diagonal operators are self-adjoint.
HilbertVec adjoint_apply(const SpectralOperator& F, const HilbertVec& x);

} // namespace pathmkv
