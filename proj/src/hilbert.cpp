#include "pathmkv/hilbert.hpp"

#include "pathmkv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pathmkv {

namespace {

void require_same_dim(std::size_t a, std::size_t b, const char* where) {
    if (a != b) {
        throw ConfigError(std::string(where) + ": dimension mismatch (" + std::to_string(a) + " vs " +
                          std::to_string(b) + ")");
    }
}

} // namespace

void SpaceSpec::validate() const {
    if (d < 1 || dK < 1) throw ConfigError("space dimensions d and dK must be >= 1");
}

HilbertVec HilbertVec::basis(std::size_t dim, std::size_t k) {
    if (k >= dim) throw DomainError("basis index out of range");
    HilbertVec e(dim);
    e[k] = 1.0;
    return e;
}

HilbertVec& HilbertVec::operator+=(const HilbertVec& other) {
    require_same_dim(size(), other.size(), "HilbertVec +=");
    for (std::size_t k = 0; k < coords_.size(); ++k) coords_[k] += other.coords_[k];
    return *this;
}

HilbertVec& HilbertVec::operator-=(const HilbertVec& other) {
    require_same_dim(size(), other.size(), "HilbertVec -=");
    for (std::size_t k = 0; k < coords_.size(); ++k) coords_[k] -= other.coords_[k];
    return *this;
}

HilbertVec& HilbertVec::operator*=(double s) {
    for (double& c : coords_) c *= s;
    return *this;
}

double HilbertVec::norm_squared() const { return inner(coords(), coords()); }

double HilbertVec::norm() const { return std::sqrt(norm_squared()); }

HilbertVec operator+(HilbertVec a, const HilbertVec& b) { return a += b; }
HilbertVec operator-(HilbertVec a, const HilbertVec& b) { return a -= b; }
HilbertVec operator*(double s, HilbertVec a) { return a *= s; }

double inner(std::span<const double> a, std::span<const double> b) {
    require_same_dim(a.size(), b.size(), "inner");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

double inner(const HilbertVec& a, const HilbertVec& b) { return inner(a.coords(), b.coords()); }

DenseMatrix DenseMatrix::diagonal(std::span<const double> diag) {
    DenseMatrix m(diag.size(), diag.size());
    for (std::size_t k = 0; k < diag.size(); ++k) m(k, k) = diag[k];
    return m;
}

DenseMatrix DenseMatrix::transposed() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

DenseMatrix DenseMatrix::symmetrized() const {
    if (rows_ != cols_) throw ConfigError("symmetrization needs a square matrix");
    DenseMatrix s(rows_, cols_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) s(i, j) = 0.5 * ((*this)(i, j) + (*this)(j, i));
    return s;
}

double DenseMatrix::max_abs_diff(const DenseMatrix& other) const {
    if (rows_ != other.rows_ || cols_ != other.cols_) throw ConfigError("matrix shape mismatch");
    double m = 0.0;
    for (std::size_t k = 0; k < a_.size(); ++k) m = std::max(m, std::abs(a_[k] - other.a_[k]));
    return m;
}

SpectralOperator SpectralOperator::generator(std::vector<double> eigenvalues) {
    if (eigenvalues.empty()) throw ConfigError("operator needs at least one eigenvalue");
    const double eta = *std::max_element(eigenvalues.begin(), eigenvalues.end());
    return generator(std::move(eigenvalues), eta);
}

SpectralOperator SpectralOperator::generator(std::vector<double> eigenvalues, double eta) {
    SpectralOperator op(std::move(eigenvalues), OperatorKind::generator, eta);
    op.validate();
    return op;
}

SpectralOperator SpectralOperator::bounded(std::vector<double> eigenvalues) {
    SpectralOperator op(std::move(eigenvalues), OperatorKind::bounded, 0.0);
    op.validate();
    return op;
}

SpectralOperator SpectralOperator::hilbert_schmidt(std::vector<double> eigenvalues) {
    SpectralOperator op(std::move(eigenvalues), OperatorKind::hilbert_schmidt, 0.0);
    op.validate();
    return op;
}

SpectralOperator SpectralOperator::identity(std::size_t dim) {
    return bounded(std::vector<double>(dim, 1.0));
}

void SpectralOperator::validate() const {
    if (eig_.empty()) throw ConfigError("operator needs at least one eigenvalue");
    for (double v : eig_) {
        if (!std::isfinite(v)) throw ConfigError("operator eigenvalues must be finite");
    }
    if (kind_ == OperatorKind::generator) {
        const double top = *std::max_element(eig_.begin(), eig_.end());
        if (!std::isfinite(eta_) || eta_ < top) {
            throw ConfigError("declared pseudo-contraction bound eta=" + std::to_string(eta_) +
                              " is below the largest eigenvalue " + std::to_string(top));
        }
    }
}

double SpectralOperator::hs_norm() const { return std::sqrt(inner(eig_, eig_)); }

double SpectralOperator::operator_norm() const {
    double m = 0.0;
    for (double v : eig_) m = std::max(m, std::abs(v));
    return m;
}

bool SpectralOperator::is_zero() const {
    return std::all_of(eig_.begin(), eig_.end(), [](double v) { return v == 0.0; });
}

HilbertVec SpectralOperator::apply(const HilbertVec& x) const {
    require_same_dim(dim(), x.size(), "operator apply");
    HilbertVec y(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) y[k] = eig_[k] * x[k];
    return y;
}

HilbertVec semigroup_apply(const SpectralOperator& A, double t, const HilbertVec& x) {
    if (A.kind() != OperatorKind::generator) throw ConfigError("semigroup_apply needs a generator");
    if (!(t >= 0.0)) throw DomainError("semigroup_apply needs t >= 0");
    require_same_dim(A.dim(), x.size(), "semigroup_apply");
    HilbertVec y(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) y[k] = std::exp(A.eigenvalue(k) * t) * x[k];
    return y;
}

SpectralOperator yosida(const SpectralOperator& A, double n) {
    if (A.kind() != OperatorKind::generator) throw ConfigError("yosida needs a generator");
    if (!(n > A.eta())) {
        throw DomainError("Yosida index n=" + std::to_string(n) + " must exceed eta=" + std::to_string(A.eta()));
    }
    std::vector<double> eig(A.dim());
    for (std::size_t k = 0; k < eig.size(); ++k) {
        const double lambda = A.eigenvalue(k);
        eig[k] = n * lambda / (n - lambda);
    }
    // x -> n x / (n - x) is increasing on (-inf, n), so the image of eta bounds the new spectrum.
    const double eta_n = n * A.eta() / (n - A.eta());
    return SpectralOperator::generator(std::move(eig), eta_n);
}

HilbertVec adjoint_apply(const SpectralOperator& F, const HilbertVec& x) { return F.apply(x); }

} // namespace pathmkv
