#pragma once

#include "pathmkv/hilbert.hpp"
#include "pathmkv/pathspace.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace pathmkv {

/// Non-owning empirical measure over path views (all on one grid).
class MeasureView {
public:
    MeasureView() = default;
    MeasureView(std::vector<PathView> atoms, std::vector<double> weights);
    /// Equal weights.
    explicit MeasureView(std::vector<PathView> atoms);

    std::size_t size() const noexcept { return atoms_.size(); }
    const PathView& atom(std::size_t i) const { return atoms_[i]; }
    double weight(std::size_t i) const { return weights_[i]; }
    std::span<const PathView> atoms() const noexcept { return atoms_; }
    std::span<const double> weights() const noexcept { return weights_; }
    const TimeGrid& grid() const { return atoms_.front().grid(); }
    std::size_t dim() const { return atoms_.front().dim(); }

    /// mu_{[0, t_node]}
    MeasureView stopped(std::size_t node) const;
    /// Same measure with atom i replaced by another view.
    MeasureView with_atom(std::size_t i, PathView replacement) const;

private:
    std::vector<PathView> atoms_;
    std::vector<double> weights_;
};

/// N weighted path atoms on a common grid.
class EmpiricalPathMeasure {
public:
    EmpiricalPathMeasure() = default;
    EmpiricalPathMeasure(std::vector<PathGrid> atoms, std::vector<double> weights);
    static EmpiricalPathMeasure uniform(std::vector<PathGrid> atoms);

    std::size_t size() const noexcept { return atoms_.size(); }
    const PathGrid& atom(std::size_t i) const { return atoms_[i]; }
    double weight(std::size_t i) const { return weights_[i]; }
    const std::vector<PathGrid>& atoms() const noexcept { return atoms_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    const TimeGrid& grid() const { return atoms_.front().grid(); }
    std::size_t dim() const { return atoms_.front().dim(); }

    MeasureView view() const;

private:
    std::vector<PathGrid> atoms_;
    std::vector<double> weights_;
};

/// Control value u in U ⊆ R^m.
struct ControlAction {
    std::vector<double> u;
    bool operator==(const ControlAction&) const = default;
};

/// Empirical law of controls.
class EmpiricalControlMeasure {
public:
    EmpiricalControlMeasure() = default;
    EmpiricalControlMeasure(std::vector<ControlAction> atoms, std::vector<double> weights);
    static EmpiricalControlMeasure uniform(std::vector<ControlAction> atoms);

    std::size_t size() const noexcept { return atoms_.size(); }
    const ControlAction& atom(std::size_t i) const { return atoms_[i]; }
    double weight(std::size_t i) const { return weights_[i]; }
    const std::vector<ControlAction>& atoms() const noexcept { return atoms_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    std::vector<double> mean() const;

private:
    std::vector<ControlAction> atoms_;
    std::vector<double> weights_;
};

EmpiricalPathMeasure stopped_measure(const EmpiricalPathMeasure& mu, double t);

enum class W2Mode { exact, sliced };

struct SlicedOptions {
    std::size_t projections = 512;
    std::uint64_t seed = 0;
};

struct W2Result {
    double distance = 0.0;
    std::size_t projections = 0;  ///< directions used; 0 for exact mode
};

/// Largest support size accepted by exact mode.
inline constexpr std::size_t kExactW2Cap = 512;

/// W2 with ground cost ||x - y||_T. Exact mode solves the discrete transport
/// problem; sliced mode averages 1-D transport costs over random orthonormal
/// frames of (node x coordinate) space, rounded up to whole frames, and scales
/// by the state dimension so that translations by a constant path are exact.
W2Result wasserstein2(const MeasureView& mu, const MeasureView& nu, W2Mode mode, const SlicedOptions& opts = {});
double wasserstein2(const EmpiricalPathMeasure& mu, const EmpiricalPathMeasure& nu, W2Mode mode = W2Mode::exact);

/// W2(mu, delta_0) = (∫ ||x||_T^2 dmu)^{1/2}
double wasserstein2_to_zero(const MeasureView& mu);

/// Exact W2 between time-t marginals of scalar (d = 1) path measures, any size.
double marginal_wasserstein2(const MeasureView& mu, const MeasureView& nu, std::size_t node);

/// Exact W2 between control laws on U ⊆ R^m with Euclidean ground cost.
double control_wasserstein2(const EmpiricalControlMeasure& a, const EmpiricalControlMeasure& b);

/// ∫ x_t mu(dx)
HilbertVec mean_at(const MeasureView& mu, double t);
HilbertVec mean_at_node(const MeasureView& mu, std::size_t node);

/// CSV dump: per atom a line `atom,<i>,weight,<w>` followed by the path CSV block.
void write_measure_csv(std::ostream& out, const EmpiricalPathMeasure& mu);

} // namespace pathmkv
