#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "splitkin/errors.hpp"

namespace splitkin {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Deterministic pairwise (cascade) summation. All ensemble and stencil
/// reductions in splitkin go through this so results do not depend on
/// thread count or traversal accidents.
double pairwise_sum(std::span<const double> values);

/// Periodic unit torus, N cells per axis, cell width 1/N.
/// Total measure is 1 by construction; estimates then carry no volume factor.
struct TorusGrid {
    int dimension = 1;
    int cells_per_axis = 2;

    TorusGrid() = default;
    TorusGrid(int dim, int n);

    double dx() const { return 1.0 / cells_per_axis; }
    std::size_t total_cells() const;
    double cell_measure() const;
    /// Center of cell i along one axis.
    double center(std::size_t i) const { return (static_cast<double>(i) + 0.5) * dx(); }
    /// Shortest distance between two points on the unit torus.
    static double distance(double x, double y);

    bool operator==(const TorusGrid&) const = default;
};

/// Cell-averaged scalar function on a TorusGrid (finite-volume semantics).
class Field {
  public:
    Field() = default;
    Field(TorusGrid grid, double fill = 0.0);
    Field(TorusGrid grid, std::vector<double> values);

    static Field from_function(TorusGrid grid, const std::function<double(double)>& f);

    const TorusGrid& grid() const { return grid_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

    double min() const;
    double max() const;
    bool all_finite() const;

    bool operator==(const Field&) const = default;

  private:
    TorusGrid grid_;
    std::vector<double> values_;
};

/// (sum_i |f_i|^p dx^d)^(1/p); p = infinity gives max |f_i|.
/// Throws InvalidExponent for p < 1.
double lp_norm(const Field& f, double p);

/// sum_i |f_i - g_i| dx^d. Throws GridMismatch if the grids differ.
double l1_distance(const Field& f, const Field& g);

/// Mean of a field (integral over the unit torus).
double mean(const Field& f);

enum class MollifierKind { space, value };

/// Standard normalized bump exp(-1/(1-s^2)) scaled to a given width.
/// Profile is even, supported on [-width, width], with unit integral.
class Mollifier {
  public:
    Mollifier(MollifierKind kind, double width);

    MollifierKind kind() const { return kind_; }
    double width() const { return width_; }
    double operator()(double s) const;
    /// High-resolution quadrature of the profile (should be 1 within 1e-10).
    double integral() const;

  private:
    MollifierKind kind_;
    double width_;
    double scale_;  // 1/(width * I), I = integral of the unit bump
};

/// The pair (rho_eta, psi_delta) used by the doubling diagnostics.
std::pair<Mollifier, Mollifier> mollifier_pair(double eta, double delta);

}  // namespace splitkin
