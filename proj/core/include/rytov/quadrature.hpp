#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "rytov/geometry.hpp"

namespace rytov {

enum class QuadRule { Midpoint, GaussLegendre };

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi - lo; }
};

/// Tensor-product volume quadrature over an axis-aligned box. Weights are
/// positive and sum to the box volume. exclusion_radius is the radius of the
/// ball dropped around each singular point passed to integrate(); it defaults
/// to the cell diagonal.
struct QuadratureGrid {
    std::array<Interval, 3> box;
    std::array<int, 3> counts;
    QuadRule rule = QuadRule::Midpoint;
    std::vector<Point3> nodes;
    std::vector<double> weights;
    double exclusion_radius = 0.0;

    std::size_t size() const { return nodes.size(); }
    double volume() const {
        return box[0].length() * box[1].length() * box[2].length();
    }
    std::array<double, 3> cell_size() const {
        return {box[0].length() / counts[0], box[1].length() / counts[1],
                box[2].length() / counts[2]};
    }
    double cell_diagonal() const {
        auto h = cell_size();
        return std::sqrt(h[0] * h[0] + h[1] * h[1] + h[2] * h[2]);
    }
};

QuadratureGrid build_grid(const std::array<Interval, 3>& box,
                          const std::array<int, 3>& counts, QuadRule rule);

/// Gauss-Legendre nodes and weights on [lo, hi].
void gauss_legendre(int n, double lo, double hi, std::vector<double>& nodes,
                    std::vector<double>& weights);

struct IntegrationResult {
    cplx value{0.0, 0.0};
    double excluded_volume = 0.0;
    std::size_t retained_nodes = 0;
};

inline bool node_excluded(const QuadratureGrid& grid, const Point3& node,
                          std::span<const Point3> singular_points) {
    for (const auto& s : singular_points) {
        if (distance(node, s) <= grid.exclusion_radius) return true;
    }
    return false;
}

/// Sum of w*f(node) over nodes farther than exclusion_radius from every
/// singular point. Summation order is the node order, so results do not
/// depend on any internal parallelism. f is called as f(node_index, node).
template <class F>
IntegrationResult integrate(const QuadratureGrid& grid, F&& f,
                            std::span<const Point3> singular_points = {}) {
    IntegrationResult out;
    for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
        if (node_excluded(grid, grid.nodes[i], singular_points)) {
            out.excluded_volume += grid.weights[i];
            continue;
        }
        cplx fi;
        if constexpr (std::is_invocable_v<F, std::size_t, const Point3&>) {
            fi = f(i, grid.nodes[i]);
        } else {
            fi = f(grid.nodes[i]);
        }
        if (!std::isfinite(fi.real()) || !std::isfinite(fi.imag())) {
            throw std::domain_error("integrate: non-finite integrand at a retained node");
        }
        out.value += grid.weights[i] * fi;
        ++out.retained_nodes;
    }
    return out;
}

}  // namespace rytov
