#include "rytov/quadrature.hpp"

#include <numbers>

namespace rytov {

void gauss_legendre(int n, double lo, double hi, std::vector<double>& nodes,
                    std::vector<double>& weights) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: node count must be >= 1");
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    // Newton iteration on P_n over [-1, 1], then affine map to [lo, hi].
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    for (int i = 0; i < n; ++i) {
        nodes[i] = mid - half * nodes[i];  // ascending order
        weights[i] *= half;
    }
}

QuadratureGrid build_grid(const std::array<Interval, 3>& box,
                          const std::array<int, 3>& counts, QuadRule rule) {
    for (int a = 0; a < 3; ++a) {
        if (!(box[a].length() > 0.0)) {
            throw std::invalid_argument("build_grid: interval length must be positive");
        }
        if (counts[a] < 1) {
            throw std::invalid_argument("build_grid: node count must be >= 1");
        }
    }

    QuadratureGrid grid;
    grid.box = box;
    grid.counts = counts;
    grid.rule = rule;

    std::array<std::vector<double>, 3> xs, ws;
    for (int a = 0; a < 3; ++a) {
        if (rule == QuadRule::Midpoint) {
            const double h = box[a].length() / counts[a];
            for (int i = 0; i < counts[a]; ++i) {
                xs[a].push_back(box[a].lo + (i + 0.5) * h);
                ws[a].push_back(h);
            }
        } else {
            gauss_legendre(counts[a], box[a].lo, box[a].hi, xs[a], ws[a]);
        }
    }

    grid.nodes.reserve(static_cast<std::size_t>(counts[0]) * counts[1] * counts[2]);
    grid.weights.reserve(grid.nodes.capacity());
    for (int i = 0; i < counts[0]; ++i) {
        for (int j = 0; j < counts[1]; ++j) {
            for (int k = 0; k < counts[2]; ++k) {
                grid.nodes.push_back({xs[0][i], xs[1][j], xs[2][k]});
                grid.weights.push_back(ws[0][i] * ws[1][j] * ws[2][k]);
            }
        }
    }
    grid.exclusion_radius = grid.cell_diagonal();
    return grid;
}

}  // namespace rytov
