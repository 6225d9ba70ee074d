#include "mv2/drift.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mv2/errors.hpp"

namespace mv2 {

DriftPair DriftPair::zero(std::vector<double> time_grid) {
    if (time_grid.size() < 2 || time_grid.front() != 0.0)
        throw std::invalid_argument("DriftPair: time grid must start at 0 with >= 2 nodes");
    if (!std::is_sorted(time_grid.begin(), time_grid.end()) ||
        std::adjacent_find(time_grid.begin(), time_grid.end()) != time_grid.end())
        throw std::invalid_argument("DriftPair: time grid must be strictly increasing");
    DriftPair b;
    b.time_grid = std::move(time_grid);
    for (auto& comp : b.components) comp.assign(b.time_grid.size(), Polynomial());
    return b;
}

namespace {

// Locates t in the grid and returns (left index, interpolation weight).
std::pair<std::size_t, double> locate(const std::vector<double>& grid, double t) {
    const double T = grid.back();
    const double slack = 1e-12 * std::max(1.0, T);
    if (t < -slack || t > T + slack)
        throw std::invalid_argument("DriftPair: time outside drift domain [0,T]");
    t = std::clamp(t, 0.0, T);
    const auto it = std::upper_bound(grid.begin(), grid.end(), t);
    std::size_t i = static_cast<std::size_t>(std::distance(grid.begin(), it));
    if (i == 0) return {0, 0.0};
    if (i >= grid.size()) return {grid.size() - 2, 1.0};
    --i;
    return {i, (t - grid[i]) / (grid[i + 1] - grid[i])};
}

} // namespace

double DriftPair::eval(int comp, double t, double x) const {
    const auto [i, w] = locate(time_grid, t);
    const auto& polys = components[static_cast<std::size_t>(comp)];
    if (w == 0.0) return polys[i](x);
    return (1.0 - w) * polys[i](x) + w * polys[i + 1](x);
}

Polynomial DriftPair::poly_at(int comp, double t) const {
    const auto [i, w] = locate(time_grid, t);
    const auto& polys = components[static_cast<std::size_t>(comp)];
    if (w == 0.0) return polys[i];
    return (1.0 - w) * polys[i] + w * polys[i + 1];
}

DriftPair DriftPair::operator-(const DriftPair& other) const {
    if (time_grid != other.time_grid)
        throw std::invalid_argument("DriftPair: subtraction requires identical time grids");
    DriftPair out = *this;
    for (std::size_t c = 0; c < 4; ++c)
        for (std::size_t l = 0; l < time_grid.size(); ++l)
            out.components[c][l] -= other.components[c][l];
    return out;
}

bool DriftPair::is_zero() const {
    for (const auto& comp : components)
        for (const auto& p : comp)
            if (!p.is_zero()) return false;
    return true;
}

std::vector<double> GridSpec::nodes() const {
    if (n_points < 3 || radius <= 0.0)
        throw std::invalid_argument("GridSpec: need radius > 0 and n_points >= 3");
    const int half = (n_points - 1) / 2;
    const double h = radius / half;
    std::vector<double> xs;
    xs.reserve(static_cast<std::size_t>(2 * half + 1));
    for (int i = -half; i <= half; ++i) xs.push_back(static_cast<double>(i) * h);
    return xs;
}

DriftNorms norm_T(const DriftPair& b, int q, const GridSpec& x_grid) {
    const std::vector<double> xs = x_grid.nodes();
    const double radius = xs.back();
    DriftNorms out;
    for (std::size_t c = 0; c < 4; ++c) {
        double best = 0.0;
        double at_edge = 0.0, at_inner = 0.0;
        for (std::size_t l = 0; l < b.time_grid.size(); ++l) {
            const Polynomial& p = b.components[c][l];
            if (p.is_zero()) continue;
            for (double x : xs) {
                const double ratio = std::abs(p(x)) / (1.0 + std::pow(std::abs(x), 2 * q));
                best = std::max(best, ratio);
            }
            auto ratio_at = [&](double x) {
                return std::abs(p(x)) / (1.0 + std::pow(std::abs(x), 2 * q));
            };
            at_edge = std::max({at_edge, ratio_at(radius), ratio_at(-radius)});
            at_inner = std::max({at_inner, ratio_at(0.9 * radius), ratio_at(-0.9 * radius)});
        }
        if (at_edge > at_inner)
            throw GridTooSmallError("norm_T: weighted ratio still increasing at |x| = " +
                                    std::to_string(radius));
        out.component[c] = 1.05 * best;
        out.total += out.component[c];
    }
    return out;
}

} // namespace mv2
