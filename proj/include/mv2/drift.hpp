#pragma once

#include <array>
#include <vector>

#include "mv2/polynomial.hpp"

namespace mv2 {

// Time-dependent drift 4-tuple (b1,b2,b3,b4). Each component is a polynomial
// in x at every time node; between nodes the coefficients interpolate
// linearly in t, so evaluation is continuous on [0,T]. Components keep
// degree <= 2q-1: they stand for expectations of the polynomial interaction
// gradients.
struct DriftPair {
    std::vector<double> time_grid;                     // 0 = t0 < ... < tL = T
    std::array<std::vector<Polynomial>, 4> components; // [component][node]

    static DriftPair zero(std::vector<double> time_grid);

    double horizon() const { return time_grid.back(); }
    int nodes() const { return static_cast<int>(time_grid.size()); }

    // b_{comp+1}(t, x); throws std::invalid_argument outside [0,T] (small
    // rounding slack at the right end).
    double eval(int comp, double t, double x) const;

    Polynomial poly_at(int comp, double t) const;

    DriftPair operator-(const DriftPair& other) const; // requires identical grids

    bool is_zero() const;
};

// Symmetric evaluation grid for the weighted sup-norm: n_points uniform
// nodes over [-radius, radius], constructed as exact +/- pairs.
struct GridSpec {
    double radius = 8.0;
    int n_points = 2001;

    std::vector<double> nodes() const;
};

struct DriftNorms {
    std::array<double, 4> component{}; // ||b_i||_T, grid max inflated by 5%
    double total = 0.0;                // sum of components
};

// Weighted norm ||b||_T = sup_{s<=T} sup_x |b(s,x)| / (1+|x|^{2q}),
// approximated by the max over (time_grid x x_grid) and inflated by 5% as a
// documented upper-bias margin. In t the max over a linear-interpolation
// segment sits at a node, so only the x direction is approximate. Throws
// GridTooSmallError when the weighted ratio is still increasing at the grid
// edge (checked at radius vs 0.9 radius).
DriftNorms norm_T(const DriftPair& b, int q, const GridSpec& x_grid);

} // namespace mv2
