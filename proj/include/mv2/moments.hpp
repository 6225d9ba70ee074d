#pragma once

#include <span>
#include <vector>

#include "mv2/polynomial.hpp"

namespace mv2 {

// Moments m_k of a probability measure, orders 0..K, m_0 = 1.
struct MomentVector {
    std::vector<double> m;

    int max_order() const { return static_cast<int>(m.size()) - 1; }
    double operator[](int k) const { return m[static_cast<std::size_t>(k)]; }
};

// m_k = (1/N) sum_i x_i^k for k = 0..K. Throws std::invalid_argument on an
// empty sample or K < 1.
MomentVector empirical_moments(std::span<const double> xs, int K);

MomentVector point_mass_moments(double y, int K);

// E[g(x - Z)] as a polynomial in x, given moments of Z. Exact for polynomial
// g: binomial expansion of (x - Z)^k turns the convolution into a linear
// combination of the first deg(g) moments. Throws if the moment vector is
// shorter than deg(g).
Polynomial convolve_with_moments(const Polynomial& g, const MomentVector& mz);

} // namespace mv2
