#include "mv2/moments.hpp"

#include <stdexcept>

namespace mv2 {

MomentVector empirical_moments(std::span<const double> xs, int K) {
    if (xs.empty()) throw std::invalid_argument("empirical_moments: empty sample");
    if (K < 1) throw std::invalid_argument("empirical_moments: K must be >= 1");
    std::vector<double> m(static_cast<std::size_t>(K) + 1, 0.0);
    for (double x : xs) {
        double p = 1.0;
        for (int k = 0; k <= K; ++k) {
            m[static_cast<std::size_t>(k)] += p;
            p *= x;
        }
    }
    const double inv = 1.0 / static_cast<double>(xs.size());
    for (double& v : m) v *= inv;
    m[0] = 1.0;
    return MomentVector{std::move(m)};
}

MomentVector point_mass_moments(double y, int K) {
    if (K < 1) throw std::invalid_argument("point_mass_moments: K must be >= 1");
    std::vector<double> m(static_cast<std::size_t>(K) + 1);
    double p = 1.0;
    for (int k = 0; k <= K; ++k) {
        m[static_cast<std::size_t>(k)] = p;
        p *= y;
    }
    return MomentVector{std::move(m)};
}

Polynomial convolve_with_moments(const Polynomial& g, const MomentVector& mz) {
    if (mz.max_order() < g.degree())
        throw std::invalid_argument("convolve_with_moments: moment vector shorter than deg(g)");
    const int d = g.degree();
    std::vector<double> out(static_cast<std::size_t>(d) + 1, 0.0);
    // E[(x-Z)^k] = sum_j C(k,j) x^j (-1)^{k-j} m_{k-j}
    std::vector<double> binom(static_cast<std::size_t>(d) + 1, 0.0);
    for (int k = 0; k <= d; ++k) {
        binom[static_cast<std::size_t>(k)] = 1.0; // C(k,k)
        for (int j = k - 1; j > 0; --j)
            binom[static_cast<std::size_t>(j)] += binom[static_cast<std::size_t>(j - 1)];
        binom[0] = 1.0;
        const double gk = g.coeff(k);
        if (gk == 0.0) continue;
        double sign = (k % 2 == 0) ? 1.0 : -1.0; // (-1)^{k-j} at j=0
        for (int j = 0; j <= k; ++j) {
            out[static_cast<std::size_t>(j)] += gk * binom[static_cast<std::size_t>(j)] * sign * mz[k - j];
            sign = -sign;
        }
    }
    return Polynomial(std::move(out));
}

} // namespace mv2
