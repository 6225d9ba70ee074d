#include "mv2/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace mv2 {

Polynomial::Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) { strip(); }

Polynomial Polynomial::monomial(int degree, double coeff) {
    std::vector<double> c(static_cast<std::size_t>(degree) + 1, 0.0);
    c.back() = coeff;
    return Polynomial(std::move(c));
}

void Polynomial::strip() {
    while (!coeffs_.empty() && coeffs_.back() == 0.0) coeffs_.pop_back();
}

double Polynomial::operator()(double x) const {
    double acc = 0.0;
    for (std::size_t i = coeffs_.size(); i-- > 0;) acc = acc * x + coeffs_[i];
    return acc;
}

Polynomial Polynomial::derivative() const {
    if (coeffs_.size() <= 1) return Polynomial();
    std::vector<double> d(coeffs_.size() - 1);
    for (std::size_t k = 1; k < coeffs_.size(); ++k) d[k - 1] = static_cast<double>(k) * coeffs_[k];
    return Polynomial(std::move(d));
}

double Polynomial::coeff(int k) const {
    if (k < 0 || static_cast<std::size_t>(k) >= coeffs_.size()) return 0.0;
    return coeffs_[static_cast<std::size_t>(k)];
}

bool Polynomial::odd_powers_only() const {
    for (std::size_t k = 0; k < coeffs_.size(); k += 2)
        if (coeffs_[k] != 0.0) return false;
    return true;
}

bool Polynomial::even_powers_only() const {
    for (std::size_t k = 1; k < coeffs_.size(); k += 2)
        if (coeffs_[k] != 0.0) return false;
    return true;
}

double Polynomial::cauchy_root_bound() const {
    if (coeffs_.size() <= 1) return 0.0;
    double m = 0.0;
    for (std::size_t k = 0; k + 1 < coeffs_.size(); ++k)
        m = std::max(m, std::abs(coeffs_[k] / coeffs_.back()));
    return 1.0 + m;
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
    if (other.coeffs_.size() > coeffs_.size()) coeffs_.resize(other.coeffs_.size(), 0.0);
    for (std::size_t k = 0; k < other.coeffs_.size(); ++k) coeffs_[k] += other.coeffs_[k];
    strip();
    return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) {
    if (other.coeffs_.size() > coeffs_.size()) coeffs_.resize(other.coeffs_.size(), 0.0);
    for (std::size_t k = 0; k < other.coeffs_.size(); ++k) coeffs_[k] -= other.coeffs_[k];
    strip();
    return *this;
}

Polynomial& Polynomial::operator*=(double s) {
    for (double& c : coeffs_) c *= s;
    strip();
    return *this;
}

} // namespace mv2
