#pragma once

#include <vector>

namespace mv2 {

// Real polynomial in one variable, coefficients stored constant-term first.
// Trailing zero coefficients are stripped so the leading coefficient of a
// nonzero polynomial is never zero.
class Polynomial {
public:
    Polynomial() = default; // zero polynomial
    explicit Polynomial(std::vector<double> coeffs);

    static Polynomial monomial(int degree, double coeff = 1.0);

    // Horner evaluation, highest degree first.
    double operator()(double x) const;

    Polynomial derivative() const;

    int degree() const { return coeffs_.empty() ? 0 : static_cast<int>(coeffs_.size()) - 1; }
    bool is_zero() const { return coeffs_.empty(); }
    double leading() const { return coeffs_.empty() ? 0.0 : coeffs_.back(); }
    double coeff(int k) const;
    const std::vector<double>& coeffs() const { return coeffs_; }

    bool odd_powers_only() const;
    bool even_powers_only() const;

    // 1 + max |c_k / c_d|: all real roots lie inside [-bound, bound].
    double cauchy_root_bound() const;

    Polynomial& operator+=(const Polynomial& other);
    Polynomial& operator-=(const Polynomial& other);
    Polynomial& operator*=(double s);
    friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
    friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
    friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
    friend Polynomial operator*(double s, Polynomial a) { return a *= s; }
    bool operator==(const Polynomial& other) const { return coeffs_ == other.coeffs_; }

private:
    void strip();
    std::vector<double> coeffs_;
};

} // namespace mv2
