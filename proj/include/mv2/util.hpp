#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mv2 {

// Envelope of the nonlinear integral inequality
//   phi(t) <= A int phi + B int phi^alpha,  phi(0) = 0,
// with A > 0, B >= 0, 0 <= alpha < 1.
struct GronwallBound {
    double A;
    double B;
    double alpha;
};

// (B/A (e^{(1-alpha)At} - 1))^{1/(1-alpha)}. Throws std::invalid_argument on
// A <= 0, B < 0, alpha outside [0,1) or t < 0.
double gronwall_bound(const GronwallBound& gb, double t);

// max + log(sum exp(v - max)); -inf on empty input.
double logsumexp(std::span<const double> values);

struct LinFit {
    double slope;
    double intercept;
    double r2;
    double slope_stderr; // from residuals; 0 when n == 2
};

// Least squares y ~ slope*x + intercept. Requires >= 2 distinct xs.
LinFit linfit(std::span<const double> xs, std::span<const double> ys);

// Deterministic per-purpose seed streams: adding replicas never perturbs
// existing ones.
std::uint64_t derive_stream(std::uint64_t master_seed, std::string_view purpose, std::uint64_t index);

std::uint64_t splitmix64(std::uint64_t& state);

// Runs fn(0..n-1), chunked over at most n_threads threads (serial when
// n_threads <= 1). fn must be safe to call concurrently for distinct i.
void parallel_for(int n, int n_threads, const std::function<void(int)>& fn);

int hardware_threads();

// C-locale formatting with 17 significant digits; CSV output is expected to
// be byte-stable across runs.
std::string format_double(double v);

std::uint64_t fnv1a64(std::span<const unsigned char> bytes);
std::uint64_t fnv1a64_file(const std::string& path);

} // namespace mv2
