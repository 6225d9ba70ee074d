#include "mv2/util.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>

namespace mv2 {

double gronwall_bound(const GronwallBound& gb, double t) {
    if (!(gb.A > 0.0)) throw std::invalid_argument("gronwall_bound: A must be > 0");
    if (!(gb.B >= 0.0)) throw std::invalid_argument("gronwall_bound: B must be >= 0");
    if (!(gb.alpha >= 0.0 && gb.alpha < 1.0))
        throw std::invalid_argument("gronwall_bound: alpha must be in [0,1)");
    if (!(t >= 0.0)) throw std::invalid_argument("gronwall_bound: t must be >= 0");
    const double one_minus = 1.0 - gb.alpha;
    const double inner = gb.B / gb.A * std::expm1(one_minus * gb.A * t);
    return std::pow(inner, 1.0 / one_minus);
}

double logsumexp(std::span<const double> values) {
    if (values.empty()) return -std::numeric_limits<double>::infinity();
    const double m = *std::max_element(values.begin(), values.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double v : values) s += std::exp(v - m);
    return m + std::log(s);
}

LinFit linfit(std::span<const double> xs, std::span<const double> ys) {
    const std::size_t n = xs.size();
    if (n != ys.size() || n < 2) throw std::invalid_argument("linfit: need >= 2 points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) { mx += xs[i]; my += ys[i]; }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("linfit: xs must contain >= 2 distinct values");
    LinFit f{};
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ssres = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ys[i] - (f.slope * xs[i] + f.intercept);
        ssres += r * r;
    }
    f.r2 = (syy == 0.0) ? 1.0 : 1.0 - ssres / syy;
    f.slope_stderr = (n > 2) ? std::sqrt(ssres / static_cast<double>(n - 2) / sxx) : 0.0;
    return f;
}

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

namespace {

// splitmix64 finalizer; a bijection on 64-bit words.
std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace

std::uint64_t derive_stream(std::uint64_t master_seed, std::string_view purpose, std::uint64_t index) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : purpose) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    // Chained bijective mixing keeps index -> seed injective per purpose.
    std::uint64_t state = mix64(master_seed ^ h);
    state = mix64(state ^ (index * 0x9E3779B97F4A7C15ull + 1ull));
    return state;
}

void parallel_for(int n, int n_threads, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    n_threads = std::min(n_threads, n);
    if (n_threads <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) {
        workers.emplace_back([&, t] {
            for (int i = t; i < n; i += n_threads) fn(i);
        });
    }
    for (auto& w : workers) w.join();
}

int hardware_threads() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

std::string format_double(double v) {
    // to_chars is locale-independent; %g formatting is not
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

std::uint64_t fnv1a64(std::span<const unsigned char> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("fnv1a64_file: cannot open " + path);
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ull;
        }
    }
    return h;
}

} // namespace mv2
