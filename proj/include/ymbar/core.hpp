#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ymbar {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr cplx kI{0.0, 1.0};

/// Raised for invalid run configuration (manifest values, bad parameters).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Raised for file-format and filesystem failures.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Deterministic random source. All randomness in the library flows through
// this one generator type; distributions are hand-rolled so that streams are
// reproducible independent of the standard library implementation.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derive an independent stream seed from a base seed and a salt.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
    return splitmix64(seed ^ splitmix64(salt + 0x517cc1b727220a95ULL));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    /// Uniform in [0,1) with 53-bit resolution.
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller (no hidden state).
    double gaussian() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    /// Complex standard normal (unit variance per real component).
    cplx cgauss() {
        const double re = gaussian();
        const double im = gaussian();
        return {re, im};
    }

    std::uint64_t next_u64() { return eng_(); }

private:
    std::mt19937_64 eng_;
};

// ---------------------------------------------------------------------------
// Strictly increasing multi-indices over {1..n}, encoded as bitmasks
// (bit k-1 set means axis k is present). Basis ordering is lexicographic.
// ---------------------------------------------------------------------------

inline int popcount(unsigned m) {
    int c = 0;
    while (m) { c += static_cast<int>(m & 1u); m >>= 1; }
    return c;
}

inline long binomial(int n, int k) {
    if (k < 0 || k > n || n < 0) return 0;
    long r = 1;
    for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
    return r;
}

/// All size-p subsets of {1..n} as bitmasks, lexicographic in the index lists.
inline std::vector<unsigned> subsets(int n, int p) {
    std::vector<unsigned> out;
    if (p < 0 || p > n) return out;
    for (unsigned m = 0; m < (1u << n); ++m)
        if (popcount(m) == p) out.push_back(m);
    return out;
}

/// Position of subset mask within subsets(n, |mask|); -1 if absent.
inline int subset_index(int n, unsigned mask) {
    const auto list = subsets(n, popcount(mask));
    for (std::size_t i = 0; i < list.size(); ++i)
        if (list[i] == mask) return static_cast<int>(i);
    (void)n;
    return -1;
}

/// Sign of pulling factor k to the front of the increasing list `mask`.
/// Requires k in mask.
inline int extract_sign(unsigned mask, int k) {
    int before = popcount(mask & ((1u << (k - 1)) - 1u));
    return (before % 2 == 0) ? 1 : -1;
}

/// Sign of merging two disjoint increasing factor lists a, b into one
/// increasing list (parity of inversions between them).
inline int merge_sign(unsigned a, unsigned b) {
    int inv = 0;
    for (int i = 0; i < 8; ++i) {
        if (!(a & (1u << i))) continue;
        // count members of b strictly smaller than this member of a
        inv += popcount(b & ((1u << i) - 1u));
    }
    return (inv % 2 == 0) ? 1 : -1;
}

// ---------------------------------------------------------------------------
// Small dense complex linear solve (partial pivoting). Used for the pointwise
// matrix inverse and the Hodge-star defining-relation solve; sizes stay tiny.
// ---------------------------------------------------------------------------

inline void solve_dense(std::vector<cplx>& a, std::vector<cplx>& b, int dim,
                        const char* what) {
    for (int col = 0; col < dim; ++col) {
        int piv = col;
        double best = std::abs(a[col * dim + col]);
        for (int r = col + 1; r < dim; ++r) {
            const double v = std::abs(a[r * dim + col]);
            if (v > best) { best = v; piv = r; }
        }
        if (best < 1e-300)
            throw std::runtime_error(std::string("singular system in ") + what);
        if (piv != col) {
            for (int c = 0; c < dim; ++c) std::swap(a[piv * dim + c], a[col * dim + c]);
            std::swap(b[piv], b[col]);
        }
        const cplx d = a[col * dim + col];
        for (int r = col + 1; r < dim; ++r) {
            const cplx f = a[r * dim + col] / d;
            if (f == cplx{}) continue;
            for (int c = col; c < dim; ++c) a[r * dim + c] -= f * a[col * dim + c];
            b[r] -= f * b[col];
        }
    }
    for (int col = dim - 1; col >= 0; --col) {
        cplx s = b[col];
        for (int c = col + 1; c < dim; ++c) s -= a[col * dim + c] * b[c];
        b[col] = s / a[col * dim + col];
    }
}

}  // namespace ymbar
