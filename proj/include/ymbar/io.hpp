#pragma once

#include <cstring>
#include <filesystem>
#include <fstream>

#include "ymbar/flow.hpp"

namespace ymbar {

// ---------------------------------------------------------------------------
// Connection snapshots. Fixed little-endian layout:
//   magic "YMB1" | u16 version | u32 n | u32 N | f64 L | u32 rank |
//   u8 background flag | 6 x (f64 re, f64 im) background coefficients
//   (f20, f11 row-major, f02) | u64 seed |
//   n components of a01 in canonical multi-index order, each row-major over
//   the grid, each matrix entry row-major as (f64 re, f64 im).
// Round trips are bit-exact.
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u16(std::string& s, std::uint16_t v) {
    s.push_back(static_cast<char>(v & 0xff));
    s.push_back(static_cast<char>((v >> 8) & 0xff));
}
inline void put_u32(std::string& s, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& s, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_f64(std::string& s, double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, 8);
    put_u64(s, v);
}

struct Cursor {
    const unsigned char* p;
    std::size_t left;
    void need(std::size_t n) const {
        if (left < n) throw IoError("snapshot truncated");
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>(p[0] | (p[1] << 8));
        p += 2; left -= 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
        p += 4; left -= 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
        p += 8; left -= 8;
        return v;
    }
    double f64() {
        const std::uint64_t v = u64();
        double d;
        std::memcpy(&d, &v, 8);
        return d;
    }
    std::uint8_t u8() {
        need(1);
        std::uint8_t v = *p;
        ++p; --left;
        return v;
    }
};

}  // namespace detail

inline constexpr char kSnapshotMagic[4] = {'Y', 'M', 'B', '1'};
inline constexpr std::uint16_t kSnapshotVersion = 1;

inline std::string encode_snapshot(const Connection& A, std::uint64_t seed) {
    const auto& g = A.geom();
    for (int a = 0; a < g.axes(); ++a)
        if (g.ext[a] != g.N)
            throw ConfigError("snapshots require an unrefined grid");
    std::string s;
    s.append(kSnapshotMagic, 4);
    detail::put_u16(s, kSnapshotVersion);
    detail::put_u32(s, static_cast<std::uint32_t>(g.n));
    detail::put_u32(s, static_cast<std::uint32_t>(g.N));
    detail::put_f64(s, g.L);
    detail::put_u32(s, static_cast<std::uint32_t>(A.rank()));
    const bool bg = A.background().has_value();
    s.push_back(bg ? 1 : 0);
    std::array<cplx, 6> coeffs{};
    if (bg) {
        const Background& b = *A.background();
        coeffs[0] = b.f20;
        for (int i = 0; i < 4; ++i) coeffs[1 + i] = b.f11[i];
        coeffs[5] = b.f02;
    }
    for (const cplx& c : coeffs) {
        detail::put_f64(s, c.real());
        detail::put_f64(s, c.imag());
    }
    detail::put_u64(s, seed);
    const int r = A.rank();
    for (int k = 1; k <= g.n; ++k) {
        const MatrixField& c = A.coeff01(k);
        for (std::size_t x = 0; x < g.points(); ++x)
            for (int u = 0; u < r; ++u)
                for (int v = 0; v < r; ++v) {
                    detail::put_f64(s, c.at(x, u, v).real());
                    detail::put_f64(s, c.at(x, u, v).imag());
                }
    }
    return s;
}

inline Connection decode_snapshot(const std::string& bytes, bool dealias = true,
                                  std::uint64_t* seed_out = nullptr) {
    detail::Cursor c{reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()};
    c.need(4);
    if (std::memcmp(c.p, kSnapshotMagic, 4) != 0) throw IoError("bad snapshot magic");
    c.p += 4;
    c.left -= 4;
    const std::uint16_t ver = c.u16();
    if (ver != kSnapshotVersion)
        throw IoError("unsupported snapshot version " + std::to_string(ver));
    const int n = static_cast<int>(c.u32());
    const int N = static_cast<int>(c.u32());
    const double L = c.f64();
    const int rank = static_cast<int>(c.u32());
    const bool bg_flag = c.u8() != 0;
    std::array<cplx, 6> coeffs{};
    for (auto& co : coeffs) {
        const double re = c.f64();
        const double im = c.f64();
        co = {re, im};
    }
    const std::uint64_t seed = c.u64();
    if (seed_out) *seed_out = seed;
    if (n < 1 || n > 2 || N < 4 || N % 2 != 0 || !(L > 0.0) || rank < 1)
        throw IoError("corrupt snapshot header");

    TorusGeometry g = make_torus(n, N, L, dealias);
    const std::size_t expect = static_cast<std::size_t>(n) * g.points() *
                               static_cast<std::size_t>(rank) * rank * 16;
    if (c.left != expect) throw IoError("snapshot payload size mismatch");

    FormPQ a01(g, rank, 0, 1);
    for (int k = 1; k <= n; ++k) {
        MatrixField& f = a01.comp(0u, 1u << (k - 1));
        for (std::size_t x = 0; x < g.points(); ++x)
            for (int u = 0; u < rank; ++u)
                for (int v = 0; v < rank; ++v) {
                    const double re = c.f64();
                    const double im = c.f64();
                    f.at(x, u, v) = {re, im};
                }
        f.mark_full_band();  // stored fields carry no band certificate
    }
    std::optional<Background> bg;
    if (bg_flag) {
        Background b;
        b.f20 = coeffs[0];
        for (int i = 0; i < 4; ++i) b.f11[i] = coeffs[1 + i];
        b.f02 = coeffs[5];
        bg = b;
    }
    return Connection(g, rank, std::move(a01), std::move(bg));
}

inline void write_snapshot(const std::filesystem::path& path, const Connection& A,
                           std::uint64_t seed) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    const std::string bytes = encode_snapshot(A, seed);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("short write to " + path.string());
}

inline Connection read_snapshot(const std::filesystem::path& path, bool dealias = true,
                                std::uint64_t* seed_out = nullptr) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(f)),
                      std::istreambuf_iterator<char>());
    return decode_snapshot(bytes, dealias, seed_out);
}

// ---------------------------------------------------------------------------
// Flow trace CSV.
// ---------------------------------------------------------------------------

inline void write_trace_csv(std::ostream& os, const FlowTrace& trace) {
    os << "step,t,dt,energy,grad_norm,f02_norm,f11_norm,accepted\n";
    os.precision(17);
    for (const auto& r : trace.rows)
        os << r.step << ',' << r.t << ',' << r.dt << ',' << r.energy << ','
           << r.grad_norm << ',' << r.f02_norm << ',' << r.f11_norm << ','
           << (r.accepted ? 1 : 0) << '\n';
}

inline void write_trace_csv(const std::filesystem::path& path, const FlowTrace& trace) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    write_trace_csv(f, trace);
    if (!f) throw IoError("short write to " + path.string());
}

}  // namespace ymbar
