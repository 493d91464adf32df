#pragma once

// Serialization of sifted sets (newline-delimited text and a delta-encoded
// binary format), CSV table emitters with fixed 12-significant-digit floats,
// and JSON records for classifier verdicts.

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "qsift/moments.hpp"

namespace qsift {

// fixed float formatting: 12 significant digits, locale-free
inline std::string fmt_g12(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Text format: one decimal member per line. The modulus travels separately.
// ---------------------------------------------------------------------------

inline void save_members_text(const SiftedSet& a, std::ostream& out) {
    for (i64 m : a.members) out << m << '\n';
}

inline SiftedSet load_members_text(std::istream& in, const SquareFreeModulus& modulus) {
    std::vector<i64> members;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        members.push_back(std::stoll(line));
    }
    for (size_t i = 0; i < members.size(); ++i) {
        if (members[i] < 0 || members[i] >= modulus.q())
            fail(errc::bad_argument, "member out of range");
        if (i > 0 && members[i] <= members[i - 1])
            fail(errc::bad_argument, "members must be strictly increasing");
    }
    return SiftedSet{modulus, std::move(members), std::nullopt};
}

// ---------------------------------------------------------------------------
// Binary format: little-endian u64 q, u64 count, then LEB128 deltas with the
// first member encoded as its own delta from zero.
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u64(std::ostream& out, u64 v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = char(v >> (8 * i));
    out.write(buf, 8);
}

inline u64 get_u64(std::istream& in) {
    unsigned char buf[8];
    if (!in.read(reinterpret_cast<char*>(buf), 8)) fail(errc::bad_argument, "truncated binary set");
    u64 v = 0;
    for (int i = 0; i < 8; ++i) v |= u64(buf[i]) << (8 * i);
    return v;
}

inline void put_varint(std::ostream& out, u64 v) {
    while (v >= 0x80) {
        out.put(char(0x80 | (v & 0x7f)));
        v >>= 7;
    }
    out.put(char(v));
}

inline u64 get_varint(std::istream& in) {
    u64 v = 0;
    int shift = 0;
    for (;;) {
        int c = in.get();
        if (c == EOF) fail(errc::bad_argument, "truncated binary set");
        v |= u64(c & 0x7f) << shift;
        if (!(c & 0x80)) return v;
        shift += 7;
        if (shift > 63) fail(errc::bad_argument, "varint overflow");
    }
}

} // namespace detail

inline void save_members_binary(const SiftedSet& a, std::ostream& out) {
    detail::put_u64(out, u64(a.q()));
    detail::put_u64(out, u64(a.members.size()));
    i64 prev = 0;
    for (i64 m : a.members) {
        detail::put_varint(out, u64(m - prev));
        prev = m;
    }
}

inline SiftedSet load_members_binary(std::istream& in) {
    i64 q = i64(detail::get_u64(in));
    u64 count = detail::get_u64(in);
    auto modulus = factor_squarefree(q);
    std::vector<i64> members;
    members.reserve(count);
    i64 prev = 0;
    for (u64 i = 0; i < count; ++i) {
        prev += i64(detail::get_varint(in));
        if (prev >= q) fail(errc::bad_argument, "member out of range");
        members.push_back(prev);
    }
    return SiftedSet{modulus, std::move(members), std::nullopt};
}

// ---------------------------------------------------------------------------
// CSV tables
// ---------------------------------------------------------------------------

struct MomentsRow {
    i64 q = 0, h = 0, s = 0, k = 0;
    double m_exact = 0, m_paper = 0, bound_eq7 = 0, bound_eq8 = 0, ratio = 0;
};

inline void write_moments_header(std::ostream& out) {
    out << "q,h,s,k,M_k_exact_center,M_k_paper_center,bound_eq7,bound_eq8,ratio\n";
}

inline void write_moments_row(std::ostream& out, const MomentsRow& r) {
    out << r.q << ',' << r.h << ',' << r.s << ',' << r.k << ',' << fmt_g12(r.m_exact) << ','
        << fmt_g12(r.m_paper) << ',' << fmt_g12(r.bound_eq7) << ',' << fmt_g12(r.bound_eq8) << ','
        << fmt_g12(r.ratio) << '\n';
}

struct GapRow {
    i64 q = 0, lambda = 0;
    double v_lambda = 0, corollary_bound = 0, ratio = 0;
};

inline void write_gap_header(std::ostream& out) {
    out << "q,lambda,V_lambda,corollary_bound,ratio\n";
}

inline void write_gap_row(std::ostream& out, const GapRow& r) {
    out << r.q << ',' << r.lambda << ',' << fmt_g12(r.v_lambda) << ','
        << fmt_g12(r.corollary_bound) << ',' << fmt_g12(r.ratio) << '\n';
}

struct SpacingRow {
    i64 q = 0;
    double alpha = 0, beta = 0, statistic = 0, expected = 0;
};

inline void write_spacing_header(std::ostream& out) {
    out << "q,alpha,beta,statistic,expected\n";
}

inline void write_spacing_row(std::ostream& out, const SpacingRow& r) {
    out << r.q << ',' << fmt_g12(r.alpha) << ',' << fmt_g12(r.beta) << ','
        << fmt_g12(r.statistic) << ',' << fmt_g12(r.expected) << '\n';
}

// ---------------------------------------------------------------------------
// JSON records
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json verdict_json(const StructureVerdict& v, const std::string& set_kind) {
    nlohmann::ordered_json j;
    j["p"] = v.p;
    j["set_kind"] = set_kind;
    j["max_magnitude"] = v.max_magnitude;
    j["witness_a"] = v.witness_a;
    j["verdict"] = structure_kind_name(v.kind);
    j["c_threshold"] = v.c_threshold;
    j["C_threshold"] = v.C_threshold;
    return j;
}

} // namespace qsift
