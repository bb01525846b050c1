#include "snlab/field_io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>
#include <vector>

namespace snlab {

namespace {

constexpr char magic[4] = {'S', 'N', 'L', 'F'};
constexpr std::uint32_t format_version = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw Error("field stream truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

void put_f64(std::ostream& os, double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw Error("field stream truncated");
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &u, 8);
    return v;
}

void write_header(std::ostream& os, const GridSpec& g, std::uint32_t kind) {
    os.write(magic, 4);
    put_u32(os, format_version);
    put_u32(os, static_cast<std::uint32_t>(g.dim));
    put_u32(os, static_cast<std::uint32_t>(g.points));
    put_f64(os, g.extent);
    put_u32(os, g.boundary == Boundary::periodic ? 0u : 1u);
    put_u32(os, kind);
}

GridSpec read_header(std::istream& is, std::uint32_t expected_kind) {
    char m[4];
    is.read(m, 4);
    if (!is || std::memcmp(m, magic, 4) != 0) throw Error("not a field stream (bad magic)");
    const std::uint32_t ver = get_u32(is);
    if (ver != format_version) throw Error("unsupported field format version");
    const int dim = static_cast<int>(get_u32(is));
    const int points = static_cast<int>(get_u32(is));
    const double extent = get_f64(is);
    const std::uint32_t bflag = get_u32(is);
    const std::uint32_t kind = get_u32(is);
    if (kind != expected_kind) throw Error("field stream holds the other value kind");
    return GridSpec(dim, extent, points, bflag == 0 ? Boundary::periodic : Boundary::zero_padded);
}

const char* boundary_name(Boundary b) {
    return b == Boundary::periodic ? "periodic" : "zero-padded";
}

void csv_header(std::ostream& os, const GridSpec& g, bool is_complex) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "# snlab-field v1, dim=%d, n=%d, L=%.17g, boundary=%s\n",
                  g.dim, g.points, g.extent, boundary_name(g.boundary));
    os << buf;
    for (int a = 0; a < g.dim; ++a) os << 'i' << (a + 1) << ',';
    for (int a = 0; a < g.dim; ++a) os << 'x' << (a + 1) << ',';
    os << (is_complex ? "re,im" : "value") << '\n';
}

} // namespace

void write_field(std::ostream& os, const RealField& f) {
    write_header(os, f.grid, 0);
    for (double v : f.values) put_f64(os, v);
}

void write_field(std::ostream& os, const ComplexField& f) {
    write_header(os, f.grid, 1);
    for (const complex& v : f.values) {
        put_f64(os, v.real());
        put_f64(os, v.imag());
    }
}

RealField read_real_field(std::istream& is) {
    GridSpec g = read_header(is, 0);
    RealField f(g);
    for (double& v : f.values) v = get_f64(is);
    return f;
}

ComplexField read_complex_field(std::istream& is) {
    GridSpec g = read_header(is, 1);
    ComplexField f(g);
    for (complex& v : f.values) {
        const double re = get_f64(is);
        const double im = get_f64(is);
        v = complex(re, im);
    }
    return f;
}

namespace {
template <class F>
void write_file_impl(const std::string& path, const F& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path + " for writing");
    write_field(os, f);
}
} // namespace

void write_field_file(const std::string& path, const RealField& f) { write_file_impl(path, f); }
void write_field_file(const std::string& path, const ComplexField& f) { write_file_impl(path, f); }

RealField read_real_field_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path);
    return read_real_field(is);
}

ComplexField read_complex_field_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path);
    return read_complex_field(is);
}

void write_field_csv(std::ostream& os, const RealField& f) {
    const GridSpec& g = f.grid;
    csv_header(os, g, false);
    std::vector<int> idx(static_cast<std::size_t>(g.dim), 0);
    std::size_t p = 0;
    char buf[64];
    do {
        for (int a = 0; a < g.dim; ++a) os << idx[a] << ',';
        for (int a = 0; a < g.dim; ++a) {
            std::snprintf(buf, sizeof buf, "%.17g,", g.coord(idx[a]));
            os << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g\n", f.values[p++]);
        os << buf;
    } while (advance(idx, g.points));
}

void write_field_csv(std::ostream& os, const ComplexField& f) {
    const GridSpec& g = f.grid;
    csv_header(os, g, true);
    std::vector<int> idx(static_cast<std::size_t>(g.dim), 0);
    std::size_t p = 0;
    char buf[96];
    do {
        for (int a = 0; a < g.dim; ++a) os << idx[a] << ',';
        for (int a = 0; a < g.dim; ++a) {
            std::snprintf(buf, sizeof buf, "%.17g,", g.coord(idx[a]));
            os << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", f.values[p].real(), f.values[p].imag());
        ++p;
        os << buf;
    } while (advance(idx, g.points));
}

} // namespace snlab
