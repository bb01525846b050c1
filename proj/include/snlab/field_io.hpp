#ifndef SNLAB_FIELD_IO_HPP
#define SNLAB_FIELD_IO_HPP

#include <iosfwd>
#include <string>

#include "snlab/grid.hpp"

namespace snlab {

// Flat binary layout: magic "SNLF", u32 version, u32 dim, u32 points,
// f64 extent, u32 boundary flag, u32 value kind (0 real / 1 complex),
// then row-major little-endian f64 samples (complex interleaved re,im).

void write_field(std::ostream& os, const RealField& f);
void write_field(std::ostream& os, const ComplexField& f);
void write_field_file(const std::string& path, const RealField& f);
void write_field_file(const std::string& path, const ComplexField& f);

RealField read_real_field(std::istream& is);
ComplexField read_complex_field(std::istream& is);
RealField read_real_field_file(const std::string& path);
ComplexField read_complex_field_file(const std::string& path);

/// CSV with a version header row, index columns i1..id, coordinate
/// columns x1..xd and the value column(s).
void write_field_csv(std::ostream& os, const RealField& f);
void write_field_csv(std::ostream& os, const ComplexField& f);

} // namespace snlab

#endif
