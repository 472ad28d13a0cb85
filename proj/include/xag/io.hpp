#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "xag/tensor.hpp"

namespace xag {

// Little-endian primitives. Readers throw IntegrityError on short reads.
void write_u8(std::ostream& os, std::uint8_t v);
void write_u16(std::ostream& os, std::uint16_t v);
void write_u32(std::ostream& os, std::uint32_t v);
void write_u64(std::ostream& os, std::uint64_t v);
void write_f64(std::ostream& os, double v);
void write_bytes(std::ostream& os, const void* data, std::size_t n);
void write_string(std::ostream& os, const std::string& s);  // u32 length + bytes

std::uint8_t read_u8(std::istream& is);
std::uint16_t read_u16(std::istream& is);
std::uint32_t read_u32(std::istream& is);
std::uint64_t read_u64(std::istream& is);
double read_f64(std::istream& is);
void read_bytes(std::istream& is, void* data, std::size_t n);
std::string read_string(std::istream& is);

/// Tensor container: magic "XAGT", u32 rows, u32 cols, rows*cols f64.
void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);

}  // namespace xag
