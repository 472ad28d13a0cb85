#include "xag/io.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>

#include "xag/errors.hpp"

namespace xag {

namespace {

constexpr char kTensorMagic[4] = {'X', 'A', 'G', 'T'};

void put_le(std::ostream& os, std::uint64_t v, int bytes) {
  char buf[8];
  for (int i = 0; i < bytes; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(buf, bytes);
}

std::uint64_t get_le(std::istream& is, int bytes) {
  char buf[8];
  is.read(buf, bytes);
  if (is.gcount() != bytes) throw IntegrityError("unexpected end of stream");
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  return v;
}

}  // namespace

void write_u8(std::ostream& os, std::uint8_t v) { put_le(os, v, 1); }
void write_u16(std::ostream& os, std::uint16_t v) { put_le(os, v, 2); }
void write_u32(std::ostream& os, std::uint32_t v) { put_le(os, v, 4); }
void write_u64(std::ostream& os, std::uint64_t v) { put_le(os, v, 8); }

void write_f64(std::ostream& os, double v) { put_le(os, std::bit_cast<std::uint64_t>(v), 8); }

void write_bytes(std::ostream& os, const void* data, std::size_t n) {
  os.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

void write_string(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<std::uint32_t>(s.size()));
  write_bytes(os, s.data(), s.size());
}

std::uint8_t read_u8(std::istream& is) { return static_cast<std::uint8_t>(get_le(is, 1)); }
std::uint16_t read_u16(std::istream& is) { return static_cast<std::uint16_t>(get_le(is, 2)); }
std::uint32_t read_u32(std::istream& is) { return static_cast<std::uint32_t>(get_le(is, 4)); }
std::uint64_t read_u64(std::istream& is) { return get_le(is, 8); }

double read_f64(std::istream& is) { return std::bit_cast<double>(get_le(is, 8)); }

void read_bytes(std::istream& is, void* data, std::size_t n) {
  is.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n)
    throw IntegrityError("unexpected end of stream");
}

std::string read_string(std::istream& is) {
  std::uint32_t n = read_u32(is);
  if (n > (1u << 28)) throw IntegrityError("string length field is implausible");
  std::string s(n, '\0');
  if (n > 0) read_bytes(is, s.data(), n);
  return s;
}

void write_tensor(std::ostream& os, const Tensor& t) {
  if (t.empty()) throw ContractError("write_tensor: empty tensor");
  write_bytes(os, kTensorMagic, 4);
  write_u32(os, static_cast<std::uint32_t>(t.rows()));
  write_u32(os, static_cast<std::uint32_t>(t.cols()));
  for (double v : t.values()) write_f64(os, v);
}

Tensor read_tensor(std::istream& is) {
  char magic[4];
  read_bytes(is, magic, 4);
  if (std::memcmp(magic, kTensorMagic, 4) != 0)
    throw IntegrityError("bad tensor magic bytes");
  std::uint32_t rows = read_u32(is);
  std::uint32_t cols = read_u32(is);
  if (rows == 0 || cols == 0 || rows > (1u << 20) || cols > (1u << 20))
    throw IntegrityError("tensor header dims are implausible");
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(rows) * cols);
  for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(rows) * cols; ++i)
    data.push_back(read_f64(is));
  return Tensor(static_cast<int>(rows), static_cast<int>(cols), std::move(data));
}

}  // namespace xag
