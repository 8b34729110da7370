#include "npy.hpp"

#include <cstring>
#include <regex>

#include "rmac/actmap_codec.hpp"
#include "rmac/byte_io.hpp"
#include "rmac/errors.hpp"

namespace rmac::tools {

namespace {
constexpr char kMagic[] = "\x93NUMPY";
}

DenseTensor read_npy_tensor(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  detail::ByteReader in(bytes);
  const auto magic = in.get_string(6, "npy magic");
  if (magic != std::string(kMagic, 6)) throw FormatError("not a .npy file", 0);
  const auto major = in.get_byte("npy version");
  in.get_byte("npy version");
  std::size_t header_len = 0;
  if (major == 1) {
    header_len = in.get<std::uint16_t>("npy header length");
  } else if (major == 2 || major == 3) {
    header_len = in.get<std::uint32_t>("npy header length");
  } else {
    throw FormatError("unsupported .npy version " + std::to_string(major), 6);
  }
  const std::size_t header_at = in.offset();
  const auto header = in.get_string(header_len, "npy header");

  std::smatch m;
  static const std::regex descr_re(R"('descr'\s*:\s*'([<>|=]?)([fiu])(\d+)')");
  static const std::regex order_re(R"('fortran_order'\s*:\s*(True|False))");
  static const std::regex shape_re(R"('shape'\s*:\s*\(\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*,?\s*\))");
  if (!std::regex_search(header, m, descr_re)) throw FormatError("npy header has no dtype", header_at);
  const std::string endian = m[1], kind = m[2];
  const int width = std::stoi(m[3]);
  if (endian == ">" || kind != "f" || (width != 4 && width != 8)) {
    throw FormatError("npy dtype must be little-endian float32 or float64", header_at);
  }
  if (!std::regex_search(header, m, order_re) || m[1] == "True") {
    throw FormatError("npy array must be in C order", header_at);
  }
  if (!std::regex_search(header, m, shape_re)) {
    throw FormatError("npy array must have shape (K, H, W)", header_at);
  }
  const int k = std::stoi(m[1]), h = std::stoi(m[2]), w = std::stoi(m[3]);
  if (k <= 0 || h <= 0 || w <= 0) throw FormatError("npy array has an empty dimension", header_at);

  DenseTensor t(w, h, k);
  const std::size_t n = t.values.size();
  if (bytes.size() - in.offset() != n * std::size_t(width)) {
    throw FormatError("npy data size does not match its shape", in.offset());
  }
  const std::uint8_t* p = bytes.data() + in.offset();
  for (std::size_t i = 0; i < n; ++i) {
    if (width == 4) {
      float f;
      std::memcpy(&f, p + i * 4, 4);
      t.values[i] = f;
    } else {
      std::memcpy(&t.values[i], p + i * 8, 8);
    }
  }
  return t;
}

void write_npy_tensor(const std::filesystem::path& path, const DenseTensor& t) {
  std::string header = "{'descr': '<f8', 'fortran_order': False, 'shape': (" + std::to_string(t.channels) +
                       ", " + std::to_string(t.height) + ", " + std::to_string(t.width) + "), }";
  // pad so the data starts on a 64-byte boundary
  const std::size_t total = 10 + header.size() + 1;
  header.append((64 - total % 64) % 64, ' ');
  header.push_back('\n');
  detail::ByteWriter out;
  out.put_bytes(std::string_view(kMagic, 6));
  out.put_byte(1);
  out.put_byte(0);
  out.put<std::uint16_t>(static_cast<std::uint16_t>(header.size()));
  out.put_bytes(header);
  for (double v : t.values) out.put<double>(v);
  write_file_bytes(path, out.bytes());
}

}  // namespace rmac::tools
