#include "rmac/actmap_codec.hpp"

#include <fstream>
#include <limits>

#include "rmac/byte_io.hpp"
#include "rmac/errors.hpp"

namespace rmac {

using detail::ByteReader;
using detail::ByteWriter;

namespace {

constexpr char kMagic[4] = {'A', 'M', 'P', '1'};
constexpr std::uint16_t kU16Max = std::numeric_limits<std::uint16_t>::max();

struct Header {
  int width = 0;
  int height = 0;
  int channels = 0;
  ImageMeta meta;
};

Header read_header(ByteReader& in) {
  if (in.get_string(4, "magic") != std::string_view(kMagic, 4)) {
    throw FormatError("bad magic, expected AMP1", 0);
  }
  const auto version = in.get<std::uint16_t>("version");
  if (version != kActmapVersion) in.fail("unsupported version " + std::to_string(version));
  Header h;
  h.width = in.get<std::uint16_t>("width");
  h.height = in.get<std::uint16_t>("height");
  h.channels = in.get<std::uint16_t>("channel count");
  if (h.width == 0 || h.height == 0 || h.channels == 0) in.fail("zero dimension in header");
  h.meta.image_width = in.get<std::uint32_t>("image width");
  h.meta.image_height = in.get<std::uint32_t>("image height");
  if (h.meta.image_width < std::uint32_t(h.width) ||
      h.meta.image_height < std::uint32_t(h.height)) {
    in.fail("image size smaller than feature map");
  }
  const auto id_len = in.get<std::uint16_t>("image id length");
  h.meta.image_id = in.get_string(id_len, "image id");
  return h;
}

// Decodes one channel block into `out` (row-major levels). Returns the
// number of escape bytes consumed.
std::uint64_t read_channel(ByteReader& in, std::span<std::uint8_t> out) {
  const auto nnz = in.get<std::uint32_t>("channel non-zero count");
  if (nnz > out.size()) in.fail("non-zero count exceeds channel size");
  std::uint64_t escapes = 0;
  std::size_t pos = 0;
  for (std::uint32_t n = 0; n < nnz;) {
    const std::uint8_t b = in.get_byte("payload");
    const int delta = b >> 3;
    const int level = b & 7;
    if (delta == 31) {
      if (level != 0) in.fail("escape byte with non-zero level");
      pos += 31;
      ++escapes;
      continue;
    }
    if (level == 0) in.fail("element byte with level 0");
    pos += std::size_t(delta);
    if (pos >= out.size()) in.fail("element position past end of channel");
    out[pos++] = static_cast<std::uint8_t>(level);
    ++n;
  }
  return escapes;
}

}  // namespace

std::vector<std::uint8_t> encode(const ActivationMap& map) {
  if (map.width() > kU16Max || map.height() > kU16Max || map.channels() > kU16Max) {
    throw EncodingError("map dimensions exceed the 16-bit header fields");
  }
  if (map.meta().image_id.size() > kU16Max) throw EncodingError("image id longer than 65535 bytes");

  ByteWriter out;
  out.put_bytes(std::string_view(kMagic, 4));
  out.put<std::uint16_t>(kActmapVersion);
  out.put<std::uint16_t>(static_cast<std::uint16_t>(map.width()));
  out.put<std::uint16_t>(static_cast<std::uint16_t>(map.height()));
  out.put<std::uint16_t>(static_cast<std::uint16_t>(map.channels()));
  out.put<std::uint32_t>(map.meta().image_width);
  out.put<std::uint32_t>(map.meta().image_height);
  out.put<std::uint16_t>(static_cast<std::uint16_t>(map.meta().image_id.size()));
  out.put_bytes(map.meta().image_id);

  for (int c = 0; c < map.channels(); ++c) {
    auto ch = map.channel(c);
    out.put<std::uint32_t>(static_cast<std::uint32_t>(map.nonzeros(c)));
    std::size_t gap = 0;
    for (std::uint8_t level : ch) {
      if (level == 0) {
        ++gap;
        continue;
      }
      for (; gap > std::size_t(kMaxDelta); gap -= 31) out.put_byte(kEscapeByte);
      out.put_byte(static_cast<std::uint8_t>((gap << 3) | level));
      gap = 0;
    }
  }
  return std::move(out.bytes());
}

ActivationMap decode(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  Header h = read_header(in);
  const std::size_t cells = std::size_t(h.width) * h.height;
  std::vector<std::uint8_t> levels(cells * h.channels, 0);
  for (int c = 0; c < h.channels; ++c) {
    read_channel(in, std::span(levels).subspan(cells * c, cells));
  }
  if (!in.at_end()) in.fail("trailing bytes after last channel");
  return ActivationMap(h.width, h.height, h.channels, std::move(levels), std::move(h.meta));
}

ActmapStats inspect(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  Header h = read_header(in);
  ActmapStats s;
  s.width = h.width;
  s.height = h.height;
  s.channels = h.channels;
  s.header_bytes = in.offset() + 4ull * h.channels;
  std::vector<std::uint8_t> scratch(std::size_t(h.width) * h.height);
  for (int c = 0; c < h.channels; ++c) {
    std::fill(scratch.begin(), scratch.end(), 0);
    s.escape_bytes += read_channel(in, scratch);
  }
  if (!in.at_end()) in.fail("trailing bytes after last channel");
  s.total_bytes = bytes.size();
  s.nonzeros = s.total_bytes - s.header_bytes - s.escape_bytes;
  return s;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

ActivationMap read_actmap(const std::filesystem::path& path) {
  return decode(read_file_bytes(path));
}

void write_actmap(const std::filesystem::path& path, const ActivationMap& map) {
  write_file_bytes(path, encode(map));
}

}  // namespace rmac
