#pragma once

#include <fnmatch.h>
#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "derain/error.hpp"
#include "derain/tensor.hpp"

namespace derain::io {

namespace fs = std::filesystem;

// Image sequences (PGM/PPM/PNG, 8-bit) and the raw tensor container.
//
// Raw container layout, all integers little-endian:
//   offset  size  field
//        0     8  magic "DRNTNSR1"
//        8     4  uint32 format version (1)
//       12     4  uint32 scalar type: 1 = float32, 2 = float64
//       16     8  uint64 height
//       24     8  uint64 width
//       32     8  uint64 frames
//       40     -  height*width*frames IEEE-754 scalars, little-endian, height
//                 index fastest, then width, then frame
// See docs/raw_format.md.

inline constexpr std::array<char, 8> kRawMagic{'D', 'R', 'N', 'T', 'N', 'S', 'R', '1'};
inline constexpr std::uint32_t kRawVersion = 1;
inline constexpr std::size_t kRawHeaderSize = 40;

enum class Precision : std::uint32_t { float32 = 1, float64 = 2 };

enum class ImageFormat { pgm, png };

inline ImageFormat parse_image_format(const std::string& s) {
  if (s == "pgm") return ImageFormat::pgm;
  if (s == "png") return ImageFormat::png;
  throw UsageError("unsupported image format '" + s + "' (expected pgm or png)");
}

/// One decoded frame, luminance in [0, 1], column-major m x n.
struct Frame {
  std::size_t height = 0, width = 0;
  std::vector<double> values;
};

/// Rec.601 luma.
inline double luminance(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

/// 8-bit quantization with round-half-up after clamping to [0, 1].
inline std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5));
}

namespace detail {

inline std::string lower_ext(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

inline bool is_image_file(const fs::path& p) {
  const std::string e = lower_ext(p);
  return e == ".pgm" || e == ".ppm" || e == ".pnm" || e == ".png";
}

// Netpbm header token, skipping whitespace and comments.
inline std::string pnm_token(std::istream& in) {
  std::string tok;
  int c = 0;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {}
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

inline Frame read_pnm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  const std::string magic = pnm_token(in);
  const bool ascii = magic == "P2" || magic == "P3";
  const bool color = magic == "P3" || magic == "P6";
  if (magic != "P2" && magic != "P3" && magic != "P5" && magic != "P6") {
    throw DataError("'" + path.string() + "': not a PGM/PPM file");
  }
  Frame f;
  long maxval = 0;
  try {
    f.width = std::stoul(pnm_token(in));
    f.height = std::stoul(pnm_token(in));
    maxval = std::stol(pnm_token(in));
  } catch (const std::exception&) {
    throw DataError("'" + path.string() + "': malformed header");
  }
  if (f.width == 0 || f.height == 0 || maxval <= 0 || maxval > 65535) {
    throw DataError("'" + path.string() + "': invalid dimensions or maxval");
  }
  const std::size_t channels = color ? 3 : 1, count = f.width * f.height * channels;
  std::vector<double> raw(count);
  if (ascii) {
    for (auto& v : raw) {
      const std::string tok = pnm_token(in);
      if (tok.empty()) throw DataError("'" + path.string() + "': truncated pixel data");
      v = std::stod(tok);
    }
  } else {
    const std::size_t bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> buf(count * bytes);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size())) {
      throw DataError("'" + path.string() + "': truncated pixel data");
    }
    for (std::size_t i = 0; i < count; ++i) {
      raw[i] = bytes == 2 ? static_cast<double>((buf[2 * i] << 8) | buf[2 * i + 1]) : buf[i];
    }
  }
  f.values.resize(f.width * f.height);
  const double scale = 1.0 / static_cast<double>(maxval);
  // Netpbm is row-major; frames are stored column-major.
  for (std::size_t r = 0; r < f.height; ++r) {
    for (std::size_t c = 0; c < f.width; ++c) {
      const std::size_t src = (r * f.width + c) * channels;
      f.values[r + f.height * c] =
          color ? luminance(raw[src] * scale, raw[src + 1] * scale, raw[src + 2] * scale)
                : raw[src] * scale;
    }
  }
  return f;
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

inline Frame read_png(const fs::path& path) {
  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw DataError("cannot open '" + path.string() + "'");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("libpng: out of memory reading '" + path.string() + "'");
  }
  Frame f;
  std::vector<png_byte> pixels;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("'" + path.string() + "': invalid PNG data");
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  f.width = png_get_image_width(png, info);
  f.height = png_get_image_height(png, info);
  const std::size_t channels = png_get_channels(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  pixels.resize(stride * f.height);
  rows.resize(f.height);
  for (std::size_t r = 0; r < f.height; ++r) rows[r] = pixels.data() + r * stride;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);

  f.values.resize(f.width * f.height);
  for (std::size_t r = 0; r < f.height; ++r) {
    for (std::size_t c = 0; c < f.width; ++c) {
      const png_byte* px = rows[r] + c * channels;
      f.values[r + f.height * c] =
          channels >= 3 ? luminance(px[0] / 255.0, px[1] / 255.0, px[2] / 255.0) : px[0] / 255.0;
    }
  }
  return f;
}

inline void write_pgm(const fs::path& path, std::span<const double> frame, std::size_t m,
                      std::size_t n) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "P5\n" << n << " " << m << "\n255\n";
  std::vector<char> row(n);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) row[c] = static_cast<char>(quantize(frame[r + m * c]));
    out.write(row.data(), static_cast<std::streamsize>(n));
  }
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

inline void write_png(const fs::path& path, std::span<const double> frame, std::size_t m,
                      std::size_t n) {
  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw DataError("cannot write '" + path.string() + "'");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw DataError("libpng: out of memory writing '" + path.string() + "'");
  }
  std::vector<png_byte> pixels(m * n);
  std::vector<png_bytep> rows(m);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) pixels[r * n + c] = quantize(frame[r + m * c]);
    rows[r] = pixels.data() + r * n;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError("libpng: failed writing '" + path.string() + "'");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(n), static_cast<png_uint_32>(m), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

inline void put_u32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
inline void put_u64(std::vector<unsigned char>& b, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
inline std::uint64_t get_le(const unsigned char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace detail

/// Decodes one PGM/PPM/PNG image into a luminance frame.
inline Frame read_image(const fs::path& path) {
  const std::string ext = detail::lower_ext(path);
  if (ext == ".png") return detail::read_png(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return detail::read_pnm(path);
  throw DataError("'" + path.string() + "': unsupported image type");
}

/// Resolves a sequence specification to a sorted file list. The spec is a
/// directory (every image inside it), a glob pattern on the file name
/// (`dir/frame_*.png`) or a single image file.
inline std::vector<fs::path> list_sequence(const std::string& spec) {
  std::vector<fs::path> files;
  const fs::path p(spec);
  std::error_code ec;
  if (fs::is_directory(p, ec)) {
    for (const auto& e : fs::directory_iterator(p)) {
      if (e.is_regular_file() && detail::is_image_file(e.path())) files.push_back(e.path());
    }
  } else if (spec.find_first_of("*?[") != std::string::npos) {
    const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
    const std::string pattern = p.filename().string();
    if (!fs::is_directory(dir, ec)) throw DataError("no such directory '" + dir.string() + "'");
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_regular_file() &&
          fnmatch(pattern.c_str(), e.path().filename().c_str(), 0) == 0) {
        files.push_back(e.path());
      }
    }
  } else if (fs::is_regular_file(p, ec)) {
    files.push_back(p);
  } else {
    throw DataError("input '" + spec + "' does not exist");
  }
  if (files.empty()) throw DataError("no image files match '" + spec + "'");
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  return files;
}

/// Reads an image sequence as an m x n x t luminance volume in [0, 1]. Frames
/// are ordered lexicographically by file name and must share dimensions.
inline VideoTensor read_sequence(const std::string& spec) {
  const auto files = list_sequence(spec);
  std::vector<Frame> frames;
  frames.reserve(files.size());
  for (const auto& f : files) {
    frames.push_back(read_image(f));
    if (frames.back().height != frames.front().height ||
        frames.back().width != frames.front().width) {
      throw DataError("'" + f.string() + "': frame is " + std::to_string(frames.back().width) +
                      "x" + std::to_string(frames.back().height) + " but '" +
                      files.front().string() + "' is " + std::to_string(frames.front().width) +
                      "x" + std::to_string(frames.front().height));
    }
  }
  const Shape shape{frames.front().height, frames.front().width, frames.size()};
  if (shape.height < 2 || shape.width < 2) {
    throw DataError("'" + files.front().string() + "': frames must be at least 2x2");
  }
  VideoTensor out(shape);
  for (std::size_t k = 0; k < frames.size(); ++k) {
    std::copy(frames[k].values.begin(), frames[k].values.end(), out.frame(k).begin());
  }
  return out;
}

/// Writes each frame as <dir>/<prefix>_NNNN.<ext>, creating dir if needed.
inline std::vector<fs::path> write_sequence(const VideoTensor& x, const fs::path& dir,
                                            ImageFormat format,
                                            const std::string& prefix = "frame") {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw DataError("cannot create directory '" + dir.string() + "'");
  std::vector<fs::path> written;
  const int digits = std::max<int>(4, static_cast<int>(std::to_string(x.frames()).size()));
  for (std::size_t k = 0; k < x.frames(); ++k) {
    std::string idx = std::to_string(k);
    idx.insert(0, static_cast<std::size_t>(std::max(0, digits - static_cast<int>(idx.size()))), '0');
    const fs::path path =
        dir / (prefix + "_" + idx + (format == ImageFormat::png ? ".png" : ".pgm"));
    if (format == ImageFormat::png) {
      detail::write_png(path, x.frame(k), x.height(), x.width());
    } else {
      detail::write_pgm(path, x.frame(k), x.height(), x.width());
    }
    written.push_back(path);
  }
  return written;
}

/// Serializes a tensor into the raw container.
inline void write_tensor(const VideoTensor& x, const fs::path& path,
                         Precision precision = Precision::float32) {
  std::vector<unsigned char> bytes(kRawMagic.begin(), kRawMagic.end());
  const std::size_t width = precision == Precision::float32 ? 4 : 8;
  bytes.reserve(kRawHeaderSize + x.size() * width);
  detail::put_u32(bytes, kRawVersion);
  detail::put_u32(bytes, static_cast<std::uint32_t>(precision));
  detail::put_u64(bytes, x.height());
  detail::put_u64(bytes, x.width());
  detail::put_u64(bytes, x.frames());
  for (double v : x.values()) {
    if (precision == Precision::float32) {
      detail::put_u32(bytes, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    } else {
      detail::put_u64(bytes, std::bit_cast<std::uint64_t>(v));
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

/// Header check without reading the payload.
inline bool is_raw_tensor(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::array<char, 8> magic{};
  return in && in.read(magic.data(), magic.size()) && magic == kRawMagic;
}

inline VideoTensor read_tensor(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < kRawHeaderSize ||
      !std::equal(kRawMagic.begin(), kRawMagic.end(), bytes.begin(),
                  [](char a, unsigned char b) { return static_cast<unsigned char>(a) == b; })) {
    throw DataError("'" + path.string() + "': not a raw tensor file");
  }
  const auto version = detail::get_le(&bytes[8], 4);
  if (version != kRawVersion) {
    throw DataError("'" + path.string() + "': unsupported version " + std::to_string(version));
  }
  const auto type = detail::get_le(&bytes[12], 4);
  if (type != 1 && type != 2) {
    throw DataError("'" + path.string() + "': unknown scalar type " + std::to_string(type));
  }
  const Shape shape{detail::get_le(&bytes[16], 8), detail::get_le(&bytes[24], 8),
                    detail::get_le(&bytes[32], 8)};
  const std::size_t width = type == 1 ? 4 : 8;
  if (shape.height < 2 || shape.width < 2 || shape.frames < 1 ||
      bytes.size() != kRawHeaderSize + shape.size() * width) {
    throw DataError("'" + path.string() + "': header dimensions " + to_string(shape) +
                    " do not match file size");
  }
  VideoTensor out(shape);
  const unsigned char* p = bytes.data() + kRawHeaderSize;
  for (std::size_t i = 0; i < out.size(); ++i, p += width) {
    out[i] = type == 1
                 ? static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(detail::get_le(p, 4))))
                 : std::bit_cast<double>(detail::get_le(p, 8));
  }
  return out;
}

/// Reads either a raw tensor file or an image sequence.
inline VideoTensor read_video(const std::string& spec) {
  std::error_code ec;
  if (fs::is_regular_file(spec, ec) && is_raw_tensor(spec)) return read_tensor(spec);
  return read_sequence(spec);
}

}  // namespace derain::io
