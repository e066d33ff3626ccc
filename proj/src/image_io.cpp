#include "vpseg/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>

namespace vpseg {

namespace {

std::string lower_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

// Skips whitespace and '#' comments, then parses an unsigned integer.
unsigned long read_pnm_int(std::istream& in, const std::filesystem::path& path) {
  int c = in.peek();
  while (c != EOF) {
    if (std::isspace(c)) {
      in.get();
    } else if (c == '#') {
      std::string ignored;
      std::getline(in, ignored);
    } else {
      break;
    }
    c = in.peek();
  }
  unsigned long v = 0;
  if (!(in >> v)) throw IoError("malformed PNM header or data: " + path.string());
  return v;
}

Image read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] < '2' || magic[1] > '6' || magic[1] == '4') {
    throw IoError("unsupported PNM variant: " + path.string());
  }
  const bool ascii = magic[1] == '2' || magic[1] == '3';
  const std::size_t channels = (magic[1] == '3' || magic[1] == '6') ? 3 : 1;
  const auto width = read_pnm_int(in, path);
  const auto height = read_pnm_int(in, path);
  const auto maxval = read_pnm_int(in, path);
  if (width == 0 || height == 0 || maxval == 0 || maxval > 65535) {
    throw IoError("invalid PNM dimensions or maxval: " + path.string());
  }
  Image img(height, width, channels);
  const double scale = 1.0 / static_cast<double>(maxval);
  const std::size_t n = img.data.size();
  if (ascii) {
    for (std::size_t k = 0; k < n; ++k) {
      img.data[k] = std::min(1.0, static_cast<double>(read_pnm_int(in, path)) * scale);
    }
    return img;
  }
  in.get();  // single whitespace after maxval
  const std::size_t bytes = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(n * bytes);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw IoError("truncated PNM data: " + path.string());
  }
  for (std::size_t k = 0; k < n; ++k) {
    const unsigned v = bytes == 2 ? (unsigned{raw[2 * k]} << 8) | raw[2 * k + 1] : raw[k];
    img.data[k] = std::min(1.0, static_cast<double>(v) * scale);
  }
  return img;
}

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Image read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw IoError("not a PNG file: " + path.string());
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng initialization failed");
  }
  Image img;
  std::vector<unsigned char> buffer;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("corrupt PNG: " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS)) {
    png_set_strip_alpha(png);
  }
  if (depth == 16) png_set_swap(png);  // host little-endian 16-bit samples
  png_read_update_info(png, info);

  const std::size_t width = png_get_image_width(png, info);
  const std::size_t height = png_get_image_height(png, info);
  const std::size_t channels = png_get_channels(png, info);
  const int out_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * height);
  rows.resize(height);
  for (std::size_t y = 0; y < height; ++y) rows[y] = buffer.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  img = Image(height, width, channels);
  const std::size_t samples = width * channels;
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t k = 0; k < samples; ++k) {
      double v = 0.0;
      if (out_depth == 16) {
        std::uint16_t s = 0;
        std::memcpy(&s, rows[y] + 2 * k, 2);
        v = static_cast<double>(s) / 65535.0;
      } else {
        v = static_cast<double>(rows[y][k]) / 255.0;
      }
      img.data[y * samples + k] = v;
    }
  }
  return img;
}

unsigned quantize(double v, unsigned maxval) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<unsigned>(std::lround(c * maxval));
}

void check_depth(int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) {
    throw std::invalid_argument("bit depth must be 8 or 16");
  }
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw IoError("cannot open " + path.string());
  unsigned char head[2] = {0, 0};
  probe.read(reinterpret_cast<char*>(head), 2);
  probe.close();
  if (head[0] == 0x89 && head[1] == 'P') return read_png(path);
  if (head[0] == 'P') return read_pnm(path);
  throw IoError("unrecognized image format: " + path.string());
}

void write_pnm(const std::filesystem::path& path, const Image& img, int bit_depth) {
  check_depth(bit_depth);
  if (img.channels != 1 && img.channels != 3) {
    throw std::invalid_argument("PNM output needs 1 or 3 channels");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const unsigned maxval = bit_depth == 16 ? 65535u : 255u;
  out << (img.channels == 1 ? "P5" : "P6") << '\n'
      << img.width << ' ' << img.height << '\n'
      << maxval << '\n';
  std::vector<unsigned char> raw;
  raw.reserve(img.data.size() * (bit_depth / 8));
  for (double v : img.data) {
    const unsigned q = quantize(v, maxval);
    if (bit_depth == 16) raw.push_back(static_cast<unsigned char>(q >> 8));
    raw.push_back(static_cast<unsigned char>(q & 0xFF));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

void write_png(const std::filesystem::path& path, const Image& img, int bit_depth) {
  check_depth(bit_depth);
  if (img.channels != 1 && img.channels != 3) {
    throw std::invalid_argument("PNG output needs 1 or 3 channels");
  }
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialization failed");
  }
  const unsigned maxval = bit_depth == 16 ? 65535u : 255u;
  const std::size_t bytes = static_cast<std::size_t>(bit_depth / 8);
  const std::size_t rowbytes = img.width * img.channels * bytes;
  std::vector<unsigned char> buffer(rowbytes * img.height);
  for (std::size_t k = 0; k < img.data.size(); ++k) {
    const unsigned q = quantize(img.data[k], maxval);
    if (bytes == 2) {
      buffer[2 * k] = static_cast<unsigned char>(q >> 8);
      buffer[2 * k + 1] = static_cast<unsigned char>(q & 0xFF);
    } else {
      buffer[k] = static_cast<unsigned char>(q);
    }
  }
  std::vector<png_bytep> rows(img.height);
  for (std::size_t y = 0; y < img.height; ++y) rows[y] = buffer.data() + y * rowbytes;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG write failed: " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), bit_depth,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_image(const std::filesystem::path& path, const Image& img, int bit_depth) {
  const std::string ext = lower_extension(path);
  if (ext == ".png") {
    write_png(path, img, bit_depth);
  } else if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") {
    write_pnm(path, img, bit_depth);
  } else {
    throw IoError("unknown image extension: " + path.string());
  }
}

Image to_image(const ScalarGrid& g) {
  Image img(g.height, g.width, 1);
  for (std::size_t j = 0; j < g.size(); ++j) img.data[j] = std::clamp(g.data[j], 0.0, 1.0);
  return img;
}

}  // namespace vpseg
