#include "gatedgan/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <vector>

namespace gatedgan {
namespace {

std::string lower_extension(const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return ext;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed reading " + path);
  return bytes;
}

TensorF from_rgb(const std::uint8_t* rgb, std::size_t h, std::size_t w) {
  TensorF out({1, 3, h, w});
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c) out.at(0, c, y, x) = byte_to_unit(rgb[(y * w + x) * 3 + c]);
  return out;
}

std::vector<std::uint8_t> to_rgb(const TensorF& image) {
  const std::size_t h = image.dim(2), w = image.dim(3);
  std::vector<std::uint8_t> rgb(h * w * 3);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c) rgb[(y * w + x) * 3 + c] = unit_to_byte(image.at(0, c, y, x));
  return rgb;
}

TensorF decode_png(const std::vector<std::uint8_t>& bytes, const std::string& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw DecodeError(path + ": " + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, rgb.data(), 0, nullptr)) {
    const std::string message = img.message;
    png_image_free(&img);
    throw DecodeError(path + ": " + message);
  }
  return from_rgb(rgb.data(), img.height, img.width);
}

// Skips whitespace and comment lines, then reads one decimal header field.
std::size_t ppm_field(const std::vector<std::uint8_t>& b, std::size_t& pos, const std::string& path) {
  while (pos < b.size()) {
    if (b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
    } else if (std::isspace(b[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  if (pos >= b.size() || !std::isdigit(b[pos])) throw DecodeError(path + ": malformed PPM header");
  std::size_t value = 0;
  while (pos < b.size() && std::isdigit(b[pos])) {
    value = value * 10 + std::size_t(b[pos] - '0');
    if (value > (1u << 24)) throw DecodeError(path + ": PPM header value too large");
    ++pos;
  }
  return value;
}

TensorF decode_ppm(const std::vector<std::uint8_t>& b, const std::string& path) {
  std::size_t pos = 2;
  const std::size_t w = ppm_field(b, pos, path);
  const std::size_t h = ppm_field(b, pos, path);
  const std::size_t maxval = ppm_field(b, pos, path);
  if (w == 0 || h == 0) throw DecodeError(path + ": empty PPM image");
  if (maxval != 255) {
    throw FormatError(path + ": PPM maxval " + std::to_string(maxval) + " (only 255 is supported)");
  }
  if (pos >= b.size() || !std::isspace(b[pos])) throw DecodeError(path + ": malformed PPM header");
  ++pos;
  if (b.size() - pos < w * h * 3) throw DecodeError(path + ": truncated PPM pixel data");
  return from_rgb(b.data() + pos, h, w);
}

}  // namespace

float byte_to_unit(std::uint8_t b) { return static_cast<float>(2.0 * b / 255.0 - 1.0); }

std::uint8_t unit_to_byte(float v) {
  const double scaled = std::floor((double(v) + 1.0) * 127.5 + 0.5);
  return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

bool is_image_path(const std::string& path) {
  const std::string ext = lower_extension(path);
  return ext == ".png" || ext == ".ppm";
}

TensorF load_image(const std::string& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  static const std::uint8_t png_magic[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), png_magic, 8) == 0) return decode_png(bytes, path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes, path);
  if (bytes.size() < 8 && lower_extension(path) == ".png") throw DecodeError(path + ": truncated PNG");
  throw FormatError(path + ": not a PNG or binary PPM file");
}

void save_image(const TensorF& image, const std::string& path) {
  if (image.rank() != 4 || image.dim(0) != 1 || image.dim(1) != 3) {
    throw ShapeError("save_image expects (1, 3, H, W), got " + shape_string(image.shape()));
  }
  const std::string ext = lower_extension(path);
  const std::vector<std::uint8_t> rgb = to_rgb(image);
  const std::size_t h = image.dim(2), w = image.dim(3);
  if (ext == ".png") {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(w);
    img.height = static_cast<png_uint_32>(h);
    img.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&img, path.c_str(), 0, rgb.data(), 0, nullptr)) {
      throw IoError("cannot write " + path + ": " + img.message);
    }
    return;
  }
  if (ext == ".ppm") {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "P6\n" << w << ' ' << h << "\n255\n";
    out.write(reinterpret_cast<const char*>(rgb.data()), std::streamsize(rgb.size()));
    if (!out) throw IoError("failed writing " + path);
    return;
  }
  throw FormatError(path + ": unsupported output extension (use .png or .ppm)");
}

}  // namespace gatedgan
