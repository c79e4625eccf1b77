#include "wavescore/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

namespace wavescore {

namespace {

uint8_t quantize(double v) {
  double c = std::clamp(v, 0.0, 1.0);
  return static_cast<uint8_t>(std::lround(c * 255.0));
}

void require_image(const TensorD& img, const char* what) {
  if (img.rank() == 3 && img.dim(0) == 1) return;
  if (img.rank() == 2) return;
  throw DimensionError(std::string(what) + ": expected a 1xHxW or HxW tensor, got " +
                       shape_string(img.shape()));
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

TensorD read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "P5") throw IoError(path + ": not a binary PGM (P5) file");
  auto next_int = [&in, &path]() {
    // Skip whitespace and '#' comment lines between header fields.
    int c = in.get();
    while (c == '#' || std::isspace(c)) {
      if (c == '#') {
        while (c != '\n' && c != EOF) c = in.get();
      }
      c = in.get();
    }
    if (c == EOF) throw IoError(path + ": truncated PGM header");
    in.unget();
    int v = 0;
    in >> v;
    return v;
  };
  int w = next_int(), h = next_int(), maxval = next_int();
  if (w < 1 || h < 1 || maxval != 255)
    throw IoError(path + ": unsupported PGM header (need 8-bit, maxval 255)");
  in.get();  // single whitespace before raster
  std::vector<char> raster(static_cast<size_t>(w) * h);
  in.read(raster.data(), static_cast<std::streamsize>(raster.size()));
  if (in.gcount() != static_cast<std::streamsize>(raster.size()))
    throw IoError(path + ": truncated PGM raster");
  TensorD img({1, h, w});
  for (int64_t i = 0; i < img.numel(); ++i)
    img[i] = static_cast<uint8_t>(raster[static_cast<size_t>(i)]) / 255.0;
  return img;
}

TensorD read_png_gray(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw IoError("cannot open " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path + ": PNG decode failed");
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (png_get_color_type(png, info) & PNG_COLOR_MASK_COLOR)
    png_set_rgb_to_gray(png, 1 /*error_action: silent*/, -1, -1);
  png_read_update_info(png, info);
  int w = static_cast<int>(png_get_image_width(png, info));
  int h = static_cast<int>(png_get_image_height(png, info));
  std::vector<uint8_t> row(static_cast<size_t>(w));
  TensorD img({1, h, w});
  for (int y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < w; ++x) img.at(0, y, x) = row[static_cast<size_t>(x)] / 255.0;
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png(const uint8_t* data, int width, int height, int channels,
               const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw IoError("cannot open " + path + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError(path + ": PNG encode failed");
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y)
    png_write_row(png, const_cast<png_bytep>(data + static_cast<size_t>(y) * width * channels));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

TensorD read_image(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw IoError("cannot open " + path);
  unsigned char sig[8] = {0};
  probe.read(reinterpret_cast<char*>(sig), 8);
  probe.close();
  if (sig[0] == 'P' && sig[1] == '5') return read_pgm(path);
  if (png_sig_cmp(sig, 0, 8) == 0) return read_png_gray(path);
  throw IoError(path + ": unrecognized image format (need PGM P5 or PNG)");
}

void write_pgm(const TensorD& image, const std::string& path) {
  require_image(image, "write_pgm");
  int h = image.rank() == 3 ? image.dim(1) : image.dim(0);
  int w = image.rank() == 3 ? image.dim(2) : image.dim(1);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "P5\n" << w << " " << h << "\n255\n";
  std::vector<char> raster(static_cast<size_t>(w) * h);
  for (int64_t i = 0; i < image.numel(); ++i)
    raster[static_cast<size_t>(i)] = static_cast<char>(quantize(image[i]));
  out.write(raster.data(), static_cast<std::streamsize>(raster.size()));
  if (!out) throw IoError("short write to " + path);
}

void write_png_gray(const TensorD& image, const std::string& path) {
  require_image(image, "write_png_gray");
  int h = image.rank() == 3 ? image.dim(1) : image.dim(0);
  int w = image.rank() == 3 ? image.dim(2) : image.dim(1);
  std::vector<uint8_t> data(static_cast<size_t>(w) * h);
  for (int64_t i = 0; i < image.numel(); ++i) data[static_cast<size_t>(i)] = quantize(image[i]);
  write_png(data.data(), w, h, 1, path);
}

void write_png_rgb(const std::vector<uint8_t>& rgb, int width, int height,
                   const std::string& path) {
  if (static_cast<int64_t>(rgb.size()) != static_cast<int64_t>(width) * height * 3)
    throw DimensionError("write_png_rgb: buffer size mismatch");
  write_png(rgb.data(), width, height, 3, path);
}

std::vector<uint8_t> read_png_rgb(const std::string& path, int* width, int* height) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw IoError("cannot open " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError(path + ": PNG decode failed");
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_expand(png);
  if (!(png_get_color_type(png, info) & PNG_COLOR_MASK_COLOR)) png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  int w = static_cast<int>(png_get_image_width(png, info));
  int h = static_cast<int>(png_get_image_height(png, info));
  std::vector<uint8_t> data(static_cast<size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y)
    png_read_row(png, data.data() + static_cast<size_t>(y) * w * 3, nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  *width = w;
  *height = h;
  return data;
}

std::array<uint8_t, 3> heatmap_color(double t) {
  double c = std::clamp(t, 0.0, 1.0);
  return {static_cast<uint8_t>(std::lround((1.0 - c) * 255.0)), 0, 0};
}

void export_heatmap(const TensorD& filter, const std::string& path) {
  require_image(filter, "export_heatmap");
  require_finite(filter, "export_heatmap");
  int h = filter.rank() == 3 ? filter.dim(1) : filter.dim(0);
  int w = filter.rank() == 3 ? filter.dim(2) : filter.dim(1);
  double lo = filter[0], hi = filter[0];
  for (int64_t i = 0; i < filter.numel(); ++i) {
    lo = std::min(lo, filter[i]);
    hi = std::max(hi, filter[i]);
  }
  std::vector<uint8_t> rgb(static_cast<size_t>(w) * h * 3);
  for (int64_t i = 0; i < filter.numel(); ++i) {
    double t = hi > lo ? (filter[i] - lo) / (hi - lo) : 0.5;
    auto c = heatmap_color(t);
    rgb[static_cast<size_t>(i) * 3 + 0] = c[0];
    rgb[static_cast<size_t>(i) * 3 + 1] = c[1];
    rgb[static_cast<size_t>(i) * 3 + 2] = c[2];
  }
  write_png_rgb(rgb, w, h, path);
}

}  // namespace wavescore
