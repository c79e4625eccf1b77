#ifndef WAVESCORE_IMAGE_IO_HPP
#define WAVESCORE_IMAGE_IO_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "wavescore/tensor.hpp"

namespace wavescore {

/// Reads an 8-bit binary PGM (P5) or grayscale PNG into a 1xHxW tensor with
/// intensities mapped to [0, 1]. The format is chosen by file signature.
TensorD read_image(const std::string& path);

/// Writers clamp to [0, 1] and quantize to 8 bits.
void write_pgm(const TensorD& image, const std::string& path);
void write_png_gray(const TensorD& image, const std::string& path);

void write_png_rgb(const std::vector<uint8_t>& rgb, int width, int height,
                   const std::string& path);
std::vector<uint8_t> read_png_rgb(const std::string& path, int* width, int* height);

/// Linear red-to-black ramp: the minimum value maps to (255,0,0), the maximum
/// to (0,0,0); a constant input maps to the midpoint color. Returns the RGB
/// triple for t in [0, 1].
std::array<uint8_t, 3> heatmap_color(double t);

/// Renders a single-channel filter (1xHxW or HxW) through the ramp as PNG.
void export_heatmap(const TensorD& filter, const std::string& path);

}  // namespace wavescore

#endif  // WAVESCORE_IMAGE_IO_HPP
