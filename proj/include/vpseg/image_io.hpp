#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "vpseg/grid.hpp"

namespace vpseg {

/// Raised for unreadable, unwritable or malformed image files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads PGM/PPM (P2, P3, P5, P6; maxval up to 65535) or PNG (gray, gray+alpha,
/// RGB, RGBA, palette; 8 or 16 bit). Intensities are scaled to [0, 1]; alpha is
/// dropped and palettes are expanded to RGB.
Image read_image(const std::filesystem::path& path);

/// Writes binary PGM (1 channel) or PPM (3 channels). bit_depth is 8 or 16.
void write_pnm(const std::filesystem::path& path, const Image& img, int bit_depth = 8);

/// Writes an 8- or 16-bit gray or RGB PNG.
void write_png(const std::filesystem::path& path, const Image& img, int bit_depth = 8);

/// Dispatches on extension: .png -> PNG, .pgm/.ppm/.pnm -> PNM.
void write_image(const std::filesystem::path& path, const Image& img, int bit_depth = 8);

/// Gray image from a scalar grid, values clamped to [0, 1].
Image to_image(const ScalarGrid& g);

}  // namespace vpseg
