#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace cilfuse {

// Fixed-size RGB raster, 8 bits per channel, pixels packed r,g,b row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  static Image filled(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b);

  std::uint8_t* px(int x, int y) {
    return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x);
  }
  const std::uint8_t* px(int x, int y) const {
    return pixels.data() + 3 * (static_cast<std::size_t>(y) * width + x);
  }

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
};

// Binary PPM (P6), maxval 255. save_ppm emits the canonical header
// "P6\n<w> <h>\n255\n" followed by width*height*3 payload bytes; load_ppm
// accepts whitespace/comments per the PPM spec and round-trips canonical
// files byte-for-byte. Malformed headers, maxval != 255 and truncated
// payloads are reported as distinct data_error messages.
Image load_ppm(const std::filesystem::path& path);
void save_ppm(const Image& image, const std::filesystem::path& path);

Image flip_horizontal(const Image& image);

}  // namespace cilfuse
