#include "cilfuse/image.hpp"

#include <cctype>
#include <fstream>
#include <string>

#include "cilfuse/errors.hpp"

namespace cilfuse {

namespace {

// Skips PPM header whitespace and '#' comments, then reads one ASCII
// integer. Returns -1 when no integer can be read.
long read_header_int(std::istream& in) {
  for (;;) {
    int c = in.peek();
    if (c == EOF) return -1;
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      in.get();
      continue;
    }
    break;
  }
  if (!std::isdigit(static_cast<unsigned char>(in.peek()))) return -1;
  long value = 0;
  while (std::isdigit(static_cast<unsigned char>(in.peek()))) {
    value = value * 10 + (in.get() - '0');
    if (value > 1'000'000'000L) return -1;
  }
  return value;
}

}  // namespace

Image Image::filled(int w, int h, std::uint8_t r, std::uint8_t g,
                    std::uint8_t b) {
  Image img;
  img.width = w;
  img.height = h;
  img.pixels.resize(3 * img.pixel_count());
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    img.pixels[3 * i + 0] = r;
    img.pixels[3 * i + 1] = g;
    img.pixels[3 * i + 2] = b;
  }
  return img;
}

Image load_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open image file: " + path.string());

  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (!in || m0 != 'P' || m1 != '6')
    throw data_error("not a P6 ppm file: " + path.string());

  long w = read_header_int(in);
  long h = read_header_int(in);
  long maxval = read_header_int(in);
  if (w <= 0 || h <= 0 || maxval <= 0)
    throw data_error("malformed ppm header: " + path.string());
  if (maxval != 255)
    throw data_error("unsupported ppm maxval (expected 255): " + path.string());

  // Exactly one whitespace byte separates the header from the payload.
  int sep = in.get();
  if (sep == EOF || !std::isspace(static_cast<unsigned char>(sep)))
    throw data_error("malformed ppm header: " + path.string());

  Image img;
  img.width = static_cast<int>(w);
  img.height = static_cast<int>(h);
  img.pixels.resize(3 * img.pixel_count());
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (static_cast<std::size_t>(in.gcount()) != img.pixels.size())
    throw data_error("truncated ppm payload: " + path.string());
  return img;
}

void save_ppm(const Image& image, const std::filesystem::path& path) {
  if (image.width <= 0 || image.height <= 0 ||
      image.pixels.size() != 3 * image.pixel_count())
    throw data_error("refusing to save malformed image: " + path.string());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("cannot create image file: " + path.string());
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw data_error("failed writing image file: " + path.string());
}

Image flip_horizontal(const Image& image) {
  Image out;
  out.width = image.width;
  out.height = image.height;
  out.pixels.resize(image.pixels.size());
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const std::uint8_t* src = image.px(image.width - 1 - x, y);
      std::uint8_t* dst = out.px(x, y);
      dst[0] = src[0];
      dst[1] = src[1];
      dst[2] = src[2];
    }
  }
  return out;
}

}  // namespace cilfuse
