#include "cilfuse/streams.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "binio.hpp"
#include "cilfuse/errors.hpp"

namespace cilfuse {

const char* stream_name(StreamId id) {
  switch (id) {
    case StreamId::rgb: return "rgb";
    case StreamId::color_hist: return "color_hist";
    case StreamId::edge_hist: return "edge_hist";
  }
  return "?";
}

StreamId stream_from_name(std::string_view name) {
  if (name == "rgb") return StreamId::rgb;
  if (name == "color_hist") return StreamId::color_hist;
  if (name == "edge_hist") return StreamId::edge_hist;
  throw config_error("unknown stream: " + std::string(name));
}

int stream_dim(StreamId id, int thumb_side) {
  switch (id) {
    case StreamId::rgb: return 3 * thumb_side * thumb_side;
    case StreamId::color_hist: return kColorHistBins;
    case StreamId::edge_hist: return kEdgeHistBins;
  }
  return 0;
}

namespace {

void require_backed(const Image& image, const char* what) {
  if (image.pixels.size() != 3 * image.pixel_count())
    throw data_error(std::string(what) +
                     ": pixel buffer does not match image dimensions");
}

}  // namespace

StreamVector color_histogram(const Image& image, bool normalize) {
  if (image.width <= 0 || image.height <= 0)
    throw data_error("color histogram of an empty image");
  require_backed(image, "color histogram");

  StreamVector out;
  out.stream = StreamId::color_hist;
  out.values.assign(kColorHistBins, 0.0);
  const std::size_t n = image.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t r = image.pixels[3 * i + 0];
    const std::uint8_t g = image.pixels[3 * i + 1];
    const std::uint8_t b = image.pixels[3 * i + 2];
    const int bin = (r >> 5) * 64 + (g >> 5) * 8 + (b >> 5);
    out.values[static_cast<std::size_t>(bin)] += 1.0;
  }
  if (normalize) {
    const double inv = 1.0 / static_cast<double>(n);
    for (double& v : out.values) v *= inv;
  }
  return out;
}

StreamVector edge_histogram(const Image& image, bool normalize) {
  if (image.width < 3 || image.height < 3)
    throw data_error("edge histogram needs at least a 3x3 image");
  require_backed(image, "edge histogram");

  // BT.601 integer luminance.
  std::vector<double> lum(image.pixel_count());
  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    lum[i] = std::round(0.299 * image.pixels[3 * i + 0] +
                        0.587 * image.pixels[3 * i + 1] +
                        0.114 * image.pixels[3 * i + 2]);
  }
  const auto at = [&](int x, int y) {
    return lum[static_cast<std::size_t>(y) * image.width + x];
  };

  StreamVector out;
  out.stream = StreamId::edge_hist;
  out.values.assign(kEdgeHistBins, 0.0);
  const double bin_width = kEdgeMagnitudeMax / kEdgeHistBins;
  for (int y = 1; y + 1 < image.height; ++y) {
    for (int x = 1; x + 1 < image.width; ++x) {
      const double gx = -at(x - 1, y - 1) + at(x + 1, y - 1) -
                        2.0 * at(x - 1, y) + 2.0 * at(x + 1, y) -
                        at(x - 1, y + 1) + at(x + 1, y + 1);
      const double gy = -at(x - 1, y - 1) - 2.0 * at(x, y - 1) -
                        at(x + 1, y - 1) + at(x - 1, y + 1) +
                        2.0 * at(x, y + 1) + at(x + 1, y + 1);
      const double mag =
          std::min(std::sqrt(gx * gx + gy * gy), kEdgeMagnitudeMax);
      const int bin =
          std::min(kEdgeHistBins - 1, static_cast<int>(mag / bin_width));
      out.values[static_cast<std::size_t>(bin)] += 1.0;
    }
  }
  if (normalize) {
    const double interior = static_cast<double>(image.width - 2) *
                            static_cast<double>(image.height - 2);
    for (double& v : out.values) v /= interior;
  }
  return out;
}

StreamVector rgb_stream(const Image& image, int thumb_side) {
  if (thumb_side < 1) throw config_error("thumb_side must be positive");
  if (image.width <= 0 || image.height <= 0)
    throw data_error("rgb stream of an empty image");
  require_backed(image, "rgb stream");

  StreamVector out;
  out.stream = StreamId::rgb;
  out.values.assign(static_cast<std::size_t>(3 * thumb_side * thumb_side), 0.0);

  // Exact area average: each output cell covers a w/S x h/S rectangle of the
  // source; border pixels contribute fractionally.
  const double sx = static_cast<double>(image.width) / thumb_side;
  const double sy = static_cast<double>(image.height) / thumb_side;
  for (int oy = 0; oy < thumb_side; ++oy) {
    const double y0 = oy * sy;
    const double y1 = (oy + 1) * sy;
    for (int ox = 0; ox < thumb_side; ++ox) {
      const double x0 = ox * sx;
      const double x1 = (ox + 1) * sx;
      double acc[3] = {0.0, 0.0, 0.0};
      for (int y = static_cast<int>(y0); y < image.height && y < y1; ++y) {
        const double wy =
            std::min<double>(y + 1, y1) - std::max<double>(y, y0);
        if (wy <= 0.0) continue;
        for (int x = static_cast<int>(x0); x < image.width && x < x1; ++x) {
          const double wx =
              std::min<double>(x + 1, x1) - std::max<double>(x, x0);
          if (wx <= 0.0) continue;
          const std::uint8_t* p = image.px(x, y);
          const double w = wx * wy;
          acc[0] += w * p[0];
          acc[1] += w * p[1];
          acc[2] += w * p[2];
        }
      }
      const double inv_area = 1.0 / (sx * sy);
      const std::size_t base =
          3 * (static_cast<std::size_t>(oy) * thumb_side + ox);
      for (int ch = 0; ch < 3; ++ch)
        out.values[base + ch] = acc[ch] * inv_area / 255.0;
    }
  }
  return out;
}

StreamSet StreamExtractor::extract(const Image& image) const {
  StreamSet set;
  set.reserve(streams.size());
  for (StreamId id : streams) {
    switch (id) {
      case StreamId::rgb:
        set.push_back(rgb_stream(image, thumb_side).values);
        break;
      case StreamId::color_hist:
        set.push_back(color_histogram(image, normalize).values);
        break;
      case StreamId::edge_hist:
        set.push_back(edge_histogram(image, normalize).values);
        break;
    }
  }
  return set;
}

std::vector<int> StreamExtractor::dims() const {
  std::vector<int> d;
  d.reserve(streams.size());
  for (StreamId id : streams) d.push_back(stream_dim(id, thumb_side));
  return d;
}

void save_feature_cache(const std::filesystem::path& path, StreamId id,
                        const std::vector<std::vector<float>>& rows) {
  const std::size_t dim = rows.empty() ? 0 : rows.front().size();
  for (const auto& row : rows)
    if (row.size() != dim)
      throw data_error("feature rows have inconsistent widths");

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("cannot create feature cache: " + path.string());
  binio::put_u32(out, kFeatureCacheMagic);
  binio::put_u32(out, static_cast<std::uint32_t>(id));
  binio::put_u32(out, static_cast<std::uint32_t>(rows.size()));
  binio::put_u32(out, static_cast<std::uint32_t>(dim));
  for (const auto& row : rows)
    for (float v : row) binio::put_f32(out, v);
  if (!out) throw data_error("failed writing feature cache: " + path.string());
}

std::pair<StreamId, std::vector<std::vector<float>>> load_feature_cache(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open feature cache: " + path.string());

  std::uint32_t magic = 0, stream = 0, count = 0, dim = 0;
  if (!binio::get_u32(in, magic) || magic != kFeatureCacheMagic)
    throw data_error("bad feature cache magic: " + path.string());
  if (!binio::get_u32(in, stream) || stream > 2)
    throw data_error("bad feature cache stream id: " + path.string());
  if (!binio::get_u32(in, count) || !binio::get_u32(in, dim))
    throw data_error("truncated feature cache header: " + path.string());

  std::vector<std::vector<float>> rows(count, std::vector<float>(dim));
  for (auto& row : rows)
    for (float& v : row)
      if (!binio::get_f32(in, v))
        throw data_error("truncated feature cache payload: " + path.string());
  return {static_cast<StreamId>(stream), std::move(rows)};
}

}  // namespace cilfuse
