#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <utility>
#include <vector>

#include "cilfuse/image.hpp"

namespace cilfuse {

enum class StreamId : std::uint32_t { rgb = 0, color_hist = 1, edge_hist = 2 };

inline constexpr int kColorHistBins = 512;  // 8x8x8 joint RGB bins
inline constexpr int kEdgeHistBins = 64;
inline constexpr double kEdgeMagnitudeMax = 1020.0;  // 4 * 255 per Sobel axis

const char* stream_name(StreamId id);
StreamId stream_from_name(std::string_view name);
int stream_dim(StreamId id, int thumb_side);

struct StreamVector {
  StreamId stream = StreamId::rgb;
  std::vector<double> values;

  int dim() const { return static_cast<int>(values.size()); }
};

// Joint color histogram: bin index per pixel is (r/32, g/32, b/32) flattened
// r-major (r_bin*64 + g_bin*8 + b_bin). Raw counts, or counts / (w*h) when
// normalized.
StreamVector color_histogram(const Image& image, bool normalize = true);

// Sobel magnitude histogram over interior pixels. Luminance is BT.601
// (round(0.299 r + 0.587 g + 0.114 b)), magnitude sqrt(Gx^2 + Gy^2) clamped
// to [0, 1020], 64 uniform bins. Requires width, height >= 3.
StreamVector edge_histogram(const Image& image, bool normalize = true);

// Area-average downsample to thumb_side x thumb_side, channels scaled to
// [0, 1], flattened row-major r,g,b per pixel.
StreamVector rgb_stream(const Image& image, int thumb_side);

// The per-sample stream bundle fed to a fusion model, in config order.
using StreamSet = std::vector<std::vector<double>>;

struct StreamExtractor {
  std::vector<StreamId> streams;
  int thumb_side = 16;
  bool normalize = true;

  StreamSet extract(const Image& image) const;
  std::vector<int> dims() const;
};

// Feature cache file (features.bin), little-endian:
//   u32 magic = 0x43464631
//   u32 stream_id
//   u32 count
//   u32 dim
//   count * dim float32 values
inline constexpr std::uint32_t kFeatureCacheMagic = 0x43464631u;

void save_feature_cache(const std::filesystem::path& path, StreamId id,
                        const std::vector<std::vector<float>>& rows);
std::pair<StreamId, std::vector<std::vector<float>>> load_feature_cache(
    const std::filesystem::path& path);

}  // namespace cilfuse
