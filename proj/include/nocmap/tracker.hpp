#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nocmap/network.hpp"
#include "nocmap/runtime.hpp"

namespace nocmap {

// Q1.15 unit and Q24.8 coordinate helpers.
inline constexpr std::uint32_t kQ15One = 1u << 15;
inline constexpr std::int64_t kCoordOne = 1 << 8;

struct Frame {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  Frame() = default;
  Frame(std::uint32_t w, std::uint32_t h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(std::size_t(w) * h, fill) {}
  std::uint8_t at(std::uint32_t x, std::uint32_t y) const { return pixels[std::size_t(y) * width + x]; }
  std::uint8_t& at(std::uint32_t x, std::uint32_t y) { return pixels[std::size_t(y) * width + x]; }
};

struct Point {
  std::int64_t x = 0;  // Q24.8
  std::int64_t y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct Roi {
  Point center;
  std::uint32_t half_width = 8;
  std::uint32_t half_height = 8;
};

enum class Kernel { epanechnikov, uniform };

using Histogram = std::vector<std::uint32_t>;  // Q1.15 per bin

// Raw kernel mass per bin before normalization.
std::vector<std::uint64_t> histogram_mass(const Frame& f, const Roi& roi, std::uint32_t bins,
                                          Kernel kernel = Kernel::epanechnikov);
// Largest-remainder rounding; sums to exactly kQ15One. ValidationError on an empty ROI.
Histogram compute_histogram(const Frame& f, const Roi& roi, std::uint32_t bins,
                            Kernel kernel = Kernel::epanechnikov);
bool is_normalized(const Histogram& h);

std::uint64_t isqrt(std::uint64_t v);

struct Bhattacharyya {
  std::uint32_t rho;       // Q1.15
  std::uint32_t distance;  // Q1.15
};
Bhattacharyya bhattacharyya(const Histogram& p, const Histogram& q);

// exp(-lambda d^2) in Q1.15, not normalized.
std::uint32_t raw_weight(std::uint32_t distance_q15, double lambda);

struct Weights {
  std::vector<std::uint32_t> w;  // Q1.15, sums to kQ15One
  bool fallback = false;         // every raw weight was 0
};
Weights normalize_weights(std::span<const std::uint32_t> raw);
Weights weights_from_distances(std::span<const std::uint32_t> d_q15, double lambda);

// ValidationError when the total weight is zero.
Point weighted_mean(std::span<const Point> xs, std::span<const std::uint32_t> w);

Point clip_to_frame(Point p, std::uint32_t width, std::uint32_t height);
// Particle i uses counter i of the "particles" stream, sub-stream `frame`.
std::vector<Point> sample_particles(Point center, double sigma, std::uint32_t count,
                                    std::uint64_t seed, std::uint64_t frame,
                                    std::uint32_t width, std::uint32_t height);

struct TrackerParams {
  std::uint32_t particles = 16;
  std::uint32_t workers = 16;
  std::uint32_t bins = 16;
  std::uint32_t half_width = 6;
  std::uint32_t half_height = 6;
  double sigma = 2.0;
  double lambda = 20.0;
  Kernel kernel = Kernel::epanechnikov;
  std::uint64_t seed = 1;
  std::uint32_t pe_latency = 1;
  void validate() const;  // ConfigError
};

struct TrackResult {
  std::vector<Point> centers;  // one per frame; the first is the initial center
  std::uint32_t fallback_frames = 0;
  Cycle cycles = 0;
};

TrackResult track_reference(std::span<const Frame> frames, Point init, const TrackerParams& p);
TrackResult track_on_noc(std::span<const Frame> frames, Point init, const TrackerParams& p,
                         Network& net, std::function<void(const SendEvent&)> on_send = {});

// Endpoint of worker w and of the root, for a network with `endpoints` endpoints.
struct TrackerPlacement {
  std::vector<EndpointId> workers;
  EndpointId root = 0;
  std::uint32_t root_tag = 4;
};
TrackerPlacement place_tracker(std::uint32_t workers, std::uint32_t endpoints);

// Synthetic video of a bright square.
struct VideoParams {
  std::uint32_t width = 64;
  std::uint32_t height = 64;
  std::uint32_t frames = 30;
  std::uint32_t square_half = 5;
  double x0 = 10.0;
  double y0 = 14.0;
  double vx = 1.6;
  double vy = 1.2;
  std::uint8_t background = 30;
  std::uint8_t foreground = 220;
  std::uint32_t noise = 0;  // uniform in [-noise, noise]
  std::uint64_t seed = 1;
};

struct Video {
  std::vector<Frame> frames;
  std::vector<std::pair<double, double>> truth;  // square center per frame
};
Video generate_video(const VideoParams& p);

// Header line "width height frames", then raw 8-bit frames.
void write_video(std::ostream& os, std::span<const Frame> frames);
std::vector<Frame> read_video(std::istream& is);  // ValidationError on malformed input

Point to_fixed(double x, double y);
double from_fixed(std::int64_t v);

}  // namespace nocmap
