#include "nocmap/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <memory>
#include <numeric>
#include <ostream>
#include <sstream>

#include "nocmap/error.hpp"
#include "nocmap/rng.hpp"

namespace nocmap {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

// Largest-remainder rounding of `mass` onto a total of kQ15One; ties go to the lower index.
std::vector<std::uint32_t> apportion(std::span<const std::uint64_t> mass) {
  const unsigned __int128 total = std::accumulate(mass.begin(), mass.end(), (unsigned __int128)0);
  std::vector<std::uint32_t> out(mass.size());
  std::vector<std::pair<unsigned __int128, std::size_t>> rem(mass.size());
  std::uint32_t given = 0;
  for (std::size_t i = 0; i < mass.size(); ++i) {
    const unsigned __int128 scaled = (unsigned __int128)mass[i] * kQ15One;
    out[i] = static_cast<std::uint32_t>(scaled / total);
    rem[i] = {scaled % total, i};
    given += out[i];
  }
  std::stable_sort(rem.begin(), rem.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t j = 0; given < kQ15One; ++j, ++given) ++out[rem[j].second];
  return out;
}

}  // namespace

std::vector<std::uint64_t> histogram_mass(const Frame& f, const Roi& roi, std::uint32_t bins,
                                          Kernel kernel) {
  if (bins == 0 || bins > 256) throw ValidationError("bin count must be in 1..256");
  if (roi.half_width == 0 || roi.half_height == 0) throw ValidationError("ROI has zero size");
  const std::int64_t hw = std::int64_t(roi.half_width) * kCoordOne;
  const std::int64_t hh = std::int64_t(roi.half_height) * kCoordOne;
  const std::int64_t x0 = std::max<std::int64_t>(0, ceil_div(roi.center.x - hw, kCoordOne));
  const std::int64_t x1 = std::min<std::int64_t>(std::int64_t(f.width) - 1, floor_div(roi.center.x + hw, kCoordOne));
  const std::int64_t y0 = std::max<std::int64_t>(0, ceil_div(roi.center.y - hh, kCoordOne));
  const std::int64_t y1 = std::min<std::int64_t>(std::int64_t(f.height) - 1, floor_div(roi.center.y + hh, kCoordOne));
  // K = 1 - (dx/hw)^2 - (dy/hh)^2, scaled by (hw*hh)^2
  const unsigned __int128 denom = (unsigned __int128)(hw * hh) * (hw * hh);
  std::vector<std::uint64_t> mass(bins, 0);
  for (std::int64_t y = y0; y <= y1; ++y)
    for (std::int64_t x = x0; x <= x1; ++x) {
      const std::int64_t dx = x * kCoordOne - roi.center.x;
      const std::int64_t dy = y * kCoordOne - roi.center.y;
      const unsigned __int128 r2 =
          (unsigned __int128)(dx * dx) * (hh * hh) + (unsigned __int128)(dy * dy) * (hw * hw);
      if (r2 >= denom) continue;
      const std::uint64_t k =
          kernel == Kernel::uniform ? 1 : static_cast<std::uint64_t>((denom - r2) >> 16);
      const std::uint32_t bin = f.at(std::uint32_t(x), std::uint32_t(y)) * bins / 256;
      mass[bin] += std::max<std::uint64_t>(k, 1);
    }
  return mass;
}

Histogram compute_histogram(const Frame& f, const Roi& roi, std::uint32_t bins, Kernel kernel) {
  const auto mass = histogram_mass(f, roi, bins, kernel);
  if (std::all_of(mass.begin(), mass.end(), [](auto m) { return m == 0; }))
    throw ValidationError("ROI does not overlap the frame");
  return apportion(mass);
}

bool is_normalized(const Histogram& h) {
  const std::uint64_t s = std::accumulate(h.begin(), h.end(), std::uint64_t{0});
  const std::uint64_t tol = kQ15One >> 10;
  return s + tol >= kQ15One && s <= kQ15One + tol;
}

std::uint64_t isqrt(std::uint64_t v) {
  if (v < 2) return v;
  std::uint64_t x = std::uint64_t(1) << ((64 - __builtin_clzll(v)) / 2 + 1);
  for (;;) {
    const std::uint64_t y = (x + v / x) / 2;
    if (y >= x) return x;
    x = y;
  }
}

Bhattacharyya bhattacharyya(const Histogram& p, const Histogram& q) {
  if (p.size() != q.size() || p.empty()) throw ValidationError("histograms differ in bin count");
  if (!is_normalized(p) || !is_normalized(q)) throw ValidationError("histogram is not normalized");
  std::uint64_t rho = 0;
  for (std::size_t u = 0; u < p.size(); ++u) rho += isqrt(std::uint64_t(p[u]) * q[u]);
  rho = std::min<std::uint64_t>(rho, kQ15One);
  const auto d = isqrt((kQ15One - rho) << 15);
  return {static_cast<std::uint32_t>(rho), static_cast<std::uint32_t>(std::min<std::uint64_t>(d, kQ15One))};
}

std::uint32_t raw_weight(std::uint32_t distance_q15, double lambda) {
  const double d = double(distance_q15) / kQ15One;
  return static_cast<std::uint32_t>(std::lround(std::exp(-lambda * d * d) * kQ15One));
}

Weights normalize_weights(std::span<const std::uint32_t> raw) {
  if (raw.empty()) throw ValidationError("no weights");
  std::vector<std::uint64_t> mass(raw.begin(), raw.end());
  Weights out;
  if (std::all_of(mass.begin(), mass.end(), [](auto m) { return m == 0; })) {
    std::fill(mass.begin(), mass.end(), 1);
    out.fallback = true;
  }
  out.w = apportion(mass);
  return out;
}

Weights weights_from_distances(std::span<const std::uint32_t> d_q15, double lambda) {
  std::vector<std::uint32_t> raw;
  for (auto d : d_q15) {
    if (d > kQ15One) throw ValidationError("distance outside [0, 1]");
    raw.push_back(raw_weight(d, lambda));
  }
  return normalize_weights(raw);
}

Point weighted_mean(std::span<const Point> xs, std::span<const std::uint32_t> w) {
  if (xs.size() != w.size()) throw ValidationError("particle and weight counts differ");
  __int128 den = 0, nx = 0, ny = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    den += w[i];
    nx += (__int128)w[i] * xs[i].x;
    ny += (__int128)w[i] * xs[i].y;
  }
  if (den == 0) throw ValidationError("total weight is zero");
  auto round_div = [&](__int128 n) {
    __int128 a = 2 * n + den, b = 2 * den;
    __int128 q = a / b;
    if (a % b != 0 && a < 0) --q;
    return static_cast<std::int64_t>(q);
  };
  return {round_div(nx), round_div(ny)};
}

Point clip_to_frame(Point p, std::uint32_t width, std::uint32_t height) {
  p.x = std::clamp<std::int64_t>(p.x, 0, (std::int64_t(width) - 1) * kCoordOne);
  p.y = std::clamp<std::int64_t>(p.y, 0, (std::int64_t(height) - 1) * kCoordOne);
  return p;
}

std::vector<Point> sample_particles(Point center, double sigma, std::uint32_t count,
                                    std::uint64_t seed, std::uint64_t frame,
                                    std::uint32_t width, std::uint32_t height) {
  if (!(sigma > 0)) throw ValidationError("sigma must be positive");
  if (count == 0) throw ValidationError("need at least one particle");
  const CounterRng rng(seed, "particles", frame);
  std::vector<Point> out(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    double gx, gy;
    rng.normal_pair(i, gx, gy);
    out[i] = clip_to_frame({center.x + std::llround(gx * sigma * kCoordOne),
                            center.y + std::llround(gy * sigma * kCoordOne)},
                           width, height);
  }
  return out;
}

void TrackerParams::validate() const {
  if (particles == 0 || particles > 65535) throw ConfigError("particles must be in 1..65535");
  if (workers == 0) throw ConfigError("need at least one worker");
  if (bins == 0 || bins > 256) throw ConfigError("bins must be in 1..256");
  if (half_width < 2 || half_width > 64 || half_height < 2 || half_height > 64)
    throw ConfigError("ROI half sizes must be in 2..64");
  if (!(sigma > 0)) throw ConfigError("sigma must be positive");
  if (!(lambda >= 0)) throw ConfigError("lambda must be non-negative");
  if (pe_latency == 0) throw ConfigError("PE latency must be at least 1");
}

namespace {

std::uint32_t particle_weight(const Frame& f, Point at, const Histogram& ref, const TrackerParams& p) {
  const auto h = compute_histogram(f, {at, p.half_width, p.half_height}, p.bins, p.kernel);
  return raw_weight(bhattacharyya(h, ref).distance, p.lambda);
}

void check_frames(std::span<const Frame> frames, const TrackerParams& p) {
  p.validate();
  if (frames.size() < 2) throw ValidationError("tracking needs at least two frames");
  for (const auto& f : frames) {
    if (f.width != frames[0].width || f.height != frames[0].height)
      throw ValidationError("frames differ in size");
    if (f.pixels.size() != std::size_t(f.width) * f.height) throw ValidationError("frame pixel count");
    if (f.width < 2 * p.half_width + 1 || f.height < 2 * p.half_height + 1)
      throw ValidationError("frame smaller than the ROI");
  }
}

}  // namespace

TrackResult track_reference(std::span<const Frame> frames, Point init, const TrackerParams& p) {
  check_frames(frames, p);
  const auto w = frames[0].width, h = frames[0].height;
  init = clip_to_frame(init, w, h);
  const auto ref = compute_histogram(frames[0], {init, p.half_width, p.half_height}, p.bins, p.kernel);
  TrackResult res;
  res.centers.push_back(init);
  Point c = init;
  for (std::size_t k = 1; k < frames.size(); ++k) {
    const auto xs = sample_particles(c, p.sigma, p.particles, p.seed, k, w, h);
    std::vector<std::uint32_t> raw;
    for (const auto& x : xs) raw.push_back(particle_weight(frames[k], x, ref, p));
    const auto ws = normalize_weights(raw);
    res.fallback_frames += ws.fallback;
    c = weighted_mean(xs, ws.w);
    res.centers.push_back(c);
  }
  return res;
}

TrackerPlacement place_tracker(std::uint32_t workers, std::uint32_t endpoints) {
  if (workers == 0) throw ConfigError("need at least one worker");
  if (workers > endpoints)
    throw ConfigError("tracker needs " + std::to_string(workers) + " endpoints, network has " +
                      std::to_string(endpoints));
  TrackerPlacement pl;
  const std::uint32_t base = workers < endpoints ? 1 : 0;
  for (std::uint32_t w = 0; w < workers; ++w) pl.workers.push_back(w + base);
  return pl;
}

namespace {

enum WorkerSlot : std::uint32_t { slot_x, slot_y, slot_idx, slot_ref };

class TrackerRoot : public Agent {
 public:
  TrackerRoot(std::span<const Frame> frames, Point init, const TrackerParams& p,
              TrackerPlacement pl, std::shared_ptr<const Frame*> store)
      : frames_(frames), p_(p), pl_(std::move(pl)), store_(std::move(store)) {
    init = clip_to_frame(init, frames[0].width, frames[0].height);
    ref_ = compute_histogram(frames[0], {init, p.half_width, p.half_height}, p.bins, p.kernel);
    center_ = init;
    res_.centers.push_back(init);
  }

  std::string name() const override { return "root"; }
  std::vector<std::uint32_t> tags() const override { return {pl_.root_tag}; }

  AcceptResult accept(const MessageEnvelope& env, Cycle) override {
    const auto idx = std::uint32_t(env.data >> 16);
    if (!active_ || idx >= raw_.size() || seen_[idx])
      throw ProtocolError("unexpected weight for particle " + std::to_string(idx));
    raw_[idx] = std::uint32_t(env.data & 0xffff);
    seen_[idx] = true;
    ++received_;
    return AcceptResult::accepted;
  }

  void tick(Cycle, Outbox& out) override {
    if (active_ && received_ == raw_.size()) {
      const auto ws = normalize_weights(raw_);
      res_.fallback_frames += ws.fallback;
      center_ = weighted_mean(xs_, ws.w);
      res_.centers.push_back(center_);
      active_ = false;
      ++k_;
    }
    if (active_ || k_ >= frames_.size()) return;
    *store_ = &frames_[k_];
    if (k_ == 1)
      for (auto e : pl_.workers)
        for (std::uint32_t u = 0; u < p_.bins; ++u)
          out.send(e, {false, slot_ref, (std::uint64_t(u) << 16) | ref_[u]}, 24);
    xs_ = sample_particles(center_, p_.sigma, p_.particles, p_.seed, k_, frames_[0].width,
                           frames_[0].height);
    raw_.assign(xs_.size(), 0);
    seen_.assign(xs_.size(), false);
    received_ = 0;
    for (std::uint32_t i = 0; i < xs_.size(); ++i) {
      const auto e = pl_.workers[i % pl_.workers.size()];
      out.send(e, {false, slot_x, std::uint64_t(xs_[i].x)}, 32);
      out.send(e, {false, slot_y, std::uint64_t(xs_[i].y)}, 32);
      out.send(e, {false, slot_idx, i}, 16);
    }
    active_ = true;
  }

  bool finished() const override { return !active_ && k_ >= frames_.size(); }

  TrackResult result() const { return res_; }

 private:
  std::span<const Frame> frames_;
  TrackerParams p_;
  TrackerPlacement pl_;
  std::shared_ptr<const Frame*> store_;
  Histogram ref_;
  Point center_;
  std::size_t k_ = 1;
  bool active_ = false;
  std::vector<Point> xs_;
  std::vector<std::uint32_t> raw_;
  std::vector<bool> seen_;
  std::size_t received_ = 0;
  TrackResult res_;
};

PEDescriptor make_worker(std::uint32_t w, const TrackerParams& p, const TrackerPlacement& pl,
                         std::shared_ptr<const Frame*> store) {
  PEDescriptor pe;
  pe.name = "worker" + std::to_string(w);
  pe.endpoint = pl.workers[w];
  pe.collector.mode = CollectorMode::gather;
  pe.collector.slots = {{slot_x, 1, 32, FoldOp::bit_or, false},
                        {slot_y, 1, 32, FoldOp::bit_or, false},
                        {slot_idx, 1, 16, FoldOp::bit_or, false},
                        {slot_ref, p.bins, 24, FoldOp::bit_or, true}};
  pe.output_widths = {32};
  pe.table = {{0, pl.root, pl.root_tag}};
  pe.latency = p.pe_latency;
  pe.processor = [p, store](const Inputs& in) -> Results {
    Histogram ref(p.bins, 0);
    for (auto word : in[slot_ref]) ref.at(word >> 16) = std::uint32_t(word & 0xffff);
    const Point at{std::int64_t(in[slot_x][0]), std::int64_t(in[slot_y][0])};
    const auto w = particle_weight(**store, at, ref, p);
    return {(in[slot_idx][0] << 16) | w};
  };
  return pe;
}

}  // namespace

TrackResult track_on_noc(std::span<const Frame> frames, Point init, const TrackerParams& p,
                         Network& net, std::function<void(const SendEvent&)> on_send) {
  check_frames(frames, p);
  const auto pl = place_tracker(p.workers, net.topology().endpoint_count());
  auto store = std::make_shared<const Frame*>(&frames[0]);
  Runtime rt(net);
  for (std::uint32_t w = 0; w < p.workers; ++w)
    rt.add(pl.workers[w], std::make_unique<PeAgent>(make_worker(w, p, pl, store)));
  auto& root = rt.emplace(pl.root, std::make_unique<TrackerRoot>(frames, init, p, pl, store));
  if (on_send) rt.on_send(std::move(on_send));
  const auto run = rt.run();
  auto res = root.result();
  res.cycles = run.cycles();
  return res;
}

Video generate_video(const VideoParams& p) {
  if (p.width == 0 || p.height == 0 || p.frames == 0) throw ConfigError("empty video");
  Video v;
  for (std::uint32_t k = 0; k < p.frames; ++k) {
    const double cx = p.x0 + p.vx * k, cy = p.y0 + p.vy * k;
    Frame f(p.width, p.height, p.background);
    const CounterRng rng(p.seed, "noise", k);
    for (std::uint32_t y = 0; y < p.height; ++y)
      for (std::uint32_t x = 0; x < p.width; ++x) {
        const bool in = std::abs(x - cx) <= p.square_half && std::abs(y - cy) <= p.square_half;
        int value = in ? p.foreground : p.background;
        if (p.noise > 0)
          value += int(rng.below(std::uint64_t(y) * p.width + x, 2 * p.noise + 1)) - int(p.noise);
        f.at(x, y) = static_cast<std::uint8_t>(std::clamp(value, 0, 255));
      }
    v.frames.push_back(std::move(f));
    v.truth.emplace_back(cx, cy);
  }
  return v;
}

void write_video(std::ostream& os, std::span<const Frame> frames) {
  if (frames.empty()) throw ValidationError("no frames to write");
  os << frames[0].width << ' ' << frames[0].height << ' ' << frames.size() << '\n';
  for (const auto& f : frames) {
    if (f.width != frames[0].width || f.height != frames[0].height)
      throw ValidationError("frames differ in size");
    os.write(reinterpret_cast<const char*>(f.pixels.data()), std::streamsize(f.pixels.size()));
  }
  if (!os) throw IoError("failed to write video");
}

std::vector<Frame> read_video(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw ValidationError("missing video header");
  std::istringstream hs(header);
  std::int64_t w = 0, h = 0, n = 0;
  std::string extra;
  if (!(hs >> w >> h >> n) || (hs >> extra) || w <= 0 || h <= 0 || n <= 0 || w > 65535 || h > 65535)
    throw ValidationError("malformed video header: '" + header + "'");
  std::vector<Frame> frames;
  for (std::int64_t k = 0; k < n; ++k) {
    Frame f{std::uint32_t(w), std::uint32_t(h)};
    is.read(reinterpret_cast<char*>(f.pixels.data()), std::streamsize(f.pixels.size()));
    if (is.gcount() != std::streamsize(f.pixels.size()))
      throw ValidationError("video truncated in frame " + std::to_string(k));
    frames.push_back(std::move(f));
  }
  if (is.peek() != std::char_traits<char>::eof()) throw ValidationError("trailing bytes after video");
  return frames;
}

Point to_fixed(double x, double y) { return {std::llround(x * kCoordOne), std::llround(y * kCoordOne)}; }

double from_fixed(std::int64_t v) { return double(v) / kCoordOne; }

}  // namespace nocmap
