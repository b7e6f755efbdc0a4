#include "nocmap/harness.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "nocmap/error.hpp"
#include "nocmap/ldpc.hpp"
#include "nocmap/partition.hpp"
#include "nocmap/rng.hpp"

namespace nocmap {

std::string_view to_string(AppKind a) noexcept {
  switch (a) {
    case AppKind::bmvm: return "bmvm";
    case AppKind::ldpc: return "ldpc";
    case AppKind::track: return "track";
  }
  return "?";
}

AppKind parse_app_kind(std::string_view text) {
  if (text == "bmvm") return AppKind::bmvm;
  if (text == "ldpc") return AppKind::ldpc;
  if (text == "track") return AppKind::track;
  throw ConfigError("unknown app '" + std::string(text) + "' (bmvm, ldpc, track)");
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_int(std::string_view key, std::string_view v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size() || v.empty())
    throw ConfigError("'" + std::string(key) + "' expects an unsigned integer, got '" + std::string(v) + "'");
  return out;
}

double parse_double(std::string_view key, std::string_view v) {
  double out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size() || v.empty() || !std::isfinite(out))
    throw ConfigError("'" + std::string(key) + "' expects a number, got '" + std::string(v) + "'");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("'" + std::string(key) + "' expects true/false, got '" + std::string(v) + "'");
}

std::string fmt_double(double d) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, d);  // shortest round trip
  return std::string(buf, r.ptr);
}

struct Key {
  const char* name;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define U32(key, field)                                                                       \
  Key { key, [](ExperimentConfig& c, std::string_view v) { c.field = parse_int<std::uint32_t>(key, v); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.field); } }
#define U8(key, field)                                                                        \
  Key { key, [](ExperimentConfig& c, std::string_view v) {                                   \
          auto x = parse_int<std::uint32_t>(key, v);                                         \
          if (x > 255) throw ConfigError(std::string("'") + key + "' must be in 0..255");    \
          c.field = std::uint8_t(x); },                                                      \
        [](const ExperimentConfig& c) { return std::to_string(c.field); } }
#define DBL(key, field)                                                                       \
  Key { key, [](ExperimentConfig& c, std::string_view v) { c.field = parse_double(key, v); }, \
        [](const ExperimentConfig& c) { return fmt_double(c.field); } }
#define STR(key, field)                                                                       \
  Key { key, [](ExperimentConfig& c, std::string_view v) { c.field = std::string(v); },      \
        [](const ExperimentConfig& c) { return c.field; } }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      {"app", [](ExperimentConfig& c, std::string_view v) { c.app = parse_app_kind(v); },
       [](const ExperimentConfig& c) { return std::string(to_string(c.app)); }},
      {"topology", [](ExperimentConfig& c, std::string_view v) {
         try {
           c.topology = parse_topology_kind(v);
         } catch (const Error&) {
           throw ConfigError("unknown topology '" + std::string(v) + "' (ring, mesh, torus, fat_tree)");
         }
       },
       [](const ExperimentConfig& c) { return std::string(to_string(c.topology)); }},
      U32("rows", rows), U32("cols", cols), U32("arity", arity), U32("levels", levels),
      U32("endpoints", endpoints), U32("flit_width", flit_width), U32("buffer_depth", buffer_depth),
      U32("vc_count", vc_count), STR("partition", partition), U32("lane_width", lane_width),
      {"seed", [](ExperimentConfig& c, std::string_view v) { c.seed = parse_int<std::uint64_t>("seed", v); },
       [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
      U32("pe_latency", pe_latency),
      U32("n", n), U32("k", k), U32("f", f), U32("r", r), DBL("density", density),
      {"checkpoints", [](ExperimentConfig& c, std::string_view v) {
         if (v == "final") c.checkpoints = Checkpoints::final_only;
         else if (v == "all") c.checkpoints = Checkpoints::all;
         else throw ConfigError("'checkpoints' expects final or all, got '" + std::string(v) + "'");
       },
       [](const ExperimentConfig& c) { return std::string(c.checkpoints == Checkpoints::all ? "all" : "final"); }},
      U32("columns", columns), STR("matrix_file", matrix_file), STR("vector_file", vector_file),
      U32("iterations", iterations),
      {"sign_mode", [](ExperimentConfig& c, std::string_view v) { c.sign_mode = parse_bool("sign_mode", v); },
       [](const ExperimentConfig& c) { return std::string(c.sign_mode ? "true" : "false"); }},
      U32("blocks", blocks), DBL("llr_amplitude", llr_amplitude), DBL("llr_noise", llr_noise),
      STR("llr_file", llr_file),
      U32("particles", tracker.particles), U32("workers", tracker.workers), U32("bins", tracker.bins),
      U32("half_width", tracker.half_width), U32("half_height", tracker.half_height),
      DBL("sigma", tracker.sigma), DBL("lambda", tracker.lambda),
      {"kernel", [](ExperimentConfig& c, std::string_view v) {
         if (v == "epanechnikov") c.tracker.kernel = Kernel::epanechnikov;
         else if (v == "uniform") c.tracker.kernel = Kernel::uniform;
         else throw ConfigError("'kernel' expects epanechnikov or uniform, got '" + std::string(v) + "'");
       },
       [](const ExperimentConfig& c) {
         return std::string(c.tracker.kernel == Kernel::uniform ? "uniform" : "epanechnikov");
       }},
      U32("video_width", video.width), U32("video_height", video.height), U32("frames", video.frames),
      U32("square_half", video.square_half), DBL("x0", video.x0), DBL("y0", video.y0),
      DBL("vx", video.vx), DBL("vy", video.vy), U32("noise", video.noise),
      U8("background", video.background), U8("foreground", video.foreground),
      STR("video_file", video_file),
      {"init_x", [](ExperimentConfig& c, std::string_view v) { c.init_x = parse_double("init_x", v); },
       [](const ExperimentConfig& c) { return c.init_x ? fmt_double(*c.init_x) : std::string(); }},
      {"init_y", [](ExperimentConfig& c, std::string_view v) { c.init_y = parse_double("init_y", v); },
       [](const ExperimentConfig& c) { return c.init_y ? fmt_double(*c.init_y) : std::string(); }},
      STR("out", out), STR("stats_out", stats_out),
  };
  return table;
}

#undef U32
#undef U8
#undef DBL
#undef STR

bool is_preset(std::string_view name) {
  return name == "single" || name == "halves" || name == "router0" || name == "quadrants" ||
         name == "stripes";
}

PartitionSpec resolve_partition(const ExperimentConfig& cfg, const TopologyConfig& tc) {
  PartitionSpec spec = is_preset(cfg.partition) ? preset_partition(Topology(tc), cfg.partition)
                                                : load_partition_file(cfg.partition, tc.router_count());
  spec.lane_width = cfg.lane_width;
  spec.validate(tc.router_count());
  return spec;
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fixed_coord(std::int64_t v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.8f", from_fixed(v));
  return buf;
}

std::vector<std::vector<Llr>> make_llrs(const ExperimentConfig& cfg, const LdpcCode& code) {
  std::vector<std::vector<Llr>> out;
  if (!cfg.llr_file.empty()) {
    std::istringstream is(read_text_file(cfg.llr_file));
    std::vector<Llr> cur;
    long v;
    while (is >> v) {
      if (v < -128 || v > 127) throw ValidationError("LLR " + std::to_string(v) + " outside int8 range");
      cur.push_back(Llr(v));
      if (cur.size() == code.n) out.push_back(std::exchange(cur, {}));
    }
    if (!is.eof()) throw ValidationError("LLR file holds a non-integer token");
    if (!cur.empty() || out.empty())
      throw ValidationError("LLR file must hold a positive multiple of " + std::to_string(code.n) + " values");
    return out;
  }
  const auto words = enumerate_codewords(code);
  for (std::uint32_t b = 0; b < cfg.blocks; ++b) {
    const CounterRng rng(cfg.seed, "llr", b);
    const auto& cw = words[rng.below(0, words.size())];
    std::vector<Llr> llr(code.n);
    for (std::uint32_t i = 0; i < code.n; ++i) {
      double g0, g1;
      rng.normal_pair(1 + i, g0, g1);
      const double mean = cw[i] ? -cfg.llr_amplitude : cfg.llr_amplitude;
      llr[i] = saturate_llr(static_cast<int>(std::lround(mean + cfg.llr_noise * g0)));
    }
    out.push_back(std::move(llr));
  }
  return out;
}

std::string run_bmvm(const ExperimentConfig& cfg, Network& net) {
  const Gf2Matrix a = cfg.matrix_file.empty() ? Gf2Matrix::random(cfg.n, cfg.density, cfg.seed)
                                              : Gf2Matrix::parse(read_text_file(cfg.matrix_file));
  if (a.n() != cfg.n)
    throw ConfigError("matrix file is " + std::to_string(a.n()) + "x" + std::to_string(a.n()) +
                      " but n = " + std::to_string(cfg.n));
  std::vector<Gf2Vector> vs;
  if (cfg.vector_file.empty()) {
    for (std::uint32_t c = 0; c < cfg.columns; ++c) vs.push_back(Gf2Vector::random(cfg.n, cfg.seed, c));
  } else {
    std::istringstream is(read_text_file(cfg.vector_file));
    for (std::string line; std::getline(is, line);) {
      line = trim(line);
      if (line.empty() || line[0] == '#') continue;
      vs.push_back(Gf2Vector::parse(line));
      if (vs.back().n() != cfg.n) throw ConfigError("vector length does not match n");
    }
    if (vs.empty()) throw ValidationError("vector file holds no vectors");
  }
  BmvmShape shape{cfg.n, cfg.k, cfg.f, cfg.r, cfg.checkpoints};
  const auto bank = preprocess(a, cfg.k);
  BmvmRunOptions opts;
  opts.pe_latency.assign(shape.pe_count(), cfg.pe_latency);
  const auto res = bmvm_iterate(bank, shape, vs, net, opts);
  std::string out = "column,checkpoint,vector\n";
  for (std::size_t c = 0; c < vs.size(); ++c) {
    if (res.columns[c] != bmvm_reference(a, vs[c], shape))
      throw RuntimeError("NoC product differs from the naive product in column " + std::to_string(c));
    for (std::size_t j = 0; j < res.columns[c].size(); ++j)
      out += std::to_string(c) + "," + std::to_string(j) + "," + res.columns[c][j].format() + "\n";
  }
  return out;
}

std::string run_ldpc(const ExperimentConfig& cfg, Network& net) {
  const auto code = fano_parity_matrix();
  const DecodeOptions opts{cfg.iterations, cfg.sign_mode, false};
  std::string out = "block,bits\n";
  std::uint32_t b = 0;
  for (const auto& llr : make_llrs(cfg, code)) {
    const auto got = decode_on_noc(code, llr, opts, net);
    if (got.bits != decode(code, llr, opts).bits)
      throw RuntimeError("NoC decode differs from the sequential decoder in block " + std::to_string(b));
    out += std::to_string(b++) + ",";
    for (auto bit : got.bits) out += char('0' + bit);
    out += "\n";
  }
  return out;
}

std::string run_track(const ExperimentConfig& cfg, Network& net) {
  std::vector<Frame> frames;
  Point init;
  if (cfg.video_file.empty()) {
    auto vp = cfg.video;
    vp.seed = cfg.seed;
    auto v = generate_video(vp);
    frames = std::move(v.frames);
    init = to_fixed(cfg.init_x.value_or(v.truth[0].first), cfg.init_y.value_or(v.truth[0].second));
  } else {
    std::ifstream is(cfg.video_file, std::ios::binary);
    if (!is) throw IoError("cannot open video '" + cfg.video_file + "'");
    frames = read_video(is);
    init = to_fixed(*cfg.init_x, *cfg.init_y);
  }
  auto p = cfg.tracker;
  p.seed = cfg.seed;
  p.pe_latency = cfg.pe_latency;
  const auto got = track_on_noc(frames, init, p, net);
  if (got.centers != track_reference(frames, init, p).centers)
    throw RuntimeError("NoC tracker differs from the sequential tracker");
  std::string out = "frame,x,y\n";
  for (std::size_t k = 0; k < got.centers.size(); ++k)
    out += std::to_string(k) + "," + fixed_coord(got.centers[k].x) + "," + fixed_coord(got.centers[k].y) + "\n";
  return out;
}

}  // namespace

void ExperimentConfig::set(std::string_view key, std::string_view value) {
  for (const auto& k : keys())
    if (key == k.name) {
      k.set(*this, value);
      return;
    }
  throw ConfigError("unknown key '" + std::string(key) + "'");
}

std::string ExperimentConfig::dump() const {
  std::string s;
  for (const auto& k : keys())
    if (auto v = k.get(*this); !v.empty()) s += std::string(k.name) + "=" + v + "\n";
  return s;
}

std::uint32_t ExperimentConfig::endpoint_demand() const {
  switch (app) {
    case AppKind::bmvm: return (k && f && n % (k * f) == 0) ? std::max(1u, n / (k * f)) : 1;
    case AppKind::ldpc: return 14;
    case AppKind::track: return std::max(1u, tracker.workers);
  }
  return 1;
}

std::uint32_t ExperimentConfig::effective_flit_width() const {
  if (flit_width) return flit_width;
  return app == AppKind::track ? 32 : 16;
}

TopologyConfig ExperimentConfig::topology_config() const {
  TopologyConfig tc;
  const bool shaped = rows || cols || arity || levels || endpoints;
  if (!shaped) {
    tc = TopologyConfig::fitted(topology, endpoint_demand());
  } else {
    tc.kind = topology;
    tc.rows = rows;
    tc.cols = cols;
    tc.arity = arity;
    tc.levels = levels;
    switch (topology) {
      case TopologyKind::ring: tc.endpoint_count = endpoints; break;
      case TopologyKind::mesh:
      case TopologyKind::torus: tc.endpoint_count = endpoints ? endpoints : rows * cols; break;
      case TopologyKind::fat_tree: {
        std::uint64_t cap = 1;
        for (std::uint32_t i = 0; i < levels && cap <= (1u << 20); ++i) cap *= arity;
        tc.endpoint_count = endpoints ? endpoints : std::uint32_t(std::min<std::uint64_t>(cap, 1u << 21));
        break;
      }
    }
  }
  tc.flit_width = effective_flit_width();
  tc.buffer_depth = buffer_depth;
  tc.vc_count = vc_count;
  return tc;
}

void ExperimentConfig::validate() const {
  if (flit_width != 0 && (flit_width < 8 || flit_width > 64))
    throw ConfigError("flit_width must be in 8..64");
  if (pe_latency == 0) throw ConfigError("pe_latency must be at least 1");
  switch (app) {
    case AppKind::bmvm: {
      BmvmShape{n, k, f, r, checkpoints}.validate();
      if (!(density >= 0 && density <= 1)) throw ConfigError("density must be in [0, 1]");
      if (columns == 0) throw ConfigError("columns must be at least 1");
      break;
    }
    case AppKind::ldpc:
      if (iterations == 0) throw ConfigError("iterations must be at least 1");
      if (blocks == 0) throw ConfigError("blocks must be at least 1");
      if (!(llr_noise >= 0)) throw ConfigError("llr_noise must be non-negative");
      break;
    case AppKind::track: {
      tracker.validate();
      if (init_x.has_value() != init_y.has_value()) throw ConfigError("init_x and init_y go together");
      if (!video_file.empty() && !init_x) throw ConfigError("video_file needs init_x and init_y");
      if (video_file.empty()) {
        if (video.frames < 2) throw ConfigError("frames must be at least 2");
        if (video.width < 2 * tracker.half_width + 1 || video.height < 2 * tracker.half_height + 1)
          throw ConfigError("video frame is smaller than the ROI");
      }
      break;
    }
  }
  const auto tc = topology_config();
  tc.validate();
  if (tc.endpoint_count < endpoint_demand())
    throw ConfigError(std::string(to_string(app)) + " needs " + std::to_string(endpoint_demand()) +
                      " endpoints but the " + std::string(to_string(topology)) + " has " +
                      std::to_string(tc.endpoint_count));
  if (lane_width < 1 || lane_width > 64) throw ConfigError("lane_width must be in 1..64");
  if (!partition.empty()) resolve_partition(*this, tc);
}

void apply_config(ExperimentConfig& cfg, std::string_view text) {
  std::size_t line_no = 0;
  std::istringstream is{std::string(text)};
  for (std::string line; std::getline(is, line);) {
    ++line_no;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
    try {
      cfg.set(trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  apply_config(cfg, text);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) { return parse_config(read_text_file(path)); }

std::string StatsRecord::csv_header() {
  return "app,topology,partitions,cycles,flits_injected,flits_ejected,avg_flit_latency,"
         "max_flit_latency,seed,result_digest";
}

std::string StatsRecord::csv_row() const {
  char avg[48];
  std::snprintf(avg, sizeof avg, "%.6f", avg_flit_latency);
  return app + "," + topology + "," + std::to_string(partitions) + "," + std::to_string(cycles) + "," +
         std::to_string(flits_injected) + "," + std::to_string(flits_ejected) + "," + avg + "," +
         std::to_string(max_flit_latency) + "," + std::to_string(seed) + "," + hex64(result_digest);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto tc = cfg.topology_config();
  std::optional<Network> mono;
  std::optional<PartitionedNetwork> parted;
  std::uint32_t parts = 1;
  if (cfg.partition.empty()) {
    mono.emplace(tc);
  } else {
    const auto spec = resolve_partition(cfg, tc);
    parts = spec.partition_count();
    parted.emplace(partition_network(tc, spec));
  }
  Network& net = mono ? *mono : parted->network;

  ExperimentResult res;
  switch (cfg.app) {
    case AppKind::bmvm: res.output = run_bmvm(cfg, net); break;
    case AppKind::ldpc: res.output = run_ldpc(cfg, net); break;
    case AppKind::track: res.output = run_track(cfg, net); break;
  }
  const auto& st = net.stats();
  if (st.flits_injected != st.flits_ejected)
    throw RuntimeError("flits injected (" + std::to_string(st.flits_injected) + ") != ejected (" +
                       std::to_string(st.flits_ejected) + ")");
  auto& s = res.stats;
  s.app = std::string(to_string(cfg.app));
  s.topology = std::string(to_string(tc.kind));
  s.partitions = parts;
  s.cycles = net.cycle();
  s.flits_injected = st.flits_injected;
  s.flits_ejected = st.flits_ejected;
  s.avg_flit_latency = st.avg_latency();
  s.max_flit_latency = st.latency_max;
  s.seed = cfg.seed;
  s.result_digest = fnv1a64(res.output);
  return res;
}

std::vector<ExperimentResult> run_sweep(const ExperimentConfig& cfg, const std::vector<TopologyKind>& kinds) {
  if (kinds.empty()) throw ConfigError("sweep needs at least one topology");
  std::vector<ExperimentResult> out;
  for (auto kind : kinds) {
    auto c = cfg;
    c.topology = kind;
    c.rows = c.cols = c.arity = c.levels = c.endpoints = 0;
    out.push_back(run_experiment(c));
    if (out.back().stats.result_digest != out.front().stats.result_digest)
      throw RuntimeError("results differ between " + out.front().stats.topology + " and " +
                         out.back().stats.topology);
  }
  return out;
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write '" + path + "'");
  os.write(text.data(), std::streamsize(text.size()));
  if (!os) throw IoError("write to '" + path + "' failed");
}

std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void append_stats(const std::string& path, const std::vector<StatsRecord>& rows) {
  std::error_code ec;
  const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
  std::ofstream os(path, std::ios::binary | std::ios::app);
  if (!os) throw IoError("cannot append to '" + path + "'");
  std::string block = fresh ? StatsRecord::csv_header() + "\n" : std::string();
  for (const auto& r : rows) block += r.csv_row() + "\n";
  os.write(block.data(), std::streamsize(block.size()));
  if (!os) throw IoError("append to '" + path + "' failed");
}

void write_outputs(const ExperimentConfig& cfg, const std::vector<ExperimentResult>& results) {
  if (results.empty()) return;
  if (!cfg.out.empty()) write_text_file(cfg.out, results.front().output);
  if (!cfg.stats_out.empty()) {
    std::vector<StatsRecord> rows;
    for (const auto& r : results) rows.push_back(r.stats);
    append_stats(cfg.stats_out, rows);
  }
}

void gen_matrix(const std::string& path, std::uint32_t n, double density, std::uint64_t seed) {
  if (n == 0) throw ConfigError("n must be positive");
  if (!(density >= 0 && density <= 1)) throw ConfigError("density must be in [0, 1]");
  write_text_file(path, Gf2Matrix::random(n, density, seed).format());
}

void gen_vector(const std::string& path, std::uint32_t n, std::uint64_t seed) {
  if (n == 0) throw ConfigError("n must be positive");
  write_text_file(path, Gf2Vector::random(n, seed).format() + "\n");
}

void gen_video(const std::string& path, const VideoParams& p) {
  const auto v = generate_video(p);
  std::ostringstream os;
  write_video(os, v.frames);
  write_text_file(path, os.str());
}

}  // namespace nocmap
