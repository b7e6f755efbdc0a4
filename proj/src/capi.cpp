#include "nocmap/nocmap.h"

#include <cstring>
#include <new>
#include <sstream>
#include <string>

#include "nocmap/error.hpp"
#include "nocmap/harness.hpp"

struct nocmap_config {
  nocmap::ExperimentConfig cfg;
};

struct nocmap_result {
  std::vector<nocmap::ExperimentResult> rows;
  std::vector<std::string> csv;
};

namespace {

thread_local std::string last_error;

nocmap_status status_of(nocmap::ErrorKind k) {
  using nocmap::ErrorKind;
  switch (k) {
    case ErrorKind::config: return NOCMAP_ERR_CONFIG;
    case ErrorKind::usage: return NOCMAP_ERR_USAGE;
    case ErrorKind::protocol: return NOCMAP_ERR_PROTOCOL;
    case ErrorKind::validation: return NOCMAP_ERR_VALIDATION;
    case ErrorKind::framing: return NOCMAP_ERR_FRAMING;
    case ErrorKind::resource: return NOCMAP_ERR_RESOURCE;
    case ErrorKind::io: return NOCMAP_ERR_IO;
    case ErrorKind::runtime: return NOCMAP_ERR_RUNTIME;
  }
  return NOCMAP_ERR_INTERNAL;
}

template <class F>
nocmap_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return NOCMAP_OK;
  } catch (const nocmap::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return NOCMAP_ERR_RESOURCE;
  } catch (const std::exception& e) {
    last_error = e.what();
    return NOCMAP_ERR_INTERNAL;
  }
}

nocmap_status null_arg(const char* what) {
  last_error = std::string(what) + " must not be null";
  return NOCMAP_ERR_USAGE;
}

nocmap_result* wrap(std::vector<nocmap::ExperimentResult> rows) {
  auto* r = new nocmap_result{std::move(rows), {}};
  for (const auto& x : r->rows) r->csv.push_back(x.stats.csv_row());
  return r;
}

void copy_name(char (&dst)[16], const std::string& src) {
  std::strncpy(dst, src.c_str(), sizeof dst - 1);
  dst[sizeof dst - 1] = '\0';
}

}  // namespace

extern "C" {

const char* nocmap_version(void) { return "0.1.0"; }

const char* nocmap_status_name(nocmap_status s) {
  switch (s) {
    case NOCMAP_OK: return "ok";
    case NOCMAP_ERR_CONFIG: return "config";
    case NOCMAP_ERR_USAGE: return "usage";
    case NOCMAP_ERR_PROTOCOL: return "protocol";
    case NOCMAP_ERR_VALIDATION: return "validation";
    case NOCMAP_ERR_FRAMING: return "framing";
    case NOCMAP_ERR_RESOURCE: return "resource";
    case NOCMAP_ERR_IO: return "io";
    case NOCMAP_ERR_RUNTIME: return "runtime";
    case NOCMAP_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* nocmap_last_error(void) { return last_error.c_str(); }

nocmap_status nocmap_config_new(nocmap_config** out) {
  if (!out) return null_arg("out");
  return guarded([&] { *out = new nocmap_config{}; });
}

void nocmap_config_free(nocmap_config* cfg) { delete cfg; }

nocmap_status nocmap_config_parse(nocmap_config* cfg, const char* text) {
  if (!cfg) return null_arg("cfg");
  if (!text) return null_arg("text");
  return guarded([&] {
    auto copy = cfg->cfg;
    nocmap::apply_config(copy, text);
    cfg->cfg = std::move(copy);
  });
}

nocmap_status nocmap_config_load(nocmap_config* cfg, const char* path) {
  if (!cfg) return null_arg("cfg");
  if (!path) return null_arg("path");
  return guarded([&] {
    auto copy = cfg->cfg;
    nocmap::apply_config(copy, nocmap::read_text_file(path));
    cfg->cfg = std::move(copy);
  });
}

nocmap_status nocmap_config_set(nocmap_config* cfg, const char* key, const char* value) {
  if (!cfg) return null_arg("cfg");
  if (!key) return null_arg("key");
  if (!value) return null_arg("value");
  return guarded([&] { cfg->cfg.set(key, value); });
}

nocmap_status nocmap_config_validate(const nocmap_config* cfg) {
  if (!cfg) return null_arg("cfg");
  return guarded([&] { cfg->cfg.validate(); });
}

nocmap_status nocmap_config_dump(const nocmap_config* cfg, char* buf, size_t cap, size_t* needed) {
  if (!cfg) return null_arg("cfg");
  return guarded([&] {
    const auto text = cfg->cfg.dump();
    if (needed) *needed = text.size() + 1;
    if (buf && cap > 0) {
      const auto n = std::min(cap - 1, text.size());
      std::memcpy(buf, text.data(), n);
      buf[n] = '\0';
    }
  });
}

nocmap_status nocmap_run(const nocmap_config* cfg, nocmap_result** out) {
  if (!cfg) return null_arg("cfg");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = wrap({nocmap::run_experiment(cfg->cfg)}); });
}

nocmap_status nocmap_sweep(const nocmap_config* cfg, const char* topologies, nocmap_result** out) {
  if (!cfg) return null_arg("cfg");
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    std::vector<nocmap::TopologyKind> kinds;
    std::string list = topologies && *topologies ? topologies : "ring,mesh,torus,fat_tree";
    std::istringstream is(list);
    for (std::string item; std::getline(is, item, ',');) {
      try {
        kinds.push_back(nocmap::parse_topology_kind(item));
      } catch (const nocmap::Error&) {
        throw nocmap::ConfigError("unknown topology '" + item + "' in sweep list");
      }
    }
    *out = wrap(nocmap::run_sweep(cfg->cfg, kinds));
  });
}

void nocmap_result_free(nocmap_result* res) { delete res; }

size_t nocmap_result_rows(const nocmap_result* res) { return res ? res->rows.size() : 0; }

nocmap_status nocmap_result_stats(const nocmap_result* res, size_t row, nocmap_stats* out) {
  if (!res) return null_arg("res");
  if (!out) return null_arg("out");
  if (row >= res->rows.size()) {
    last_error = "row " + std::to_string(row) + " out of range";
    return NOCMAP_ERR_USAGE;
  }
  const auto& s = res->rows[row].stats;
  copy_name(out->app, s.app);
  copy_name(out->topology, s.topology);
  out->partitions = s.partitions;
  out->cycles = s.cycles;
  out->flits_injected = s.flits_injected;
  out->flits_ejected = s.flits_ejected;
  out->avg_flit_latency = s.avg_flit_latency;
  out->max_flit_latency = s.max_flit_latency;
  out->seed = s.seed;
  out->result_digest = s.result_digest;
  last_error.clear();
  return NOCMAP_OK;
}

const char* nocmap_result_csv_row(const nocmap_result* res, size_t row) {
  if (!res || row >= res->csv.size()) return nullptr;
  return res->csv[row].c_str();
}

const char* nocmap_result_output(const nocmap_result* res) {
  if (!res || res->rows.empty()) return nullptr;
  return res->rows.front().output.c_str();
}

const char* nocmap_stats_csv_header(void) {
  static const std::string h = nocmap::StatsRecord::csv_header();
  return h.c_str();
}

nocmap_status nocmap_write_outputs(const nocmap_config* cfg, const nocmap_result* res) {
  if (!cfg) return null_arg("cfg");
  if (!res) return null_arg("res");
  return guarded([&] { nocmap::write_outputs(cfg->cfg, res->rows); });
}

nocmap_status nocmap_gen_matrix(const char* path, uint32_t n, double density, uint64_t seed) {
  if (!path) return null_arg("path");
  return guarded([&] { nocmap::gen_matrix(path, n, density, seed); });
}

nocmap_status nocmap_gen_vector(const char* path, uint32_t n, uint64_t seed) {
  if (!path) return null_arg("path");
  return guarded([&] { nocmap::gen_vector(path, n, seed); });
}

void nocmap_video_params_default(nocmap_video_params* p) {
  if (!p) return;
  const nocmap::VideoParams d;
  *p = {d.width, d.height, d.frames, d.square_half, d.x0, d.y0, d.vx, d.vy,
        d.background, d.foreground, d.noise, d.seed};
}

nocmap_status nocmap_gen_video(const char* path, const nocmap_video_params* p) {
  if (!path) return null_arg("path");
  if (!p) return null_arg("params");
  return guarded([&] {
    if (p->background > 255 || p->foreground > 255)
      throw nocmap::ConfigError("intensities must be in 0..255");
    nocmap::VideoParams v;
    v.width = p->width;
    v.height = p->height;
    v.frames = p->frames;
    v.square_half = p->square_half;
    v.x0 = p->x0;
    v.y0 = p->y0;
    v.vx = p->vx;
    v.vy = p->vy;
    v.background = std::uint8_t(p->background);
    v.foreground = std::uint8_t(p->foreground);
    v.noise = p->noise;
    v.seed = p->seed;
    nocmap::gen_video(path, v);
  });
}

}  // extern "C"
