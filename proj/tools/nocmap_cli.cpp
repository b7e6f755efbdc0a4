// Command-line front end; talks to the library only through the C API.
#include <CLI11.hpp>

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "nocmap/nocmap.h"

namespace {

struct Failure {
  nocmap_status status;
};

void check(nocmap_status s) {
  if (s != NOCMAP_OK) throw Failure{s};
}

struct Common {
  std::string config, topology, partition, stats_out, out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  bool dump = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "key=value config file");
  cmd->add_option("--seed", c.seed, "64-bit seed");
  cmd->add_option("--topology", c.topology, "ring, mesh, torus or fat_tree");
  cmd->add_option("--partition", c.partition, "partition preset or file");
  cmd->add_option("--stats-out", c.stats_out, "append stats CSV rows here");
  cmd->add_option("--out", c.out, "result file (default: stdout)");
  cmd->add_option("--set", c.sets, "extra key=value override")->take_all();
  cmd->add_flag("--dump-config", c.dump, "print the effective config and exit");
}

struct Config {
  nocmap_config* h = nullptr;
  Config() { check(nocmap_config_new(&h)); }
  ~Config() { nocmap_config_free(h); }
  void set(const char* k, const std::string& v) { check(nocmap_config_set(h, k, v.c_str())); }
};

struct Result {
  nocmap_result* h = nullptr;
  ~Result() { nocmap_result_free(h); }
};

void build(Config& cfg, const Common& c, const char* app) {
  if (!c.config.empty()) check(nocmap_config_load(cfg.h, c.config.c_str()));
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: config: --set expects key=value, got '%s'\n", s.c_str());
      throw Failure{NOCMAP_ERR_CONFIG};
    }
    cfg.set(s.substr(0, eq).c_str(), s.substr(eq + 1));
  }
  if (app) cfg.set("app", app);
  if (c.seed) cfg.set("seed", std::to_string(*c.seed));
  if (!c.topology.empty()) cfg.set("topology", c.topology);
  if (!c.partition.empty()) cfg.set("partition", c.partition);
  if (!c.stats_out.empty()) cfg.set("stats_out", c.stats_out);
  if (!c.out.empty()) cfg.set("out", c.out);
}

bool dump_config(const Config& cfg) {
  std::size_t need = 0;
  check(nocmap_config_dump(cfg.h, nullptr, 0, &need));
  std::string text(need, '\0');
  check(nocmap_config_dump(cfg.h, text.data(), text.size(), &need));
  std::fputs(text.c_str(), stdout);
  return true;
}

void report(const Config& cfg, const Result& res, bool to_stdout) {
  check(nocmap_write_outputs(cfg.h, res.h));
  if (to_stdout) std::fputs(nocmap_result_output(res.h), stdout);
  std::fprintf(stderr, "%s\n", nocmap_stats_csv_header());
  for (std::size_t i = 0; i < nocmap_result_rows(res.h); ++i)
    std::fprintf(stderr, "%s\n", nocmap_result_csv_row(res.h, i));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flit-level NoC simulator and application mapper"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(nocmap_version()));

  Common run_opts[3];
  const char* apps[3] = {"bmvm", "ldpc", "track"};
  const char* blurbs[3] = {"GF(2) matrix-vector product on the NoC", "LDPC min-sum decoding on the NoC",
                           "particle-filter tracking on the NoC"};
  CLI::App* run_cmds[3];
  for (int i = 0; i < 3; ++i) {
    run_cmds[i] = app.add_subcommand(apps[i], blurbs[i]);
    add_common(run_cmds[i], run_opts[i]);
  }

  Common sweep_opts;
  std::string sweep_app, sweep_kinds;
  auto* sweep = app.add_subcommand("sweep", "run one experiment on several topologies");
  add_common(sweep, sweep_opts);
  sweep->add_option("--app", sweep_app, "bmvm, ldpc or track");
  sweep->add_option("--topologies", sweep_kinds, "comma-separated kinds (default: all four)");

  std::uint32_t mat_n = 64, vec_n = 64;
  double density = 0.5;
  std::uint64_t mat_seed = 1, vec_seed = 1;
  std::string mat_out, vec_out, vid_out;
  auto* gm = app.add_subcommand("gen-matrix", "random n x n GF(2) matrix");
  gm->add_option("--n", mat_n, "size");
  gm->add_option("--density", density, "probability of a 1");
  gm->add_option("--seed", mat_seed, "seed");
  gm->add_option("--out", mat_out, "output file")->required();
  auto* gv = app.add_subcommand("gen-vector", "random GF(2) vector");
  gv->add_option("--n", vec_n, "length");
  gv->add_option("--seed", vec_seed, "seed");
  gv->add_option("--out", vec_out, "output file")->required();

  nocmap_video_params vp;
  nocmap_video_params_default(&vp);
  auto* gvid = app.add_subcommand("gen-video", "synthetic moving-square video");
  gvid->add_option("--width", vp.width, "frame width");
  gvid->add_option("--height", vp.height, "frame height");
  gvid->add_option("--frames", vp.frames, "frame count");
  gvid->add_option("--square-half", vp.square_half, "square half-width");
  gvid->add_option("--x0", vp.x0, "initial center x");
  gvid->add_option("--y0", vp.y0, "initial center y");
  gvid->add_option("--vx", vp.vx, "x velocity, pixels per frame");
  gvid->add_option("--vy", vp.vy, "y velocity, pixels per frame");
  gvid->add_option("--noise", vp.noise, "uniform noise amplitude");
  gvid->add_option("--background", vp.background, "background intensity");
  gvid->add_option("--foreground", vp.foreground, "square intensity");
  gvid->add_option("--seed", vp.seed, "seed");
  gvid->add_option("--out", vid_out, "output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: usage: %s\n", e.what());
    return NOCMAP_ERR_USAGE;
  }

  try {
    for (int i = 0; i < 3; ++i) {
      if (!run_cmds[i]->parsed()) continue;
      Config cfg;
      build(cfg, run_opts[i], apps[i]);
      if (run_opts[i].dump) return dump_config(cfg) ? 0 : 1;
      Result res;
      check(nocmap_run(cfg.h, &res.h));
      report(cfg, res, run_opts[i].out.empty());
      return 0;
    }
    if (sweep->parsed()) {
      Config cfg;
      build(cfg, sweep_opts, sweep_app.empty() ? nullptr : sweep_app.c_str());
      if (sweep_opts.dump) return dump_config(cfg) ? 0 : 1;
      Result res;
      check(nocmap_sweep(cfg.h, sweep_kinds.c_str(), &res.h));
      report(cfg, res, sweep_opts.out.empty());
      return 0;
    }
    if (gm->parsed()) check(nocmap_gen_matrix(mat_out.c_str(), mat_n, density, mat_seed));
    if (gv->parsed()) check(nocmap_gen_vector(vec_out.c_str(), vec_n, vec_seed));
    if (gvid->parsed()) check(nocmap_gen_video(vid_out.c_str(), &vp));
  } catch (const Failure& f) {
    if (*nocmap_last_error())
      std::fprintf(stderr, "error: %s: %s\n", nocmap_status_name(f.status), nocmap_last_error());
    return f.status;
  }
  return 0;
}
