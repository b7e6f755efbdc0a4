#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nocmap/bmvm.hpp"
#include "nocmap/topology.hpp"
#include "nocmap/tracker.hpp"

namespace nocmap {

enum class AppKind { bmvm, ldpc, track };
std::string_view to_string(AppKind a) noexcept;
AppKind parse_app_kind(std::string_view text);  // ConfigError

// Flat key=value experiment description. Shape keys left at 0 are fitted to
// the application's endpoint demand.
struct ExperimentConfig {
  AppKind app = AppKind::bmvm;
  TopologyKind topology = TopologyKind::mesh;
  std::uint32_t rows = 0, cols = 0, arity = 0, levels = 0, endpoints = 0;
  std::uint32_t flit_width = 0;  // 0: per-app default
  std::uint32_t buffer_depth = 8;
  std::uint32_t vc_count = 0;
  std::string partition;  // preset name or file; empty means one chip
  std::uint32_t lane_width = 8;
  std::uint64_t seed = 1;
  std::uint32_t pe_latency = 1;

  // bmvm
  std::uint32_t n = 64, k = 8, f = 2, r = 1;
  double density = 0.5;
  Checkpoints checkpoints = Checkpoints::final_only;
  std::uint32_t columns = 1;
  std::string matrix_file, vector_file;

  // ldpc
  std::uint32_t iterations = 10;
  bool sign_mode = true;
  std::uint32_t blocks = 1;
  double llr_amplitude = 8.0;
  double llr_noise = 6.0;
  std::string llr_file;

  // track
  TrackerParams tracker;
  VideoParams video;
  std::string video_file;
  std::optional<double> init_x, init_y;

  std::string out;
  std::string stats_out;

  void set(std::string_view key, std::string_view value);  // ConfigError
  void validate() const;                                   // ConfigError
  std::string dump() const;                                // canonical key=value lines
  std::uint32_t endpoint_demand() const;
  std::uint32_t effective_flit_width() const;
  TopologyConfig topology_config() const;
};

ExperimentConfig parse_config(std::string_view text);  // ConfigError with line number
ExperimentConfig load_config(const std::string& path);  // IoError, ConfigError
void apply_config(ExperimentConfig& cfg, std::string_view text);

struct StatsRecord {
  std::string app;
  std::string topology;
  std::uint32_t partitions = 1;
  std::uint64_t cycles = 0;
  std::uint64_t flits_injected = 0;
  std::uint64_t flits_ejected = 0;
  double avg_flit_latency = 0;
  std::uint64_t max_flit_latency = 0;
  std::uint64_t seed = 0;
  std::uint64_t result_digest = 0;

  static std::string csv_header();
  std::string csv_row() const;
};

struct ExperimentResult {
  StatsRecord stats;
  std::string output;  // result file contents
};

// Builds, runs and checks one experiment against its sequential reference.
ExperimentResult run_experiment(const ExperimentConfig& cfg);
// One run per topology kind; all digests must agree.
std::vector<ExperimentResult> run_sweep(const ExperimentConfig& cfg,
                                        const std::vector<TopologyKind>& kinds);
// Writes `out` (overwrite) and appends stats rows to `stats_out`.
void write_outputs(const ExperimentConfig& cfg, const std::vector<ExperimentResult>& results);
void append_stats(const std::string& path, const std::vector<StatsRecord>& rows);

void write_text_file(const std::string& path, std::string_view text);  // IoError
std::string read_text_file(const std::string& path);                   // IoError

void gen_matrix(const std::string& path, std::uint32_t n, double density, std::uint64_t seed);
void gen_vector(const std::string& path, std::uint32_t n, std::uint64_t seed);
void gen_video(const std::string& path, const VideoParams& p);

}  // namespace nocmap
