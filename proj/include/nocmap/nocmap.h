#ifndef NOCMAP_NOCMAP_H
#define NOCMAP_NOCMAP_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(NOCMAP_BUILDING)
#define NOCMAP_API __declspec(dllexport)
#else
#define NOCMAP_API __declspec(dllimport)
#endif
#else
#define NOCMAP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nocmap_status {
  NOCMAP_OK = 0,
  NOCMAP_ERR_CONFIG = 1,
  NOCMAP_ERR_USAGE = 2,
  NOCMAP_ERR_PROTOCOL = 3,
  NOCMAP_ERR_VALIDATION = 4,
  NOCMAP_ERR_FRAMING = 5,
  NOCMAP_ERR_RESOURCE = 6,
  NOCMAP_ERR_IO = 7,
  NOCMAP_ERR_RUNTIME = 8,
  NOCMAP_ERR_INTERNAL = 9
} nocmap_status;

typedef struct nocmap_config nocmap_config;
typedef struct nocmap_result nocmap_result;

typedef struct nocmap_stats {
  char app[16];
  char topology[16];
  uint32_t partitions;
  uint64_t cycles;
  uint64_t flits_injected;
  uint64_t flits_ejected;
  double avg_flit_latency;
  uint64_t max_flit_latency;
  uint64_t seed;
  uint64_t result_digest;
} nocmap_stats;

typedef struct nocmap_video_params {
  uint32_t width, height, frames, square_half;
  double x0, y0, vx, vy;
  uint32_t background, foreground, noise;
  uint64_t seed;
} nocmap_video_params;

NOCMAP_API const char* nocmap_version(void);
/* Short lowercase name, e.g. "config". */
NOCMAP_API const char* nocmap_status_name(nocmap_status s);
/* Message of the last failing call on this thread; "" if none. */
NOCMAP_API const char* nocmap_last_error(void);

NOCMAP_API nocmap_status nocmap_config_new(nocmap_config** out);
NOCMAP_API void nocmap_config_free(nocmap_config* cfg);
/* key=value text, applied on top of the current values. */
NOCMAP_API nocmap_status nocmap_config_parse(nocmap_config* cfg, const char* text);
NOCMAP_API nocmap_status nocmap_config_load(nocmap_config* cfg, const char* path);
NOCMAP_API nocmap_status nocmap_config_set(nocmap_config* cfg, const char* key, const char* value);
NOCMAP_API nocmap_status nocmap_config_validate(const nocmap_config* cfg);
/* Canonical key=value text. Writes at most cap bytes including the NUL;
   *needed receives the full size including the NUL. */
NOCMAP_API nocmap_status nocmap_config_dump(const nocmap_config* cfg, char* buf, size_t cap,
                                            size_t* needed);

NOCMAP_API nocmap_status nocmap_run(const nocmap_config* cfg, nocmap_result** out);
/* topologies: comma-separated kinds, NULL or "" for all four. */
NOCMAP_API nocmap_status nocmap_sweep(const nocmap_config* cfg, const char* topologies,
                                      nocmap_result** out);
NOCMAP_API void nocmap_result_free(nocmap_result* res);
NOCMAP_API size_t nocmap_result_rows(const nocmap_result* res);
NOCMAP_API nocmap_status nocmap_result_stats(const nocmap_result* res, size_t row, nocmap_stats* out);
/* Owned by res. */
NOCMAP_API const char* nocmap_result_csv_row(const nocmap_result* res, size_t row);
NOCMAP_API const char* nocmap_result_output(const nocmap_result* res);
NOCMAP_API const char* nocmap_stats_csv_header(void);
/* Writes the result file and appends stats rows per the config's out/stats_out. */
NOCMAP_API nocmap_status nocmap_write_outputs(const nocmap_config* cfg, const nocmap_result* res);

NOCMAP_API nocmap_status nocmap_gen_matrix(const char* path, uint32_t n, double density, uint64_t seed);
NOCMAP_API nocmap_status nocmap_gen_vector(const char* path, uint32_t n, uint64_t seed);
NOCMAP_API void nocmap_video_params_default(nocmap_video_params* p);
NOCMAP_API nocmap_status nocmap_gen_video(const char* path, const nocmap_video_params* p);

#ifdef __cplusplus
}
#endif

#endif
