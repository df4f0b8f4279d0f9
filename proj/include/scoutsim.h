/* scoutsim — pursuit-evasion scout simulator, C API.
 *
 * All functions return scout_status; every handle is opaque and freed with
 * its matching *_free. On failure, scout_last_error() returns a
 * thread-local message describing what went wrong.
 */
#ifndef SCOUTSIM_H
#define SCOUTSIM_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum scout_status {
  SCOUT_OK = 0,
  SCOUT_ERR_CONFIG = 1,  /* bad config/map/arguments */
  SCOUT_ERR_RUNTIME = 2, /* episode aborted mid-run */
  SCOUT_ERR_IO = 3,      /* filesystem failure */
} scout_status;

typedef struct scout_map scout_map;
typedef struct scout_config scout_config;
typedef struct scout_episode scout_episode;

const char* scout_version(void);

/* Thread-local message for the most recent failing call in this thread. */
const char* scout_last_error(void);

/* ---- maps ---------------------------------------------------------- */

scout_status scout_map_load(const char* path, scout_map** out);
void scout_map_free(scout_map* map);
scout_status scout_map_info(const scout_map* map, double bounds_out[4], double* altitude_cap_out,
                            int* building_count_out);
scout_status scout_map_render_png(const scout_map* map, const char* png_path, int width_px);

/* Overpass-style OSM JSON -> footprint map file. */
scout_status scout_convert_osm(const char* osm_json_path, const char* out_map_path,
                               double origin_lat, double origin_lon, double altitude_cap);

/* ---- configuration -------------------------------------------------- */

scout_status scout_config_default(scout_config** out);
scout_status scout_config_load(const char* path, scout_config** out);
void scout_config_free(scout_config* cfg);

/* Dotted keys, e.g. "field.batch_rays". Values are parsed as JSON when
 * possible, otherwise taken as strings. */
scout_status scout_config_set(scout_config* cfg, const char* dotted_key, const char* value);
/* Writes the value's JSON into buf (NUL-terminated, truncated to bufsize). */
scout_status scout_config_get(const scout_config* cfg, const char* dotted_key, char* buf,
                              size_t bufsize);
scout_status scout_config_save(const scout_config* cfg, const char* path);

/* ---- episodes ------------------------------------------------------- */

/* Runs one episode. out_dir may be NULL/empty to skip file output. */
scout_status scout_episode_run(const scout_config* cfg, const char* out_dir,
                               scout_episode** out);
void scout_episode_free(scout_episode* ep);

/* Episode aggregates: mean/min/max tracking error (meters), final PSNR (dB,
 * NaN outside field mode), and the first control step at which every target
 * was localized (-1 if never). Null pointers are allowed. */
scout_status scout_episode_summary(const scout_episode* ep, double* te_mean, double* te_min,
                                   double* te_max, double* psnr_final, int* localized_tick);

/* policies_csv: comma-separated labels from {gtmap_map, gtmap_mi, nerf_mi,
 * nerf_mi:2k, nerf_mi:4k, nerf_mi:offline}; seeds_csv e.g. "72,80,88".
 * Episode directories are created under out_root; a report is written to
 * out_root/report. */
scout_status scout_sweep_run(const scout_config* cfg, const char* policies_csv,
                             const char* seeds_csv, const char* out_root);

/* Aggregates previously written episode directories. */
scout_status scout_report_emit(const char* const* episode_dirs, size_t n_dirs,
                               const char* out_dir);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SCOUTSIM_H */
