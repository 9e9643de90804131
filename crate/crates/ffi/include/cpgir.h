#ifndef CPGIR_H
#define CPGIR_H

#include <stddef.h>
#include <stdint.h>

typedef enum CpgirStatus {
  CPGIR_STATUS_OK = 0,
  CPGIR_STATUS_NULL_ARGUMENT = 1,
  CPGIR_STATUS_INVALID_UTF8 = 2,
  // Unbalanced braces; the only fatal parse outcome.
  CPGIR_STATUS_PARSE_ERROR = 3,
  CPGIR_STATUS_UNKNOWN_PASS = 4,
  CPGIR_STATUS_UNKNOWN_RULE = 5,
  // The buffer was too small; the required size has been written back.
  CPGIR_STATUS_BUFFER_TOO_SMALL = 6,
  CPGIR_STATUS_PANIC = 7,
} CpgirStatus;

// Opaque translated graph.
typedef struct CpgirGraph CpgirGraph;

typedef struct CpgirStats {
  uint64_t node_count;
  uint64_t function_count;
  uint64_t problem_node_count;
  // Sum of the recorded phase times.
  double total_ms;
} CpgirStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Translates NUL-terminated LLVM-IR text. `passes` takes the same syntax as
// the CLI (`default`, `all`, `none` or a comma list) and may be null for the
// default pipeline. On success `*out` owns a new graph.
//
// # Safety
// `source`, `name` and a non-null `passes` must be valid C strings; `out`
// must be writable.
enum CpgirStatus cpgir_translate(const char *source,
                                 const char *name,
                                 const char *passes,
                                 struct CpgirGraph **out);

// Releases a graph. Null is ignored.
//
// # Safety
// `graph` must come from `cpgir_translate` and not be freed twice.
void cpgir_graph_free(struct CpgirGraph *graph);

// # Safety
// `graph` must be a live handle and `out` writable.
enum CpgirStatus cpgir_stats(const struct CpgirGraph *graph, struct CpgirStats *out);

// Writes the JSON export into `buf`, without a terminating NUL. `*len` always
// receives the full size, so a call with a null `buf` sizes the buffer.
//
// # Safety
// `buf` must be null or point to `cap` writable bytes; `len` must be writable.
enum CpgirStatus cpgir_export_json(const struct CpgirGraph *graph,
                                   uint8_t *buf,
                                   size_t cap,
                                   size_t *len);

// Counts the findings of one detector, e.g. `crypto-misuse`.
//
// # Safety
// `graph` must be a live handle, `rule` a C string and `count` writable.
enum CpgirStatus cpgir_count_findings(const struct CpgirGraph *graph,
                                      const char *rule,
                                      size_t *count);

// Message for the last failure on this thread; empty if none. The pointer
// stays valid until the next failing call on the same thread.
const char *cpgir_last_error(void);

// Library version as a static C string.
const char *cpgir_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CPGIR_H */
