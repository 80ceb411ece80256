/* Exercises the C interface from plain C. */
#include <math.h>
#include <stdio.h>
#include <string.h>

#include "urnflow/urnflow.h"

static int failures = 0;

#define EXPECT(cond)                                                  \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                     \
    }                                                                 \
  } while (0)

static void count_lines(const char* line, void* user) {
  (void)line;
  ++*(int*)user;
}

int main(void) {
  EXPECT(strcmp(urnflow_version(), "1.0.0") == 0);

  urnflow_model* model = NULL;
  EXPECT(urnflow_model_hypercycle(5, 1.0, 2.5, 4.0, &model) == URNFLOW_OK);
  EXPECT(urnflow_model_dimension(model) == 5);

  double xhat[5] = {0.2, 0.2, 0.2, 0.2, 0.2};
  double g[5], f = 0.0;
  EXPECT(urnflow_model_growth(model, xhat, &f) == URNFLOW_OK);
  EXPECT(fabs(f - 1.0 / 75.0) < 1e-12);
  EXPECT(urnflow_model_drift(model, xhat, g) == URNFLOW_OK);
  for (int i = 0; i < 5; ++i) EXPECT(fabs(g[i]) < 1e-14);

  size_t moves = urnflow_model_num_moves(model);
  EXPECT(moves > 0 && moves <= 64);
  double pi[64];
  int64_t z[5] = {3, 4, 5, 6, 7};
  EXPECT(urnflow_model_kernel(model, z, pi) == URNFLOW_OK);
  double total = 0.0;
  for (size_t i = 0; i < moves; ++i) total += pi[i];
  EXPECT(fabs(total - 1.0) < 1e-12);

  int64_t empty[5] = {0, 0, 0, 0, 0};
  EXPECT(urnflow_model_kernel(model, empty, pi) == URNFLOW_ERR_INVALID_ARGUMENT);
  EXPECT(strlen(urnflow_last_error()) > 0);

  urnflow_path* path = NULL;
  int64_t z0[5] = {20, 20, 20, 20, 20};
  EXPECT(urnflow_simulate(model, z0, 1000, 7, 100, &path) == URNFLOW_OK);
  size_t len = urnflow_path_length(path);
  EXPECT(len >= 2);
  uint64_t n = 0;
  double tau = -1.0;
  int64_t zl[5];
  EXPECT(urnflow_path_entry(path, 0, &n, &tau, zl) == URNFLOW_OK);
  EXPECT(n == 0 && tau == 0.0 && zl[0] == 20);
  EXPECT(urnflow_path_entry(path, len, &n, &tau, zl) == URNFLOW_ERR_INVALID_ARGUMENT);
  urnflow_path_free(path);
  urnflow_model_free(model);

  double w[3];
  EXPECT(urnflow_wilson_interval(50, 100, w) == URNFLOW_OK);
  EXPECT(fabs(w[1] - 0.404) < 1e-3 && fabs(w[2] - 0.596) < 1e-3);
  EXPECT(urnflow_wilson_interval(5, 4, w) == URNFLOW_ERR_INVALID_ARGUMENT);

  urnflow_config* cfg = NULL;
  EXPECT(urnflow_config_parse("{\"model\": {\"kind\": \"nonsense\"}}", &cfg) == URNFLOW_ERR_CONFIG);
  EXPECT(urnflow_config_parse("{\"model\": {\"kind\": \"replicator\", \"preset\": \"hypercycle\", \"k\": 3, "
                              "\"b\": 1, \"d\": 2.5, \"nu\": 4}, \"run\": {\"command\": \"ode\"}}",
                              &cfg) == URNFLOW_OK);
  EXPECT(strcmp(urnflow_config_command(cfg), "ode") == 0);
  EXPECT(urnflow_config_set_command(cfg, "fly") == URNFLOW_ERR_INVALID_ARGUMENT);
  EXPECT(urnflow_config_set_thin(cfg, 0) == URNFLOW_ERR_INVALID_ARGUMENT);
  EXPECT(urnflow_config_set_seed(cfg, 99) == URNFLOW_OK);
  char* text = NULL;
  EXPECT(urnflow_config_serialize(cfg, &text) == URNFLOW_OK);
  EXPECT(text && strstr(text, "\"seed\": 99") != NULL);
  urnflow_string_free(text);
  EXPECT(urnflow_model_from_config(cfg, &model) == URNFLOW_OK);
  EXPECT(urnflow_model_dimension(model) == 3);
  urnflow_model_free(model);
  urnflow_config_free(cfg);

  int lines = 0;
  EXPECT(urnflow_verify("drift-oracles", 1, NULL, 0, count_lines, &lines) == URNFLOW_OK);
  EXPECT(lines >= 3);
  EXPECT(urnflow_verify("drift-oracles", 1, NULL, URNFLOW_VERIFY_TAMPER_DRIFT, NULL, NULL) ==
         URNFLOW_ERR_VERIFY_FAILED);
  EXPECT(strstr(urnflow_last_error(), "drift-replicator") != NULL);
  EXPECT(urnflow_verify("no-such-criterion", 1, NULL, 0, NULL, NULL) == URNFLOW_ERR_CONFIG);

  EXPECT(urnflow_model_growth(NULL, xhat, &f) == URNFLOW_ERR_INVALID_ARGUMENT);

  if (failures) fprintf(stderr, "%d failure(s)\n", failures);
  else printf("c api: all checks passed\n");
  return failures ? 1 : 0;
}
