#include <stdio.h>
#include <string.h>
#include "imptrack.h"

#define CHECK(cond)                                                     \
  do {                                                                  \
    if (!(cond)) {                                                      \
      const char *msg = imp_last_error_message();                       \
      fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond, msg ? msg : ""); \
      return 1;                                                         \
    }                                                                   \
  } while (0)

int main(int argc, char **argv) {
  if (argc < 2) return 2;

  ImpPath *path = NULL;
  CHECK(imp_path_preset("exp2", &path) == IMP_STATUS_OK);
  double len = 0.0;
  CHECK(imp_path_total_length(path, &len) == IMP_STATUS_OK);
  CHECK(len > 70.0);
  ImpProjection proj;
  CHECK(imp_path_project(path, 3.0, -0.2, 0.0, &proj) == IMP_STATUS_OK);
  CHECK(proj.y_m < 0.0);
  imp_path_free(path);

  ImpScenario *scn = NULL;
  CHECK(imp_scenario_load(argv[1], &scn) == IMP_STATUS_OK);
  ImpRunLog *log = NULL;
  CHECK(imp_run(scn, &log) == IMP_STATUS_OK);
  ImpSummary sum;
  CHECK(imp_run_log_summary(log, &sum) == IMP_STATUS_OK);
  CHECK(!sum.has_fault && sum.samples > 0);
  printf("median %.6f\n", sum.median_m);
  imp_run_log_free(log);
  imp_scenario_free(scn);

  CHECK(imp_path_preset(NULL, &path) == IMP_STATUS_NULL_POINTER);
  CHECK(strstr(imp_last_error_message(), "NULL") != NULL);
  return 0;
}
