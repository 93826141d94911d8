#include <stdio.h>
#include <string.h>
#include "toridimer.h"

int main(void) {
    TdGraph *g = NULL;
    TdTorus *t = NULL;
    char buf[128];
    size_t needed = 0;
    if (td_graph_builtin("uniform", &g) != TdStatus_Ok) return 1;
    if (td_torus_new(g, 1, &t) != TdStatus_Ok) return 2;
    if (td_torus_charpoly(t, buf, sizeof buf, &needed) != TdStatus_Ok) return 3;
    if (strcmp(buf, "-z^-1 - w^-1 + 4 - w - z") != 0) return 4;
    if (td_torus_partition_function(t, buf, sizeof buf, &needed) != TdStatus_Ok || strcmp(buf, "8") != 0) return 5;
    if (td_graph_builtin("hexagonal", &g) == TdStatus_Ok) return 6;
    if (td_last_error_message() == NULL) return 7;
    td_torus_free(t);
    td_graph_free(g);
    printf("%s ok\n", td_version());
    return 0;
}
