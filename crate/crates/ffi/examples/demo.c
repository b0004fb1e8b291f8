/* Minimal consumer of the C API: build a store, insert two references,
 * classify a query, and run three frames through a tracking session.
 *
 * Build (from the workspace root, after `cargo build -p foi-ffi`):
 *   cc crates/ffi/examples/demo.c -Icrates/ffi/include \
 *      target/debug/libfoi_ffi.a -lpthread -ldl -lm -o demo
 */
#include <stdio.h>
#include <string.h>

#include "foi.h"

static int check(FoiStatus status, const char *what) {
    if (status != FOI_STATUS_OK) {
        fprintf(stderr, "%s failed: %s\n", what, foi_status_message(status));
        return 1;
    }
    return 0;
}

int main(void) {
    FoiStore *store = foi_store_new(4);
    if (!store) {
        fprintf(stderr, "store allocation failed\n");
        return 1;
    }

    const float crane[4] = {1.0f, 0.0f, 0.0f, 0.0f};
    const float net[4] = {0.0f, 1.0f, 0.0f, 0.0f};
    uint64_t index = 0;
    if (check(foi_store_insert(store, crane, 4, "crane vehicle", "img/crane.png", &index),
              "insert crane"))
        return 1;
    if (check(foi_store_insert(store, net, 4, "dust-proof net", "img/net.png", &index),
              "insert net"))
        return 1;

    const float query[4] = {0.9f, 0.1f, 0.0f, 0.0f};
    uint64_t hit = 0;
    double similarity = 0.0;
    char label[64];
    if (check(foi_store_classify(store, query, 4, &hit, &similarity, label, sizeof label),
              "classify"))
        return 1;
    printf("query -> record %llu (%s), similarity %.4f\n",
           (unsigned long long)hit, label, similarity);
    if (strcmp(label, "crane vehicle") != 0) {
        fprintf(stderr, "unexpected label %s\n", label);
        return 1;
    }

    /* The session consumes the store handle. */
    FoiSession *session = NULL;
    const char *config =
        "{\"zones\":[{\"name\":\"critical\",\"bounds\":"
        "{\"x_min\":0.0,\"y_min\":0.0,\"x_max\":40.0,\"y_max\":40.0}}]}";
    if (check(foi_session_new(store, config, &session), "session"))
        return 1;

    int entered = 0;
    for (int frame = 0; frame < 3; frame++) {
        double x = 100.0 - 40.0 * frame;
        double boxes[4] = {x, 10.0, x + 10.0, 20.0};
        double confidence = 0.9;
        char *events = NULL;
        if (check(foi_session_process_frame(session, (uint64_t)frame, (uint64_t)frame * 33,
                                            boxes, &confidence, crane, 1, &events),
                  "process_frame"))
            return 1;
        if (strstr(events, "\"Entered\""))
            entered++;
        foi_string_free(events);
    }
    printf("entered alerts: %d\n", entered);

    char *reports = NULL;
    if (check(foi_session_reports(session, &reports), "reports"))
        return 1;
    printf("%s", reports);
    foi_string_free(reports);
    foi_session_free(session);
    return entered == 1 ? 0 : 1;
}
