#include <stdio.h>
#include <string.h>

#include "gigastore.h"

static int fail(const char *what, enum GsStatus s) {
    const char *msg = gs_last_error_message();
    fprintf(stderr, "%s: %s (%s)\n", what, gs_status_name(s), msg ? msg : "");
    return 1;
}

int main(void) {
    double kt = 0.0;
    enum GsStatus s = gs_required_barrier(1e6 * 3.1557e7, 1e-5, 1e9, &kt);
    if (s != GS_STATUS_OK) return fail("barrier", s);
    printf("barrier %.1f\n", kt);

    if (gs_required_barrier(1.0, 0.5, 0.5, &kt) != GS_STATUS_DOMAIN) return 1;

    const char *text = "HDP";
    struct GsQrSymbol *sym = NULL;
    s = gs_qr_encode((const uint8_t *)text, strlen(text), 1, GS_EC_LEVEL_L, &sym);
    if (s != GS_STATUS_OK) return fail("encode", s);
    size_t side = gs_qr_side(sym);
    uint8_t modules[21 * 21];
    s = gs_qr_copy_modules(sym, modules, sizeof modules);
    if (s != GS_STATUS_OK) return fail("copy", s);
    gs_qr_free(sym);

    uint8_t out[32];
    size_t len = 0;
    s = gs_qr_decode(modules, side, NULL, out, sizeof out, &len, NULL);
    if (s != GS_STATUS_OK) return fail("decode", s);
    printf("decoded %.*s\n", (int)len, out);

    const uint8_t *docs[1] = {(const uint8_t *)"doc"};
    size_t lens[1] = {3};
    struct GsDisk *disk = NULL;
    s = gs_disk_build((const uint8_t *)"index", 5, docs, lens, 1, NULL, &disk);
    if (s != GS_STATUS_OK) return fail("build", s);
    struct GsReadSummary summary;
    s = gs_disk_age_and_read(disk, 473.0, 1.0, 42, GS_READ_MODE_MONOCHROMATIC, false, &summary);
    if (s != GS_STATUS_OK) return fail("read", s);
    printf("side %zu decoded %zu/%zu\n", gs_disk_side(disk), summary.decoded, summary.total_inner);
    char *manifest = gs_disk_manifest_json(disk);
    if (!manifest || !strstr(manifest, "outerVersion")) return 1;
    gs_string_free(manifest);
    gs_disk_free(disk);
    return 0;
}
