// Host-side driver for emitted classifier sources: reads CSV feature rows,
// runs <prefix>_classify on each, and prints one JSON object to stdout.
//
// Configuration arrives through preprocessor defines:
//   HX_SOURCE       quoted path of the emitted source to include
//   HX_PREFIX       symbol prefix the source was generated with
//   HX_FIXED        define when the source takes fixed-point inputs
//   HX_HAVE_SCORES  define when the source was emitted with the test hook
//
// Exit codes: 0 ok, 2 usage, 3 vector file problems.

#include <cstdio>
#include <cstdlib>

#include HX_SOURCE

#define HX_CAT_(a, b) a##b
#define HX_CAT(a, b) HX_CAT_(a, b)
#define HX_SYM(name) HX_CAT(HX_PREFIX, name)

#ifdef HX_FIXED
typedef HX_SYM(_fixed_t) hx_elem;
#else
typedef float hx_elem;
#endif

enum { HX_D = HX_SYM(_n_features), HX_K = HX_SYM(_n_classes) };

// features pass through the emitted conversion helper exactly once
static hx_elem hx_load(float v) {
#ifdef HX_FIXED
    return HX_SYM(_to_fixed)(v);
#else
    return v;
#endif
}

// parse one comma-separated row; returns the value count, -1 on bad input
static int hx_parse_row(char *line, hx_elem *out) {
    int n = 0;
    char *p = line;
    for (;;) {
        while (*p == ' ' || *p == '\t') ++p;
        if (*p == '\0' || *p == '\n' || *p == '\r') return n;
        char *end = p;
        float v = strtof(p, &end);
        if (end == p || n == HX_D) return -1;
        out[n++] = hx_load(v);
        p = end;
        while (*p == ' ' || *p == '\t') ++p;
        if (*p == ',') { ++p; continue; }
        if (*p == '\0' || *p == '\n' || *p == '\r') return n;
        return -1;
    }
}

#ifdef HX_HAVE_SCORES
static void hx_print_score(hx_elem v) {
#ifdef HX_FIXED
    printf("%lld", (long long)v);
#else
    printf("%.9g", (double)v); // nine significant digits round-trip binary32
#endif
}
#endif

int main(int argc, char **argv) {
    if (argc != 2) {
        fprintf(stderr, "usage: %s VECTORS.csv\n", argv[0]);
        return 2;
    }
    FILE *fh = fopen(argv[1], "r");
    if (fh == NULL) {
        fprintf(stderr, "cannot open %s\n", argv[1]);
        return 3;
    }

    size_t cap = 256, count = 0;
    int32_t *pred = (int32_t *)malloc(cap * sizeof *pred);
    hx_elem *scores = (hx_elem *)malloc(cap * HX_K * sizeof *scores);
    if (pred == NULL || scores == NULL) {
        fprintf(stderr, "out of memory\n");
        return 3;
    }

    char line[65536];
    long lineno = 0;
    while (fgets(line, sizeof line, fh) != NULL) {
        ++lineno;
        hx_elem row[HX_D];
        int n = hx_parse_row(line, row);
        if (n == 0) continue; // blank line
        if (n != HX_D) {
            fprintf(stderr, "line %ld: expected %d comma-separated values\n",
                    lineno, (int)HX_D);
            return 3;
        }
        if (count == cap) {
            cap *= 2;
            pred = (int32_t *)realloc(pred, cap * sizeof *pred);
            scores = (hx_elem *)realloc(scores, cap * HX_K * sizeof *scores);
            if (pred == NULL || scores == NULL) {
                fprintf(stderr, "out of memory\n");
                return 3;
            }
        }
        pred[count] = HX_SYM(_classify)(row);
#ifdef HX_HAVE_SCORES
        HX_SYM(_scores)(row, scores + count * (size_t)HX_K);
#endif
        ++count;
    }
    fclose(fh);

    printf("{\"predictions\": [");
    for (size_t i = 0; i < count; ++i)
        printf("%s%ld", i ? ", " : "", (long)pred[i]);
#ifdef HX_HAVE_SCORES
    printf("], \"raw_scores\": [");
    for (size_t i = 0; i < count; ++i) {
        printf("%s[", i ? ", " : "");
        for (int k = 0; k < HX_K; ++k) {
            if (k) printf(", ");
            hx_print_score(scores[i * (size_t)HX_K + k]);
        }
        printf("]");
    }
    printf("]}\n");
#else
    printf("], \"raw_scores\": null}\n");
#endif
    free(pred);
    free(scores);
    return 0;
}
