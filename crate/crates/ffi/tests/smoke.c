#include <stdio.h>
#include <stdlib.h>
#include "cpgir.h"

static const char *SRC =
    "@.str = private constant [4 x i8] c\"MD5\\00\"\n"
    "declare ptr @EVP_get_cipherbyname(ptr)\n"
    "define ptr @f() {\n"
    "entry:\n"
    "  %c = call ptr @EVP_get_cipherbyname(ptr @.str)\n"
    "  ret ptr %c\n"
    "}\n";

int main(void) {
    CpgirGraph *g = NULL;
    if (cpgir_translate(SRC, "smoke.ll", NULL, &g) != CPGIR_STATUS_OK) {
        fprintf(stderr, "translate: %s\n", cpgir_last_error());
        return 1;
    }
    CpgirStats s;
    size_t findings = 0, len = 0;
    if (cpgir_stats(g, &s) != CPGIR_STATUS_OK) return 2;
    if (cpgir_count_findings(g, "crypto-misuse", &findings) != CPGIR_STATUS_OK) return 3;
    if (cpgir_export_json(g, NULL, 0, &len) != CPGIR_STATUS_BUFFER_TOO_SMALL) return 4;
    unsigned char *buf = malloc(len);
    if (cpgir_export_json(g, buf, len, &len) != CPGIR_STATUS_OK) return 5;
    printf("nodes=%llu functions=%llu findings=%zu json=%zu first=%c\n",
           (unsigned long long)s.node_count, (unsigned long long)s.function_count, findings, len, buf[0]);
    free(buf);
    cpgir_graph_free(g);
    return 0;
}
