// inputs: -2 1 -3 4 -1 2 1 -5 4 | 1 | -3 -1 -2 | 5 4 -1 7 8 | 0 0 0
#include <limits.h>
#include <stdio.h>
#include <stdlib.h>

int main(int argc, char **argv) {
    int best = INT_MIN;
    int cur = 0;
    int start = 0;
    int best_start = 0;
    int best_end = 0;
    for (int i = 0; i < argc - 1; i++) {
        int v = atoi(argv[i + 1]);
        if (cur <= 0) {
            cur = v;
            start = i;
        } else {
            cur = cur + v;
        }
        if (cur > best) {
            best = cur;
            best_start = start;
            best_end = i;
        }
    }
    printf("%d\n%d..%d\n", best, best_start, best_end);
    return 0;
}
