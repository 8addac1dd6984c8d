// inputs: 3 1 4 1 5 | 2 | 10 20 30 | 7 7 7 7 | 1 2 3 4 5 6 7 8
#include <stdio.h>
#include <stdlib.h>

int main(int argc, char **argv) {
    int n = argc - 1;
    int p[64];
    p[0] = 0;
    for (int i = 0; i < n; i++) {
        p[i + 1] = p[i] + atoi(argv[i + 1]);
    }
    int queries = 0;
    int total = 0;
    for (int l = 0; l < n; l++) {
        for (int r = l + 1; r <= n; r++) {
            total += p[r] - p[l];
            queries++;
        }
    }
    printf("%d\n%d\n", total, queries);
    return 0;
}
