// inputs: 2 | 3 | 1 | 4 | 5
#include <stdio.h>
#include <stdlib.h>

int main(int argc, char **argv) {
    int n = atoi(argv[1]);
    int a[8][8];
    int b[8][8];
    int c[8][8];
    for (int i = 0; i < n; i++) {
        for (int j = 0; j < n; j++) {
            a[i][j] = i + j;
            b[i][j] = i * j + 1;
        }
    }
    for (int i = 0; i < n; i++) {
        for (int j = 0; j < n; j++) {
            int s = 0;
            for (int k = 0; k < n; k++) {
                s += a[i][k] * b[k][j];
            }
            c[i][j] = s;
        }
    }
    int trace = 0;
    for (int i = 0; i < n; i++) {
        trace += c[i][i];
    }
    printf("%d\n%d\n", trace, c[n - 1][0]);
    return 0;
}
