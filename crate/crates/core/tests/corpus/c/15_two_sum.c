// inputs: 5 1 2 3 4 | 0 0 0 0 | 10 5 5 5 | 7 1 6 2 5 3 4 | 3 1
#include <stdio.h>
#include <stdlib.h>

int main(int argc, char **argv) {
    int target = atoi(argv[1]);
    int n = argc - 2;
    int a[64];
    for (int i = 0; i < n; i++) {
        a[i] = atoi(argv[i + 2]);
    }
    int pairs = 0;
    for (int i = 0; i < n; i++) {
        for (int j = i + 1; j < n; j++) {
            if (a[i] + a[j] == target) {
                pairs++;
                printf("%d,%d\n", i, j);
            }
        }
    }
    printf("pairs %d\n", pairs);
    return 0;
}
