// inputs: 4 2 8 6 | 1 | 3 3 1 | 10 9 8 | 5 -5 0 5
#include <stdio.h>
#include <stdlib.h>

int main(int argc, char **argv) {
    int n = argc - 1;
    int a[64];
    for (int i = 0; i < n; i++) {
        a[i] = atoi(argv[i + 1]);
    }
    int shifts = 0;
    for (int i = 1; i < n; i++) {
        int key = a[i];
        int j = i - 1;
        while (j >= 0 && a[j] > key) {
            a[j + 1] = a[j];
            j = j - 1;
            shifts++;
        }
        a[j + 1] = key;
    }
    for (int i = 0; i < n; i++) {
        printf("%d ", a[i]);
    }
    printf("\n%d\n", shifts);
    return 0;
}
