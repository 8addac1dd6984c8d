// inputs: 5 3 9 1 | 4 4 4 | 10 -2 7 0 3 8 | 1 | 9 8 7 6 5 4 3 2 1
#include <stdio.h>
#include <stdlib.h>

void sort(int *arr, int n) {
    int temp = 0;
    for (int i = 0; i < n; i++) {
        for (int j = 1; j < (n - i); j++) {
            if (arr[j - 1] > arr[j]) {
                /* swap elements */
                temp = arr[j - 1];
                arr[j - 1] = arr[j];
                arr[j] = temp;
            }
        }
    }
}

int main(int argc, char **argv) {
    int a[64];
    int n = argc - 1;
    for (int i = 0; i < n; i++) {
        a[i] = atoi(argv[i + 1]);
    }
    sort(a, n);
    for (int i = 0; i < n; i++) {
        printf("%d ", a[i]);
    }
    printf("\n");
    return 0;
}
