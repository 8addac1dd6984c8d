// inputs: 7 | 1 | 20 | 0 | 13
#include <stdio.h>
#include <stdlib.h>

int search(const int *a, int len, int key) {
    int lo = 0;
    int hi = len - 1;
    while (lo <= hi) {
        int mid = (lo + hi) / 2;
        if (a[mid] == key) {
            return mid;
        } else if (a[mid] < key) {
            lo = mid + 1;
        } else {
            hi = mid - 1;
        }
    }
    return -1;
}

int main(int argc, char **argv) {
    int a[] = {1, 3, 5, 7, 9, 11, 13, 15, 17, 19};
    int key = atoi(argv[1]);
    int idx = search(a, 10, key);
    printf("%d\n", idx);
    return 0;
}
