// inputs: 6 | 1 | 27 | 97 | 12
#include <stdio.h>
#include <stdlib.h>

int main(int argc, char **argv) {
    long x = atol(argv[1]);
    int steps = 0;
    long peak = x;
    while (x != 1) {
        if (x % 2 == 0) {
            x = x / 2;
        } else {
            x = 3 * x + 1;
        }
        if (x > peak) {
            peak = x;
        }
        steps++;
    }
    printf("%d %ld\n", steps, peak);
    return 0;
}
