// inputs: 10 | 1 | 25 | 0 | 7
#include <stdio.h>
#include <stdlib.h>

int main(int argc, char **argv) {
    int n = atoi(argv[1]);
    int evens = 0;
    int odds = 0;
    double avg = 0.0;
    for (int i = 0; i < n; i++) {
        if (i % 3 == 0) {
            continue;
        }
        if (i % 2 == 0) {
            evens += i;
        } else {
            odds += i;
        }
    }
    if (n > 0) {
        avg = (double) (evens + odds) / n;
    }
    printf("%d %d %.3f\n", evens, odds, avg);
    return 0;
}
