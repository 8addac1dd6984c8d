// inputs: 5 | 0 | 12 | 20 | 3
#include <stdio.h>
#include <stdlib.h>

unsigned long long fact(int n) {
    if (n <= 1) {
        return 1;
    }
    return n * fact(n - 1);
}

int main(int argc, char **argv) {
    int n = atoi(argv[1]);
    unsigned long long f = fact(n);
    int digits = 0;
    unsigned long long t = f;
    while (t > 0) {
        digits = digits + 1;
        t = t / 10;
    }
    printf("%llu\n%d\n", f, digits);
    return 0;
}
