// inputs: 10 | 1 | 50 | 90 | 0
#include <stdio.h>
#include <stdlib.h>

int main(int argc, char **argv) {
    int n = atoi(argv[1]);
    long long a = 0;
    long long b = 1;
    int i = 0;
    while (i < n) {
        long long c = a + b;
        a = b;
        b = c;
        i++;
    }
    printf("%lld\n%lld\n", a, a % 1000);
    return 0;
}
