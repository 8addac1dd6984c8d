// inputs: 12345 | 0 | 99999 | 1000000 | 7
#include <stdio.h>
#include <stdlib.h>

int main(int argc, char **argv) {
    int n = atoi(argv[1]);
    int sum = 0;
    int count = 0;
    int rev = 0;
    int m = n;
    do {
        int d = m % 10;
        sum += d;
        rev = rev * 10 + d;
        count++;
        m /= 10;
    } while (m > 0);
    printf("%d\n%d\n%d\n", sum, count, rev);
    return 0;
}
