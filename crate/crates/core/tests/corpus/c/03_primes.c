// inputs: 10 | 2 | 50 | 1 | 97
#include <stdio.h>
#include <stdlib.h>

int main(int argc, char **argv) {
    int n = atoi(argv[1]);
    char composite[128] = {0};
    int count = 0;
    int sum = 0;
    for (int i = 2; i <= n; i++) {
        if (!composite[i]) {
            count++;
            sum += i;
            for (int j = i * i; j <= n; j += i) {
                composite[j] = 1;
            }
        }
    }
    printf("%d\n%d\n", count, sum);
    return 0;
}
