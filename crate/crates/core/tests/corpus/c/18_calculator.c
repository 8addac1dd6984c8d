// inputs: 3 + 4 | 10 - 12 | 6 x 7 | 9 / 2 | 5 % 3
#include <stdio.h>
#include <stdlib.h>

int main(int argc, char **argv) {
    int a = atoi(argv[1]);
    char op = argv[2][0];
    int b = atoi(argv[3]);
    int result = 0;
    switch (op) {
    case '+':
        result = a + b;
        break;
    case '-':
        result = a - b;
        break;
    case 'x':
        result = a * b;
        break;
    case '/':
        result = a / b;
        break;
    default:
        result = -1;
    }
    int big = result > 10;
    printf("%d\n%d\n", result, big);
    return 0;
}
