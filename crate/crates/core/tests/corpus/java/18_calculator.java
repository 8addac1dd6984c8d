// inputs: 3 + 4 | 10 - 12 | 6 * 7 | 9 / 2 | 5 % 3
public class Main {
    public static void main(String[] args) {
        int a = Integer.parseInt(args[0]);
        char op = args[1].charAt(0);
        int b = Integer.parseInt(args[2]);
        int result = 0;
        switch (op) {
            case '+':
                result = a + b;
                break;
            case '-':
                result = a - b;
                break;
            case '*':
                result = a * b;
                break;
            case '/':
                result = a / b;
                break;
            default:
                result = -1;
        }
        boolean big = result > 10;
        System.out.println(result);
        System.out.println(big);
    }
}
