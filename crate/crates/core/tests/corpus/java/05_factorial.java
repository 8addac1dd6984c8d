// inputs: 5 | 0 | 12 | 20 | 3
public class Main {
    static long fact(int n) {
        if (n <= 1) {
            return 1;
        }
        return n * fact(n - 1);
    }

    public static void main(String[] args) {
        int n = Integer.parseInt(args[0]);
        long f = fact(n);
        int digits = 0;
        long t = f;
        while (t > 0) {
            digits = digits + 1;
            t = t / 10;
        }
        System.out.println(f);
        System.out.println(digits);
    }
}
