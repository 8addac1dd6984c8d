// inputs: 2 10 1000 | 3 0 7 | 5 117 19 | 7 13 100 | 10 5 3
public class Main {
    static long powmod(long base, long exp, long mod) {
        long result = 1;
        base = base % mod;
        while (exp > 0) {
            if ((exp & 1) == 1) {
                result = result * base % mod;
            }
            base = base * base % mod;
            exp >>= 1;
        }
        return result;
    }

    public static void main(String[] args) {
        long b = Long.parseLong(args[0]);
        long e = Long.parseLong(args[1]);
        long m = Long.parseLong(args[2]);
        System.out.println(powmod(b, e, m));
    }
}
