// inputs: 12345 | 0 | 99999 | 1000000 | 7
public class Main {
    public static void main(String[] args) {
        int n = Integer.parseInt(args[0]);
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
        System.out.println(sum);
        System.out.println(count);
        System.out.println(rev);
    }
}
