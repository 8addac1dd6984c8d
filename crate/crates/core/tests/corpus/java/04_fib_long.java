// inputs: 10 | 1 | 50 | 90 | 0
public class Main {
    public static void main(String[] args) {
        int n = Integer.parseInt(args[0]);
        long a = 0;
        long b = 1;
        int i = 0;
        while (i < n) {
            long c = a + b;
            a = b;
            b = c;
            i++;
        }
        System.out.println(a);
        System.out.println(a % 1000);
    }
}
