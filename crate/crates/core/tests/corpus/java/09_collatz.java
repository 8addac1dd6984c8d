// inputs: 6 | 1 | 27 | 97 | 12
public class Main {
    public static void main(String[] args) {
        long x = Long.parseLong(args[0]);
        int steps = 0;
        long peak = x;
        while (x != 1) {
            if (x % 2 == 0) {
                x = x / 2;
            } else {
                x = 3 * x + 1;
            }
            if (x > peak) {
                peak = x;
            }
            steps++;
        }
        System.out.println(steps + " " + peak);
    }
}
