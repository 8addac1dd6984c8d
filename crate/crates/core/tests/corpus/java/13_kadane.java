// inputs: -2 1 -3 4 -1 2 1 -5 4 | 1 | -3 -1 -2 | 5 4 -1 7 8 | 0 0 0
public class Main {
    public static void main(String[] args) {
        int best = Integer.MIN_VALUE;
        int cur = 0;
        int start = 0;
        int bestStart = 0;
        int bestEnd = 0;
        for (int i = 0; i < args.length; i++) {
            int v = Integer.parseInt(args[i]);
            if (cur <= 0) {
                cur = v;
                start = i;
            } else {
                cur = cur + v;
            }
            if (cur > best) {
                best = cur;
                bestStart = start;
                bestEnd = i;
            }
        }
        System.out.println(best);
        System.out.println(bestStart + ".." + bestEnd);
    }
}
