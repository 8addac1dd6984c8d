// inputs: 3 1 4 1 5 | 2 | 10 20 30 | 7 7 7 7 | 1 2 3 4 5 6 7 8
public class Main {
    public static void main(String[] args) {
        int n = args.length;
        int[] p = new int[n + 1];
        for (int i = 0; i < n; i++) {
            p[i + 1] = p[i] + Integer.parseInt(args[i]);
        }
        int queries = 0;
        int total = 0;
        for (int l = 0; l < n; l++) {
            for (int r = l + 1; r <= n; r++) {
                total += p[r] - p[l];
                queries++;
            }
        }
        System.out.println(total);
        System.out.println(queries);
    }
}
