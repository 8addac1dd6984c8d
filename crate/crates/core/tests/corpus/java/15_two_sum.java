// inputs: 5 1 2 3 4 | 0 0 0 0 | 10 5 5 5 | 7 1 6 2 5 3 4 | 3 1
public class Main {
    public static void main(String[] args) {
        int target = Integer.parseInt(args[0]);
        int n = args.length - 1;
        int[] a = new int[n];
        for (int i = 0; i < n; i++) {
            a[i] = Integer.parseInt(args[i + 1]);
        }
        int pairs = 0;
        for (int i = 0; i < n; i++) {
            for (int j = i + 1; j < n; j++) {
                if (a[i] + a[j] == target) {
                    pairs++;
                    System.out.println(i + "," + j);
                }
            }
        }
        System.out.println("pairs " + pairs);
    }
}
