// inputs: 3 | 1 | 5 | 0 | 4
public class Main {
    public static void main(String[] args) {
        int n = Integer.parseInt(args[0]);
        int stars = 0;
        for (int i = 1; i <= n; i++) {
            String line = "";
            int j = 0;
            while (j < n - i) {
                line += " ";
                j++;
            }
            for (int k = 0; k < 2 * i - 1; k++) {
                line = line + "*";
                stars++;
            }
            System.out.println(line);
        }
        System.out.println(stars);
    }
}
