// inputs: hello | a | racecar | abcdef | xyzzy
public class Main {
    public static void main(String[] args) {
        String s = args[0];
        String r = "";
        int n = s.length();
        for (int i = n - 1; i >= 0; i--) {
            r = r + s.charAt(i);
        }
        boolean pal = true;
        for (int i = 0; i < n / 2; i++) {
            if (s.charAt(i) != s.charAt(n - 1 - i)) {
                pal = false;
            }
        }
        System.out.println(r);
        System.out.println(pal);
    }
}
