// inputs: 0 | 1 | 255 | 1023 | 123456
public class Main {
    public static void main(String[] args) {
        int x = Integer.parseInt(args[0]);
        int ones = 0;
        int highest = -1;
        int pos = 0;
        while (x > 0) {
            if ((x & 1) == 1) {
                ones++;
                highest = pos;
            }
            x = x >> 1;
            pos += 1;
        }
        System.out.println(ones);
        System.out.println(highest);
    }
}
