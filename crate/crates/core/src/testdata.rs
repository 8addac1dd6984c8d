pub const BUBBLE_SORT: &str = r#"public class BubbleSortExample {
    static void bubbleSort(int[] arr) {
        int n = arr.length;
        int temp = 0;
        for(int i=0; i < n; i++) {
            for(int j=1; j < (n-i); j++) {
                if(arr[j-1] > arr[j]){
                    // swap elements
                    temp = arr[j-1];
                    arr[j-1] = arr[j];
                    arr[j] = temp;
                }
            }
        }
    }
}
"#;

pub const GET_MAX: &str = "public int getMax(int a, int b) { if (a>b) return a; else return b;}";

pub const C_SAMPLE: &str = r#"#include <stdio.h>
struct P { int x; };
int main(int argc, char **argv) {
  int a[3] = {1,2,3}, n = 3; struct P p; p.x = 1;
  for (int i = 0; i < n; i++) { a[i] += i; }
  while (n > 0) n--;
  printf("%d\n", a[1] + p.x);
  return 0;
}
"#;
