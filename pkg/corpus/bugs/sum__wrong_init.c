/* Sum of the first n elements of an array. */
int sum(int a[], int n) {
    int s;
    int i;
    s = 1;
    i = 0;
    while (i < n) {
        s = s + a[i];
        i = i + 1;
    }
    return s;
}
