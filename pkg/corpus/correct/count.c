/* How many of the first n elements equal x. */
int count_equal(int a[], int n, int x) {
    int c;
    int i;
    c = 0;
    i = 0;
    while (i < n) {
        if (a[i] == x) {
            c = c + 1;
        }
        i = i + 1;
    }
    return c;
}
