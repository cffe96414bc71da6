/* Smallest of the first n elements. */
int min_value(int a[], int n) {
    int m;
    int i;
    m = a[0];
    i = 1;
    while (i < n) {
        if (a[i] < m) {
            m = a[i];
        }
        i = i + 1;
    }
    return m;
}
