/* Write the first n elements of a into b in reverse order. */
int reverse_array(int a[], int b[], int n) {
    int i;
    i = 0;
    while (i < n) {
        b[n - 1 - i] = a[i];
        i = i + 1;
    }
    return n;
}
