/* Copy the first n elements of a into b. */
int copy_array(int a[], int b[], int n) {
    int i;
    i = 0;
    while (i <= n) {
        b[i] = a[i];
        i = i + 1;
    }
    return n;
}
