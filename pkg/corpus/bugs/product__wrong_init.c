/* Product of the first n elements of an array. */
int product(int a[], int n) {
    int p;
    int i;
    p = 0;
    i = 0;
    while (i < n) {
        p = p * a[i];
        i = i + 1;
    }
    return p;
}
