/* Mean of the first n elements (integer division). */
int average(int a[], int n) {
    int s;
    int i;
    int avg;
    s = 0;
    i = 0;
    while (i < n) {
        s = s + a[i];
        i = i + 1;
    }
    avg = n / s;
    return avg;
}
