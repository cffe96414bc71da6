/* Is x among the first n elements? Returns 1 or 0. */
int find_value(int a[], int n, int x) {
    int found;
    int i;
    found = 0;
    i = 0;
    while (i < n) {
        if (a[i] == x) {
            found = 1;
        }
        i = i + 1;
    }
    return found;
}
