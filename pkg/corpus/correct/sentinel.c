/* Sum numbers read from input until 0 arrives. */
int main() {
    int x;
    int s;
    s = 0;
    scanf("%d", &x);
    while (x != 0) {
        s = s + x;
        scanf("%d", &x);
    }
    printf("%d\n", s);
    return 0;
}
