// Running average of a sample window.
void average(int a[128], int *out) {
#pragma HLS array_partition variable=a cyclic factor=4 dim=1
  int sum = 0;
ACC:
  for (int i = 0; i < 128; i++) {
#pragma HLS unroll factor=4
    sum += a[i];
  }
  *out = sum / 128;
}
