// Dense 16x16 single-precision matrix product.
void matrix_mult(float a[16][16], float b[16][16], float c[16][16]) {
#pragma HLS array_partition variable=a complete dim=2
#pragma HLS array_partition variable=b complete dim=1
#pragma HLS array_reshape variable=c block factor=4 dim=2
ROW:
  for (int i = 0; i < 16; i++) {
  COL:
    for (int j = 0; j < 16; j++) {
#pragma HLS pipeline II=2
      float acc = 0.0f;
    PROD:
      for (int k = 0; k < 16; k++) {
#pragma HLS unroll
        acc += a[i][k] * b[k][j];
      }
      c[i][j] = acc;
    }
  }
}
