// 3x3 Sobel edge magnitude over a 32x32 tile.
static int clamp_pixel(int v) {
  if (v > 255)
    return 255;
  return v;
}

void sobel(unsigned char in[32][32], unsigned char out[32][32]) {
#pragma HLS array_partition variable=in complete dim=2
ROWS:
  for (int r = 1; r < 31; r++) {
  COLS:
    for (int c = 1; c < 31; c++) {
#pragma HLS pipeline II=1
      int gx = in[r - 1][c + 1] - in[r - 1][c - 1] + 2 * (in[r][c + 1] - in[r][c - 1]);
      int gy = in[r + 1][c - 1] - in[r - 1][c - 1] + 2 * (in[r + 1][c] - in[r - 1][c]);
      int mag = (gx < 0 ? -gx : gx) + (gy < 0 ? -gy : gy);
      out[r][c] = clamp_pixel(mag);
    }
  }
}
