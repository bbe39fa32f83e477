// Simplified IMA ADPCM encoder over 64 16-bit samples.
static const short step_table[16] = {7, 8, 9, 10, 11, 12, 13, 14, 16, 17, 19, 21, 23, 25, 28, 31};

static int encode_step(int diff, int step) {
  int code = 0;
  if (diff >= step) {
    code = 4;
    diff -= step;
  }
  if (diff >= (step >> 1))
    code |= 2;
  return code;
}

void adpcm_like(short in[64], unsigned char out[64]) {
#pragma HLS array_reshape variable=in cyclic factor=2 dim=1
  int pred = 0;
  int index = 0;
SAMPLES:
  for (int i = 0; i < 64; i += 1) {
#pragma HLS pipeline II=3
    int diff = in[i] - pred;
    int sign = diff < 0 ? 8 : 0;
    if (sign)
      diff = -diff;
    int code = encode_step(diff, step_table[index]) | sign;
    pred += sign ? -step_table[index] : step_table[index];
    index = index + (code & 7) - 2;
    if (index < 0)
      index = 0;
    if (index > 15)
      index = 15;
    out[i] = code;
  }
}
