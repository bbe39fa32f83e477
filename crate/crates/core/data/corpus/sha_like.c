// One SHA-1 style compression round over a 16-word block.
static unsigned int rotl(unsigned int x, int n) {
#pragma HLS inline
  return (x << n) | (x >> (32 - n));
}

void sha_like(unsigned int block[16], unsigned int state[5]) {
#pragma HLS array_partition variable=state complete dim=1
  unsigned int a = state[0], b = state[1], c = state[2], d = state[3], e = state[4];
ROUND:
  for (int t = 0; t < 80; t++) {
#pragma HLS pipeline II=1
    unsigned int f;
    switch (t / 20) {
    case 0: f = (b & c) | (~b & d); break;
    case 1: f = b ^ c ^ d; break;
    case 2: f = (b & c) | (b & d) | (c & d); break;
    default: f = b ^ c ^ d; break;
    }
    unsigned int tmp = rotl(a, 5) + f + e + block[t & 15];
    e = d;
    d = c;
    c = rotl(b, 30);
    b = a;
    a = tmp;
  }
  state[0] += a;
  state[1] += b;
}
