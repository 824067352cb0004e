int zipFilterFilter(const int *a, int a_len, const int *b, int b_len)
{
  int v_1 = 0;
  int v_2 = 0;
  int v_3 = 0;
  int v_4 = 0;
  const int t_5 = b_len - 1;
  int v_6 = 0;
  const int t_7 = a_len - 1;
  int v_8 = 0;
  while ((v_8 <= t_7) && (!v_3)) {
    const int t_9 = v_8;
    v_8++;
    const int t_10 = a[t_9];
    if (t_10 > 7) {
      v_2 = 0;
      while ((!v_2) && (!v_3)) {
        if (v_6 <= t_5) {
          const int t_11 = v_6;
          v_6++;
          const int t_12 = b[t_11];
          if (t_12 > 5) {
            v_4 = t_12;
            v_2 = 1;
          }
        } else {
          v_3 = 1;
        }
      }
      if (v_2) {
        const int t_13 = v_4;
        const int t_14 = t_10 + t_13;
        v_1 = v_1 + t_14;
      }
    }
  }
  return v_1;
}
