int filters(const int *a, int a_len)
{
  int v_1 = 0;
  const int t_2 = a_len - 1;
  for (int i_3 = 0; i_3 <= t_2; i_3++) {
    const int t_4 = a[i_3];
    if (t_4 > 1) {
      if (t_4 > 2) {
        if (t_4 > 3) {
          if (t_4 > 4) {
            if (t_4 > 5) {
              if (t_4 > 6) {
                if (t_4 > 7) {
                  v_1 = v_1 + t_4;
                }
              }
            }
          }
        }
      }
    }
  }
  return v_1;
}
