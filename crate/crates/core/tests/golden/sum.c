int sum(const int *a, int a_len)
{
  int v_1 = 0;
  const int t_2 = a_len - 1;
  for (int i_3 = 0; i_3 <= t_2; i_3++) {
    const int t_4 = a[i_3];
    v_1 = v_1 + t_4;
  }
  return v_1;
}
