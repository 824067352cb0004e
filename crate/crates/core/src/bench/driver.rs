use std::fmt::Write;

use super::{ArgSpec, BenchPipeline, Fill, Len};
use crate::backend::SemType;

fn len_expr(l: Len) -> String {
    match l {
        Len::N => "fus_n".into(),
        Len::Times(k) => format!("fus_n * {k}"),
        Len::Div(k) => format!("fus_n / {k}"),
        Len::Fixed(k) => k.to_string(),
    }
}

/// A standalone C program around `kernel`.
///
/// Run as `prog N ITERS`: it builds the inputs for base size `N`, prints
/// `result R` for one call, then `time MS R` for each of `ITERS` timed calls.
pub fn driver_source(p: &BenchPipeline, kernel: &str, ret: SemType) -> String {
    let d = p.desc();
    let mut s = String::new();
    s.push_str(
        "#define _POSIX_C_SOURCE 199309L\n#include <stdio.h>\n#include <stdlib.h>\n#include <time.h>\n\n",
    );
    s.push_str(kernel);
    s.push_str(
        r#"
static unsigned int fus_lcg;

static int fus_next(void)
{
  fus_lcg = fus_lcg * 1103515245u + 12345u;
  return (int)((fus_lcg >> 16) & 0x7fffu);
}

static int *fus_fill(long len, int pairs, int lo, int hi, unsigned int seed)
{
  int *p = malloc((size_t)(len > 0 ? len : 1) * sizeof(int));
  long i;
  if (!p) {
    fprintf(stderr, "out of memory\n");
    exit(2);
  }
  fus_lcg = seed;
  for (i = 0; i < len; i++) {
    if (pairs) {
      int v = fus_next() % 100;
      int c = 1 + fus_next() % 255;
      p[i] = v * 256 + c;
    } else {
      p[i] = lo + fus_next() % (hi - lo);
    }
  }
  return p;
}

static double fus_now_ms(void)
{
  struct timespec ts;
  clock_gettime(CLOCK_MONOTONIC, &ts);
  return (double)ts.tv_sec * 1e3 + (double)ts.tv_nsec / 1e6;
}

int main(int argc, char **argv)
{
  long fus_n;
  int fus_iters, fus_it;
"#,
    );
    let (cty, fmt, acc) = match ret {
        SemType::Float => ("double", "%.17g", "double"),
        _ => ("int", "%d", "long long"),
    };
    writeln!(s, "  {cty} fus_r;\n  volatile {acc} fus_sink = 0;").unwrap();
    for (param, spec) in d.params.iter().zip(p.args) {
        match spec {
            ArgSpec::IntArray { .. } => writeln!(s, "  int *{0};\n  int {0}_len;", param.name).unwrap(),
            ArgSpec::Int(_) => writeln!(s, "  int {};", param.name).unwrap(),
        }
    }
    s.push_str(
        "  if (argc != 3) {\n    fprintf(stderr, \"usage: %s N ITERS\\n\", argv[0]);\n    return 2;\n  }\n  \
         fus_n = atol(argv[1]);\n  fus_iters = atoi(argv[2]);\n",
    );
    let mut args = Vec::new();
    let mut barrier = String::new();
    for (param, spec) in d.params.iter().zip(p.args) {
        let name = &param.name;
        match *spec {
            ArgSpec::IntArray { len, fill, seed } => {
                let (pairs, lo, hi) = match fill {
                    Fill::Uniform { lo, hi } => (0, lo, hi),
                    Fill::RunPairs => (1, 0, 1),
                };
                let l = len_expr(len);
                writeln!(s, "  {name}_len = (int)({l});").unwrap();
                writeln!(
                    s,
                    "  {name} = fus_fill({name}_len, {pairs}, {lo}, {hi}, {seed}u);"
                )
                .unwrap();
                args.push(name.clone());
                args.push(format!("{name}_len"));
                writeln!(
                    barrier,
                    "    __asm__ volatile(\"\" : : \"r\"({name}) : \"memory\");"
                )
                .unwrap();
            }
            ArgSpec::Int(len) => {
                writeln!(s, "  {name} = (int)({});", len_expr(len)).unwrap();
                args.push(name.clone());
            }
        }
    }
    let call = format!("{}({})", d.name, args.join(", "));
    writeln!(s, "  fus_r = {call};\n  printf(\"result {fmt}\\n\", fus_r);").unwrap();
    s.push_str("  for (fus_it = 0; fus_it < fus_iters; fus_it++) {\n    double fus_t0, fus_t1;\n");
    s.push_str(&barrier);
    writeln!(
        s,
        "    fus_t0 = fus_now_ms();\n    fus_r = {call};\n    fus_sink += fus_r;\n    fus_t1 = fus_now_ms();\n    \
         printf(\"time %.6f {fmt}\\n\", fus_t1 - fus_t0, fus_r);\n  }}"
    )
    .unwrap();
    s.push_str("  (void)fus_sink;\n  return 0;\n}\n");
    s
}
