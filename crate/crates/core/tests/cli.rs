use std::path::PathBuf;
use std::process::{Command, Output};

fn fusilli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fusilli"))
        .args(args)
        .env_remove("CC")
        .env_remove("CFLAGS")
        .output()
        .unwrap()
}

fn sample(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../pipelines")
        .join(name)
        .display()
        .to_string()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

#[test]
fn version() {
    let o = fusilli(&["--version"]);
    assert!(o.status.success());
    assert_eq!(
        text(&o.stdout).trim(),
        format!("fusilli {}", env!("CARGO_PKG_VERSION"))
    );
}

#[test]
fn check_reports_the_signature() {
    let o = fusilli(&["check", &sample("dot.pipe")]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    assert_eq!(
        text(&o.stdout).trim(),
        "dot(a: int_array, b: int_array) -> int: ok"
    );
}

#[test]
fn diagnostics_carry_file_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.pipe");
    std::fs::write(&bad, "pipeline p() =\n  iota(1)\n  |> mapp(e)\n  |> sum\n").unwrap();
    let o = fusilli(&["check", bad.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = text(&o.stderr);
    assert!(err.contains("bad.pipe:3:6:") && err.contains("`mapp`"), "{err}");

    std::fs::write(&bad, "pipeline p() =\n  iota(1)\n  |> filter(e + 1)\n  |> sum\n").unwrap();
    let err = text(&fusilli(&["check", bad.to_str().unwrap()]).stderr);
    assert!(err.contains("filter predicate must be bool"), "{err}");
}

#[test]
fn compile_writes_the_same_c_from_text_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.c"), dir.path().join("b.c"));
    let o = fusilli(&["compile", &sample("ex2.pipe"), "-o", a.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let o = fusilli(&["compile", &sample("ex2.json"), "-o", b.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let (a, b) = (
        std::fs::read_to_string(a).unwrap(),
        std::fs::read_to_string(b).unwrap(),
    );
    assert_eq!(a, b);
    assert!(a.starts_with("int ex2(void)\n"));
}

#[test]
fn bench_rejects_bad_configuration() {
    let err = text(&fusilli(&["bench", "--suite", "nope"]).stderr);
    assert!(err.contains("unknown benchmark `nope`"), "{err}");
    let err = text(&fusilli(&["bench", "--suite", "sum", "--iterations", "3"]).stderr);
    assert!(err.contains("at least 20"), "{err}");
    let err = text(&fusilli(&["bench", "--suite", "sum", "--cc", "/nonexistent/cc"]).stderr);
    assert!(err.contains("not found"), "{err}");
}

#[test]
fn bench_writes_one_row_per_variant() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let empty = dir.path().join("no_baselines");
    std::fs::create_dir(&empty).unwrap();
    let o = fusilli(&[
        "bench",
        "--suite",
        "runLengthDecoding",
        "--scale",
        "0.001",
        "--cflags",
        "-O1",
        "--baseline-dir",
        empty.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let rows = std::fs::read_to_string(csv).unwrap();
    let rows: Vec<&str> = rows.lines().collect();
    assert_eq!(rows[0], "name,variant,mean_ms,stderr_ms,iterations,checksum");
    assert_eq!(rows.len(), 2);
    let cols: Vec<&str> = rows[1].split(',').collect();
    assert_eq!(&cols[..2], ["runLengthDecoding", "generated"]);
    assert_eq!(cols[4], "20");
}

#[test]
fn baselines_are_validated_and_timed_when_present() {
    if Command::new("cc").arg("--version").output().is_err() {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let kernels = dir.path().join("kernels");
    std::fs::create_dir(&kernels).unwrap();
    let csv = dir.path().join("out.csv");
    let run = |body: &str| {
        std::fs::write(
            kernels.join("sum.c"),
            format!("int sum(const int *a, int a_len)\n{{\n  int s = 0;\n  for (int i = 0; i < a_len; i++)\n    s += {body};\n  return s;\n}}\n"),
        )
        .unwrap();
        fusilli(&[
            "bench",
            "--suite",
            "sum",
            "--scale",
            "0.0001",
            "--baseline-dir",
            kernels.to_str().unwrap(),
            "--csv",
            csv.to_str().unwrap(),
        ])
    };
    let o = run("a[i]");
    assert!(o.status.success(), "{}", text(&o.stderr));
    let rows = std::fs::read_to_string(&csv).unwrap();
    let variants: Vec<&str> = rows
        .lines()
        .skip(1)
        .map(|r| r.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(variants, ["generated", "baseline"]);

    // A wrong kernel stops the run before any timing.
    std::fs::remove_file(&csv).unwrap();
    let o = run("a[i] + 1");
    assert!(!o.status.success());
    assert!(text(&o.stderr).contains("sum (baseline)"), "{}", text(&o.stderr));
    assert!(!csv.exists());
}
