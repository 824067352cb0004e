use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;

use thiserror::Error;

use super::{driver_source, find, BenchPipeline, SUITE};
use crate::cc::{CcConfig, CcError};
use crate::fusion_scan::fusion_scan;
use crate::interp::Value;
use crate::pipeline::{check, compile_to_c, drain, evaluate, PipelineError};

/// Environment variable naming the directory of hand-written kernels.
pub const BASELINE_DIR_ENV: &str = "FUSILLI_BASELINE_DIR";

/// Base sizes checked against the interpreter before any timing, besides
/// the timed size itself.
pub const CHECK_SIZES: &[usize] = &[0, 1, 7, 1000];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Generated,
    Baseline,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Generated => "generated",
            Variant::Baseline => "baseline",
        })
    }
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    /// A suite name, or `None` for all.
    pub suite: Option<String>,
    pub scale: f64,
    pub cc: CcConfig,
    pub csv: Option<PathBuf>,
    /// Where to keep the generated kernels.
    pub emit_dir: Option<PathBuf>,
    pub iterations: usize,
    /// Hand-written kernels, `<name>.c` each; `None` looks in the
    /// environment and then `./baseline_kernels`.
    pub baseline_dir: Option<PathBuf>,
    /// Also check the result at the timed size against the interpreter.
    pub validate_full: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            suite: None,
            scale: 0.1,
            cc: CcConfig::default(),
            csv: None,
            emit_dir: None,
            iterations: 20,
            baseline_dir: None,
            validate_full: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchResult {
    pub name: String,
    pub variant: Variant,
    pub mean_ms: f64,
    pub stderr_ms: f64,
    pub iterations: usize,
    /// The kernel's result, as printed by the driver.
    pub checksum: String,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown benchmark `{0}`")]
    UnknownSuite(String),
    #[error("at least 20 iterations are required, got {0}")]
    TooFewIterations(usize),
    #[error("scale must be positive, got {0}")]
    BadScale(f64),
    #[error(transparent)]
    Cc(#[from] CcError),
    #[error("{name}: {err}")]
    Pipeline { name: String, err: PipelineError },
    #[error("{name}: generated code is not fused: {report}")]
    NotFused { name: String, report: String },
    #[error("{name} ({variant}), n = {n}: C returned {got}, interpreter returned {want}")]
    Mismatch {
        name: String,
        variant: Variant,
        n: usize,
        got: String,
        want: String,
    },
    #[error("{name} ({variant}): {msg}")]
    Run {
        name: String,
        variant: Variant,
        msg: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn selected(cfg: &BenchConfig) -> Result<Vec<&'static BenchPipeline>, BenchError> {
    match cfg.suite.as_deref() {
        None | Some("all") => Ok(SUITE.iter().collect()),
        Some(n) => find(n)
            .map(|p| vec![p])
            .ok_or_else(|| BenchError::UnknownSuite(n.into())),
    }
}

fn baseline_dir(cfg: &BenchConfig) -> Option<PathBuf> {
    cfg.baseline_dir
        .clone()
        .or_else(|| std::env::var_os(BASELINE_DIR_ENV).map(PathBuf::from))
        .or_else(|| Some(PathBuf::from("baseline_kernels")))
        .filter(|d| d.is_dir())
}

/// Formats a result the way the driver prints it.
fn show(v: &Value) -> String {
    match v {
        Value::Int(i) => i.to_string(),
        Value::Float(x) => format!("{x:?}"),
        other => format!("{other:?}"),
    }
}

fn same(got: &str, want: &Value) -> bool {
    match want {
        Value::Int(i) => got.parse::<i32>() == Ok(*i),
        Value::Float(x) => got
            .parse::<f64>()
            .map(|g| g.to_bits() == x.to_bits())
            .unwrap_or(false),
        _ => false,
    }
}

struct Timing {
    result: String,
    times: Vec<f64>,
}

fn run_exe(exe: &Path, n: usize, iters: usize) -> Result<Timing, String> {
    let out = Command::new(exe)
        .arg(n.to_string())
        .arg(iters.to_string())
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "exited with {}: {}",
            out.status,
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    let text = String::from_utf8_lossy(&out.stdout);
    let mut result = None;
    let mut times = Vec::new();
    for line in text.lines() {
        let mut w = line.split_whitespace();
        match (w.next(), w.next(), w.next()) {
            (Some("result"), Some(r), None) => result = Some(r.to_string()),
            (Some("time"), Some(t), Some(r)) => {
                if Some(r) != result.as_deref() {
                    return Err(format!("iteration returned {r}, first call returned {result:?}"));
                }
                times.push(t.parse::<f64>().map_err(|e| e.to_string())?);
            }
            _ => return Err(format!("unexpected output line `{line}`")),
        }
    }
    let result = result.ok_or("no result printed")?;
    if times.len() != iters {
        return Err(format!("expected {iters} timings, got {}", times.len()));
    }
    Ok(Timing { result, times })
}

/// Mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Element sequences a pipeline must produce before it is timed.
fn known_drains(name: &str) -> &'static [(&'static [i32], &'static [i32])] {
    match name {
        "runLengthDecoding" => &[(&[7 * 256 + 3, 9 * 256 + 2], &[7, 7, 7, 9, 9])],
        _ => &[],
    }
}

fn pipeline_err(p: &BenchPipeline) -> impl Fn(PipelineError) -> BenchError + '_ {
    move |err| BenchError::Pipeline {
        name: p.name.into(),
        err,
    }
}

struct Prepared {
    variant: Variant,
    exe: PathBuf,
}

/// Compiles, checks and times the selected pipelines, writing the CSV if
/// asked. `log` receives one line per step.
pub fn run_bench(cfg: &BenchConfig, log: &mut dyn FnMut(&str)) -> Result<Vec<BenchResult>, BenchError> {
    if cfg.iterations < 20 {
        return Err(BenchError::TooFewIterations(cfg.iterations));
    }
    if !(cfg.scale > 0.0 && cfg.scale.is_finite()) {
        return Err(BenchError::BadScale(cfg.scale));
    }
    let pipelines = selected(cfg)?;
    cfg.cc.probe()?;
    let work = tempfile::tempdir()?;
    let baselines = baseline_dir(cfg);
    match &baselines {
        Some(d) => log(&format!("baselines from {}", d.display())),
        None => log("no baseline kernels found; timing generated code only"),
    }
    if let Some(d) = &cfg.emit_dir {
        fs::create_dir_all(d)?;
    }

    let mut results = Vec::new();
    for p in pipelines {
        let d = p.desc();
        let ret = check(&d).map_err(|e| pipeline_err(p)(e.into()))?.ret;
        for (input, want) in known_drains(p.name) {
            let got = drain(&d, &[Value::int_array(input)], want.len() + 1).map_err(pipeline_err(p))?;
            if got != want.iter().map(|&v| Value::Int(v)).collect::<Vec<_>>() {
                return Err(BenchError::Mismatch {
                    name: p.name.into(),
                    variant: Variant::Generated,
                    n: input.len(),
                    got: format!("{got:?}"),
                    want: format!("{want:?}"),
                });
            }
        }
        let src = compile_to_c(&d).map_err(pipeline_err(p))?;
        let report = fusion_scan(&src).map_err(|e| BenchError::NotFused {
            name: p.name.into(),
            report: e.to_string(),
        })?;
        if !report.passed() {
            return Err(BenchError::NotFused {
                name: p.name.into(),
                report: report.to_string(),
            });
        }
        log(&format!("{}: fusion scan {report}", p.name));
        if let Some(dir) = &cfg.emit_dir {
            fs::write(dir.join(format!("{}.c", p.name)), &src.text)?;
        }

        let mut variants = vec![(Variant::Generated, src.text.clone(), Vec::new())];
        if let Some(dir) = &baselines {
            let file = dir.join(format!("{}.c", p.name));
            if file.is_file() {
                let include = format!("-I{}", dir.display());
                variants.push((Variant::Baseline, fs::read_to_string(&file)?, vec![include]));
            } else {
                log(&format!("{}: no baseline kernel", p.name));
            }
        }

        let mut prepared = Vec::new();
        for (variant, kernel, extra) in variants {
            let c = work.path().join(format!("{}_{variant}.c", p.name));
            let exe = work.path().join(format!("{}_{variant}", p.name));
            fs::File::create(&c)?.write_all(driver_source(p, &kernel, ret).as_bytes())?;
            let extra: Vec<&str> = extra.iter().map(String::as_str).collect();
            cfg.cc.build_exe(&c, &exe, &extra)?;
            prepared.push(Prepared { variant, exe });
        }

        let n = p.base_size(cfg.scale);
        let mut sizes = CHECK_SIZES.to_vec();
        if cfg.validate_full {
            sizes.push(n);
        }
        for &m in &sizes {
            let want = evaluate(&d, &p.inputs(m)).map_err(pipeline_err(p))?;
            for pr in &prepared {
                let t = run_exe(&pr.exe, m, 0).map_err(|msg| BenchError::Run {
                    name: p.name.into(),
                    variant: pr.variant,
                    msg,
                })?;
                if !same(&t.result, &want) {
                    return Err(BenchError::Mismatch {
                        name: p.name.into(),
                        variant: pr.variant,
                        n: m,
                        got: t.result,
                        want: show(&want),
                    });
                }
            }
        }
        log(&format!(
            "{}: outputs match the interpreter at n = {sizes:?}",
            p.name
        ));

        for pr in &prepared {
            let t = run_exe(&pr.exe, n, cfg.iterations).map_err(|msg| BenchError::Run {
                name: p.name.into(),
                variant: pr.variant,
                msg,
            })?;
            let (mean_ms, stderr_ms) = mean_stderr(&t.times);
            let r = BenchResult {
                name: p.name.into(),
                variant: pr.variant,
                mean_ms,
                stderr_ms,
                iterations: t.times.len(),
                checksum: t.result,
            };
            log(&format!(
                "{}: {} {:.3} ms ± {:.3} over {} (n = {n})",
                r.name, r.variant, r.mean_ms, r.stderr_ms, r.iterations
            ));
            results.push(r);
        }
    }
    if let Some(path) = &cfg.csv {
        write_csv(path, &results)?;
    }
    Ok(results)
}

pub fn write_csv(path: &Path, results: &[BenchResult]) -> std::io::Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "name,variant,mean_ms,stderr_ms,iterations,checksum")?;
    for r in results {
        writeln!(
            f,
            "{},{},{:.6},{:.6},{},{}",
            r.name, r.variant, r.mean_ms, r.stderr_ms, r.iterations, r.checksum
        )?;
    }
    Ok(())
}
