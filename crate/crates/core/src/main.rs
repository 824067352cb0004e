use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fusilli::backend::SemType;
use fusilli::bench::{run_bench, BenchConfig};
use fusilli::cc::CcConfig;
use fusilli::pipeline::{check, compile_to_c, from_json, parse_pipeline, Diagnostic, PipelineDesc};

#[derive(Parser)]
#[command(
    name = "fusilli",
    version,
    about = "Compile stream pipelines to fused C loops"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compile a pipeline description to one C file.
    Compile {
        file: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Parse and type-check a pipeline description.
    Check { file: PathBuf },
    /// Compile, validate and time the benchmark suite.
    Bench {
        /// `all` or one benchmark name.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Multiplier on the input sizes.
        #[arg(long, default_value_t = 0.1)]
        scale: f64,
        /// C compiler; `CC` in the environment takes precedence.
        #[arg(long)]
        cc: Option<String>,
        /// Compiler flags; `CFLAGS` in the environment takes precedence.
        #[arg(long, allow_hyphen_values = true)]
        cflags: Option<String>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        iterations: usize,
        /// Keep the generated kernels here.
        #[arg(long)]
        emit_dir: Option<PathBuf>,
        /// Directory of hand-written kernels, `<name>.c` each.
        #[arg(long)]
        baseline_dir: Option<PathBuf>,
        /// Check against the interpreter only at small sizes, not the timed one.
        #[arg(long)]
        quick_validate: bool,
    },
}

fn load(file: &Path) -> Result<PipelineDesc, String> {
    let text = fs::read_to_string(file).map_err(|e| format!("{}: {e}", file.display()))?;
    let parsed = if file.extension().is_some_and(|x| x == "json") {
        from_json(&text)
    } else {
        parse_pipeline(&text)
    };
    let located = |d: Diagnostic| format!("{}:{d}", file.display());
    let desc = parsed.map_err(located)?;
    check(&desc).map_err(located)?;
    Ok(desc)
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.cmd {
        Cmd::Check { file } => {
            let d = load(&file)?;
            let c = check(&d).map_err(|e| e.to_string())?;
            let params: Vec<String> = d
                .params
                .iter()
                .map(|p| format!("{}: {}", p.name, p.ty.keyword()))
                .collect();
            let ret = match c.ret {
                SemType::Float => "double".to_string(),
                t => t.to_string(),
            };
            println!("{}({}) -> {ret}: ok", d.name, params.join(", "));
        }
        Cmd::Compile { file, out } => {
            let d = load(&file)?;
            let src = compile_to_c(&d).map_err(|e| format!("{}: {e}", file.display()))?;
            fs::write(&out, &src.text).map_err(|e| format!("{}: {e}", out.display()))?;
        }
        Cmd::Bench {
            suite,
            scale,
            cc,
            cflags,
            csv,
            iterations,
            emit_dir,
            baseline_dir,
            quick_validate,
        } => {
            let cfg = BenchConfig {
                suite: Some(suite),
                scale,
                cc: CcConfig::resolve(cc.as_deref(), cflags.as_deref()),
                csv,
                emit_dir,
                iterations,
                baseline_dir,
                validate_full: !quick_validate,
            };
            eprintln!("compiler: {} {}", cfg.cc.cc, cfg.cc.cflags.join(" "));
            let results = run_bench(&cfg, &mut |line| eprintln!("{line}")).map_err(|e| e.to_string())?;
            println!(
                "{:<22}{:<11}{:>12}{:>11}{:>6}  checksum",
                "name", "variant", "mean_ms", "stderr", "iter"
            );
            for r in &results {
                println!(
                    "{:<22}{:<11}{:>12.3}{:>11.3}{:>6}  {}",
                    r.name,
                    r.variant.to_string(),
                    r.mean_ms,
                    r.stderr_ms,
                    r.iterations,
                    r.checksum
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
