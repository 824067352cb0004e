//! Invoking the system C compiler.

use std::path::{Path, PathBuf};
use std::process::Command;

use thiserror::Error;

/// Flags always passed: the generated code relies on wrapping `int`
/// arithmetic, matching the interpreter.
pub const REQUIRED_FLAGS: &[&str] = &["-std=c99", "-fwrapv"];

pub const DEFAULT_CC: &str = "cc";
pub const DEFAULT_CFLAGS: &str = "-O3";

#[derive(Debug, Error)]
pub enum CcError {
    #[error("C compiler `{0}` not found or not runnable")]
    NotFound(String),
    #[error("`{cmd}` failed:\n{stderr}")]
    Failed { cmd: String, stderr: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CcConfig {
    pub cc: String,
    pub cflags: Vec<String>,
}

impl Default for CcConfig {
    fn default() -> Self {
        CcConfig::new(DEFAULT_CC, DEFAULT_CFLAGS)
    }
}

impl CcConfig {
    pub fn new(cc: &str, cflags: &str) -> Self {
        CcConfig {
            cc: cc.to_string(),
            cflags: cflags.split_whitespace().map(String::from).collect(),
        }
    }

    /// `CC` and `CFLAGS` from the environment take precedence over the
    /// given values, which take precedence over the defaults.
    pub fn resolve(cc: Option<&str>, cflags: Option<&str>) -> Self {
        let env = |k: &str| std::env::var(k).ok().filter(|v| !v.trim().is_empty());
        let cc = env("CC").or(cc.map(String::from)).unwrap_or(DEFAULT_CC.into());
        let cflags = env("CFLAGS")
            .or(cflags.map(String::from))
            .unwrap_or(DEFAULT_CFLAGS.into());
        CcConfig::new(&cc, &cflags)
    }

    /// Checks that the compiler runs.
    pub fn probe(&self) -> Result<(), CcError> {
        match Command::new(&self.cc).arg("--version").output() {
            Ok(o) if o.status.success() => Ok(()),
            _ => Err(CcError::NotFound(self.cc.clone())),
        }
    }

    fn run(&self, args: Vec<String>) -> Result<(), CcError> {
        let out = Command::new(&self.cc)
            .args(&args)
            .output()
            .map_err(|_| CcError::NotFound(self.cc.clone()))?;
        if out.status.success() {
            Ok(())
        } else {
            Err(CcError::Failed {
                cmd: format!("{} {}", self.cc, args.join(" ")),
                stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
            })
        }
    }

    /// Builds an executable from one C file.
    pub fn build_exe(&self, src: &Path, exe: &Path, extra: &[&str]) -> Result<PathBuf, CcError> {
        let mut args: Vec<String> = REQUIRED_FLAGS.iter().map(|s| s.to_string()).collect();
        args.extend(self.cflags.iter().cloned());
        args.extend(extra.iter().map(|s| s.to_string()));
        args.push("-o".into());
        args.push(exe.display().to_string());
        args.push(src.display().to_string());
        self.run(args)?;
        Ok(exe.to_path_buf())
    }

    /// Compiles one C file to an object, to check that it is accepted.
    pub fn syntax_check(&self, src: &Path, extra: &[&str]) -> Result<(), CcError> {
        let mut args: Vec<String> = REQUIRED_FLAGS.iter().map(|s| s.to_string()).collect();
        args.extend(self.cflags.iter().cloned());
        args.extend(extra.iter().map(|s| s.to_string()));
        args.push("-fsyntax-only".into());
        args.push(src.display().to_string());
        self.run(args)
    }
}
