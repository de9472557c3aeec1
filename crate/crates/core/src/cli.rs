//! Command-line front end. Exit codes: 0 success, 1 verification failure,
//! 2 usage or input error, 3 numerical-domain error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::asymptotics::metaplectic_asymptotic;
use crate::config::{RunConfig, CONFIG_ENV};
use crate::config_ops::{bochner_apply, qfio_apply, BochnerForm, QfioMethod};
use crate::error::{Error, Result};
use crate::feichtinger::{s0_norm, s0_norm_window, S0Report, Window};
use crate::grid::{coherent_state, gaussian, hermite, Grid, SampledFunction};
use crate::indices::{conley_zehnder, cz_parity_consistent, inertia, maslov_branch, signature, ConleyZehnderIndex};
use crate::io::{self, WordFactorJson};
use crate::linalg::{self, Mat};
use crate::phase_space::{cross_wigner, cross_wigner_on, metaplectic_phase_apply, moyal_inner, PhaseForm, PhaseFunction, PhaseGrid};
use crate::symplectic::{
    cayley, cayley_inverse, free_from_generating, generating_from_free, CayleyMatrix, GeneratingFunction,
    GeneratingJson, MatrixJson, SymplecticMatrix,
};
use crate::verify::{self, unit_bump, Suite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "metaplectic", version, about = "Metaplectic operators on configuration and phase space")]
pub struct Cli {
    /// Flat key = value configuration file.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Configuration override, `key=value`; repeatable, applied last.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub hbar: Option<f64>,
    /// Samples per axis.
    #[arg(long, global = true)]
    pub points: Option<usize>,
    #[arg(long, global = true)]
    pub half_width: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SymplecticOp {
    /// (P, L, Q) JSON → S_W.
    Free,
    /// Free S → (P, L, Q).
    Generating,
    Cayley,
    CayleyInverse,
    DetSMinusI,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ApplyMethod {
    Factored,
    Quadrature,
    Bochner,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BochnerFormArg {
    S1,
    S2,
    S3,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PhaseFormArg {
    S1,
    Alfa1,
    Alfa2,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Lattice {
    /// Momentum step πħ/(2X).
    Dual,
    /// Momentum step equal to the position step.
    Square,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generating functions, Cayley transforms and det(S − I).
    Symplectic {
        #[arg(long, value_enum)]
        op: SymplecticOp,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Maslov and Conley–Zehnder indices of a generating function.
    Indices {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        branch: i64,
    },
    /// Applies a word of quadratic Fourier integral operators.
    Apply {
        #[arg(long)]
        word: PathBuf,
        #[arg(long, value_enum, default_value = "factored")]
        method: ApplyMethod,
        #[arg(long, value_enum, default_value = "s1")]
        form: BochnerFormArg,
        /// Input samples; defaults to the Hermite function of order `--hermite`.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        hermite: usize,
        #[arg(long = "out")]
        output: PathBuf,
    },
    /// Cross-Wigner transform W(f, g); g defaults to the standard Gaussian.
    Wigner {
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        g: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "dual")]
        lattice: Lattice,
        #[arg(long = "out")]
        output: PathBuf,
    },
    /// Phase-space metaplectic operator S̃ on a sampled phase-space function.
    PhaseApply {
        #[arg(long)]
        input: PathBuf,
        /// Symplectic matrix JSON.
        #[arg(long)]
        matrix: PathBuf,
        /// Conley–Zehnder index.
        #[arg(long)]
        nu: i64,
        #[arg(long, value_enum, default_value = "s1")]
        form: PhaseFormArg,
        #[arg(long = "out")]
        output: PathBuf,
    },
    /// Moyal inner product (F|G).
    Moyal {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Windowed L¹ Wigner norm.
    S0 {
        #[arg(long)]
        psi: PathBuf,
        /// `hermite:k`, `dilated:s` or a sampled-function file.
        #[arg(long, default_value = "hermite:0")]
        window: String,
    },
    /// Leading stationary-phase term vs. quadrature for a rotation, as CSV.
    Asymptotic {
        #[arg(long)]
        alpha: f64,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.05,0.025,0.0125")]
        hbar_list: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,0")]
        z: Vec<f64>,
        #[arg(long = "out")]
        output: Option<PathBuf>,
    },
    /// Worked rotation example: data files, summary and a reproduction script.
    DemoRotation {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Runs an invariant suite and prints a JSON report.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long = "out")]
        output: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::Io(_) => EXIT_USAGE,
        _ => EXIT_DOMAIN,
    }
}

pub fn main() -> i32 {
    run_with(std::env::args_os())
}

pub fn run_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let mut stdout = std::io::stdout().lock();
    match execute(&cli.command, &cfg, &mut stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = cli.hbar {
        cfg.set("hbar", &v.to_string())?;
    }
    if let Some(v) = cli.points {
        cfg.points = v;
    }
    if let Some(v) = cli.half_width {
        cfg.set("X", &v.to_string())?;
    }
    for kv in &cli.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("--set expects key=value, got '{kv}'")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit<T: Serialize>(out: &mut dyn Write, value: &T, path: Option<&Path>) -> Result<()> {
    let text = io::to_json_pretty(value)?;
    match path {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => writeln!(out, "{text}")?,
    }
    Ok(())
}

fn square_n(m: &Mat) -> Result<usize> {
    if m.nrows() % 2 != 0 {
        return Err(Error::OddDimension(m.nrows()));
    }
    Ok(m.nrows() / 2)
}

fn load_symplectic(path: &Path, cfg: &RunConfig) -> Result<SymplecticMatrix> {
    let m = io::load_json::<MatrixJson>(path)?.to_matrix()?;
    SymplecticMatrix::new(m, &cfg.tolerances)
}

fn load_generating(path: &Path, cfg: &RunConfig) -> Result<GeneratingFunction> {
    io::load_json::<GeneratingJson>(path)?.to_generating(&cfg.tolerances)
}

#[derive(Serialize)]
struct IndicesOut {
    m: u8,
    nu: u8,
    inertia_wxx: usize,
    signature_wxx: i64,
    det_l: f64,
    parity_consistent: bool,
}

#[derive(Serialize)]
struct ApplyOut {
    method: &'static str,
    norm_in: f64,
    norm_out: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    truncation_estimate: Option<f64>,
}

#[derive(Serialize)]
struct ComplexOut {
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct DemoSummary {
    alpha: f64,
    cayley_diagonal: f64,
    det_s_minus_i: f64,
    maslov_index: u8,
    conley_zehnder_index: u8,
    covariance_error: f64,
}

fn phase_form(f: PhaseFormArg) -> PhaseForm {
    match f {
        PhaseFormArg::S1 => PhaseForm::S1,
        PhaseFormArg::Alfa1 => PhaseForm::Alfa1,
        PhaseFormArg::Alfa2 => PhaseForm::Alfa2,
    }
}

fn bochner_form(f: BochnerFormArg) -> BochnerForm {
    match f {
        BochnerFormArg::S1 => BochnerForm::S1,
        BochnerFormArg::S2 => BochnerForm::S2,
        BochnerFormArg::S3 => BochnerForm::S3,
    }
}

fn parse_window(spec: &str, psi: &SampledFunction) -> Result<S0Report> {
    if let Some(k) = spec.strip_prefix("hermite:") {
        let k = k.parse().map_err(|e| Error::Parse(format!("window '{spec}': {e}")))?;
        return s0_norm_window(psi, Window::Hermite(k));
    }
    if let Some(s) = spec.strip_prefix("dilated:") {
        let s = s.parse().map_err(|e| Error::Parse(format!("window '{spec}': {e}")))?;
        return s0_norm_window(psi, Window::DilatedGaussian(s));
    }
    let phi = io::load_sampled(Path::new(spec))?;
    let mut report = s0_norm(psi, &phi)?;
    report.window_id = format!("file:{spec}");
    Ok(report)
}

/// Runs one subcommand; returns the exit code on success.
pub fn execute(cmd: &Command, cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let tol = &cfg.tolerances;
    match cmd {
        Command::Symplectic { op, input, output } => {
            let result = match op {
                SymplecticOp::Free => {
                    let w = load_generating(input, cfg)?;
                    let s = free_from_generating(&w);
                    serde_json::to_value(MatrixJson::from_matrix(s.n(), s.matrix()))
                }
                SymplecticOp::Generating => {
                    let w = generating_from_free(&load_symplectic(input, cfg)?, tol)?;
                    serde_json::to_value(GeneratingJson::from_generating(&w))
                }
                SymplecticOp::Cayley => {
                    let s = load_symplectic(input, cfg)?;
                    let m = cayley(&s, tol)?;
                    serde_json::to_value(MatrixJson::from_matrix(s.n(), m.matrix()))
                }
                SymplecticOp::CayleyInverse => {
                    let m = io::load_json::<MatrixJson>(input)?.to_matrix()?;
                    let n = square_n(&m)?;
                    let s = cayley_inverse(&CayleyMatrix::new(m, tol)?, tol)?;
                    serde_json::to_value(MatrixJson::from_matrix(n, s.matrix()))
                }
                SymplecticOp::DetSMinusI => {
                    let s = load_symplectic(input, cfg)?;
                    Ok(serde_json::json!({ "det_s_minus_i": s.det_minus_identity() }))
                }
            }
            .map_err(|e| Error::Parse(e.to_string()))?;
            emit(out, &result, output.as_deref())?;
        }
        Command::Indices { input, branch } => {
            let w = load_generating(input, cfg)?;
            let m = maslov_branch(w.l(), *branch, tol)?;
            let nu = conley_zehnder(&w, m, tol)?;
            let wxx = w.w_xx();
            let report = IndicesOut {
                m: m.value(),
                nu: nu.value(),
                inertia_wxx: inertia(&wxx, tol)?,
                signature_wxx: signature(&wxx, tol)?,
                det_l: w.det_l(),
                parity_consistent: cz_parity_consistent(&w, nu),
            };
            emit(out, &report, None)?;
        }
        Command::Apply {
            word,
            method,
            form,
            input,
            hermite: order,
            output,
        } => {
            let factors: Vec<WordFactorJson> = io::load_json(word)?;
            let word = io::word_from_json(&factors, tol)?;
            let f = match input {
                Some(p) => io::load_sampled(p)?,
                None => {
                    let grid = Grid::new(word.n(), cfg.half_width, cfg.points)?;
                    hermite(grid, cfg.hbar, &vec![*order; word.n()])?
                }
            };
            let (g, truncation_estimate, name) = match method {
                ApplyMethod::Factored => (word.apply(&f, QfioMethod::Factored)?, None, "factored"),
                ApplyMethod::Quadrature => (word.apply(&f, QfioMethod::Quadrature)?, None, "quadrature"),
                ApplyMethod::Bochner => {
                    let [(w, m)] = word.factors() else {
                        return Err(Error::Unsupported("the Bochner method takes a single-factor word".into()));
                    };
                    let nu = conley_zehnder(w, *m, tol)?;
                    let r = bochner_apply(&free_from_generating(w), nu, &f, bochner_form(*form), &cfg.truncation, tol)?;
                    (r.function, Some(r.truncation_estimate), "bochner")
                }
            };
            io::save_sampled(output, &g)?;
            emit(
                out,
                &ApplyOut {
                    method: name,
                    norm_in: f.norm(),
                    norm_out: g.norm(),
                    truncation_estimate,
                },
                None,
            )?;
        }
        Command::Wigner { f, g, lattice, output } => {
            let f = io::load_sampled(f)?;
            let g = match g {
                Some(p) => io::load_sampled(p)?,
                None => gaussian(*f.grid(), f.hbar())?,
            };
            let w = match lattice {
                Lattice::Dual => cross_wigner(&f, &g)?,
                Lattice::Square => cross_wigner_on(&f, &g, &PhaseGrid::square(f.grid()))?,
            };
            io::save_phase(output, &w)?;
        }
        Command::PhaseApply {
            input,
            matrix,
            nu,
            form,
            output,
        } => {
            let big_f = io::load_phase(input)?;
            let s = load_symplectic(matrix, cfg)?;
            let g = metaplectic_phase_apply(
                &s,
                ConleyZehnderIndex::new(*nu),
                &big_f,
                phase_form(*form),
                &cfg.truncation,
                tol,
            )?;
            io::save_phase(output, &g)?;
            emit(out, &serde_json::json!({ "norm_in": big_f.norm(), "norm_out": g.norm() }), None)?;
        }
        Command::Moyal { a, b } => {
            let v = moyal_inner(&io::load_phase(a)?, &io::load_phase(b)?)?;
            emit(out, &ComplexOut { re: v.re, im: v.im }, None)?;
        }
        Command::S0 { psi, window } => {
            let psi = io::load_sampled(psi)?;
            emit(out, &parse_window(window, &psi)?, None)?;
        }
        Command::Asymptotic {
            alpha,
            hbar_list,
            z,
            output,
        } => {
            let w = GeneratingFunction::rotation(*alpha)?;
            let m = crate::indices::MaslovIndex::principal(w.det_l());
            let nu = conley_zehnder(&w, m, tol)?;
            let s = free_from_generating(&w);
            let mut csv = String::from("hbar,abs_leading,abs_quadrature,relative_error\n");
            for &h in hbar_list {
                if !(h > 0.0) {
                    return Err(Error::Parse(format!("hbar {h} must be positive")));
                }
                let r = metaplectic_asymptotic(&s, nu, &unit_bump, 8.5, z, h, &cfg.truncation, tol)?;
                csv.push_str(&format!("{},{},{},{}\n", h, r.leading.norm(), r.quadrature.norm(), r.relative_error));
            }
            match output {
                Some(p) => std::fs::write(p, csv)?,
                None => out.write_all(csv.as_bytes())?,
            }
        }
        Command::DemoRotation { alpha, out_dir } => {
            let summary = demo_rotation(*alpha, cfg, out_dir)?;
            emit(out, &summary, None)?;
        }
        Command::Verify { suite, output } => {
            let report = verify::run(cfg, Suite::parse(suite)?);
            emit(out, &report, output.as_deref())?;
            if !report.passed {
                for f in report.failures() {
                    eprintln!("FAILED {} (measured {:?}, tolerance {:e})", f.name, f.measured, f.tolerance);
                }
                return Ok(EXIT_VERIFY);
            }
        }
    }
    Ok(EXIT_OK)
}

fn demo_rotation(alpha: f64, cfg: &RunConfig, dir: &Path) -> Result<DemoSummary> {
    let tol = &cfg.tolerances;
    let w = GeneratingFunction::rotation(alpha)?;
    let m = crate::indices::MaslovIndex::principal(w.det_l());
    let nu = conley_zehnder(&w, m, tol)?;
    let s = free_from_generating(&w);
    let cm = cayley(&s, tol)?;

    let grid = Grid::new(1, cfg.half_width, cfg.points)?;
    let f = coherent_state(grid, cfg.hbar, &[1.5, 0.0])?;
    let g = qfio_apply(&w, m, &f, QfioMethod::Factored)?;
    let pg = PhaseGrid::square(&grid);
    let wf = cross_wigner_on(&f, &f, &pg)?;
    let wg = cross_wigner_on(&g, &g, &pg)?;
    let inv = s.inverse();
    let rotated = PhaseFunction::from_fn(pg, cfg.hbar, |z| wf.interpolate(&linalg::mat_vec(inv.matrix(), z)))?;
    let covariance_error = wg.relative_distance(&rotated)?;

    std::fs::create_dir_all(dir)?;
    io::save_sampled(&dir.join("input.csv"), &f)?;
    io::save_sampled(&dir.join("output.csv"), &g)?;
    io::save_phase(&dir.join("wigner_input.csv"), &wf)?;
    io::save_phase(&dir.join("wigner_output.csv"), &wg)?;
    let summary = DemoSummary {
        alpha,
        cayley_diagonal: cm.matrix()[(0, 0)],
        det_s_minus_i: s.det_minus_identity(),
        maslov_index: m.value(),
        conley_zehnder_index: nu.value(),
        covariance_error,
    };
    std::fs::write(dir.join("summary.json"), io::to_json_pretty(&summary)? + "\n")?;
    let script = format!(
        "#!/bin/sh\n# Regenerates this directory.\nset -e\nmetaplectic --points {} --half-width {} --hbar {} demo-rotation --alpha {} --out-dir \"$(dirname \"$0\")\"\n",
        cfg.points, cfg.half_width, cfg.hbar, alpha
    );
    std::fs::write(dir.join("reproduce.sh"), script)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_config() {
        let cli = Cli::try_parse_from(["metaplectic", "--seed", "9", "--set", "N=256", "verify", "--suite", "core"]).unwrap();
        let cfg = load_config(&cli).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.points, 256);
    }

    #[test]
    fn domain_and_usage_errors_map_to_codes() {
        assert_eq!(exit_code(&Error::Parse("x".into())), EXIT_USAGE);
        assert_eq!(exit_code(&Error::SingularAngle(0.0)), EXIT_DOMAIN);
        assert_eq!(run_with(["metaplectic", "frobnicate"]), EXIT_USAGE);
    }
}
