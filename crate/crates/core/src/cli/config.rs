//! Experiment configuration from flags and key=value files.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Parser, ValueEnum};

use crate::error::{Error, Result};
use crate::flows::Scheme;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    SweepZero,
    SweepD,
    FlowZeroScaled,
    FlowZeroRenorm,
    FlowDPlain,
    FlowDRenorm,
    FourierCheck,
    GradCheck,
    Counterexample,
    Certify,
}

impl Experiment {
    pub fn id(&self) -> &'static str {
        match self {
            Experiment::SweepZero => "sweep-zero",
            Experiment::SweepD => "sweep-d",
            Experiment::FlowZeroScaled => "flow-zero-scaled",
            Experiment::FlowZeroRenorm => "flow-zero-renorm",
            Experiment::FlowDPlain => "flow-d-plain",
            Experiment::FlowDRenorm => "flow-d-renorm",
            Experiment::FourierCheck => "fourier-check",
            Experiment::GradCheck => "grad-check",
            Experiment::Counterexample => "counterexample",
            Experiment::Certify => "certify",
        }
    }

    fn default_alphas(&self, d: f64) -> Vec<f64> {
        match self {
            Experiment::SweepZero => vec![0.4, 0.2, 0.1, 0.05, 0.025],
            Experiment::SweepD => vec![d - 0.1, d - 0.05, d - 0.01],
            Experiment::FlowZeroScaled => vec![0.2, 0.1, 0.05],
            Experiment::FlowZeroRenorm => vec![0.4, 0.2, 0.1],
            Experiment::FlowDPlain => vec![d - 0.2, d - 0.05],
            Experiment::FlowDRenorm => vec![d - 0.2, d - 0.1, d - 0.05],
            Experiment::FourierCheck => vec![0.25, 0.5, 0.75],
            Experiment::GradCheck | Experiment::Certify => vec![0.5 * d],
            Experiment::Counterexample => vec![0.5, 0.1, 0.01, 0.001],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DomainShape {
    /// The unit box (0,1)^d.
    Box,
    /// The disk of radius 1/2 centered in the unit square (d = 2 only).
    Disk,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Indicator,
    /// exp(−|x − c|²/0.15²) around the box center.
    Gaussian,
    /// Two Gaussian bumps with the discrete mean removed.
    TwoBump,
    File(PathBuf),
}

impl FromStr for InitialData {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "indicator" => InitialData::Indicator,
            "gaussian" => InitialData::Gaussian,
            "two-bump" => InitialData::TwoBump,
            _ => match s.strip_prefix("file:") {
                Some(p) if !p.is_empty() => InitialData::File(PathBuf::from(p)),
                _ => {
                    return Err(format!(
                        "unknown initial data '{s}' (indicator, gaussian, two-bump, file:PATH)"
                    ))
                }
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub dim: usize,
    pub n: usize,
    pub shape: DomainShape,
    pub alphas: Vec<f64>,
    pub sign: f64,
    pub u0: InitialData,
    /// None selects min(1e-3, 0.1/λ) per flow.
    pub tau: Option<f64>,
    pub t_final: f64,
    pub record_every: usize,
    pub scheme: Scheme,
    /// Kernel table quadrature tolerance.
    pub tol: f64,
    /// Pass/fail tolerance for experiments that compare against a target.
    pub check_tol: Option<f64>,
    pub quad_n: usize,
    pub seed: u64,
    /// Powers k of n = 10^k scanned by the counterexample.
    pub exponents: Vec<f64>,
    pub out: Option<PathBuf>,
    pub plot: bool,
}

/// Flag interface; every field is optional so file values can fill gaps.
#[derive(Debug, Parser)]
#[command(
    name = "riesz-flow",
    version,
    about = "Riesz interaction energies, their limits as alpha -> 0 and alpha -> d, and their gradient flows",
    after_help = "CSV columns: quantity,alpha,param,value,limit,abs_error. The header row and \
metadata lines start with '#'. Exit codes: 0 pass, 1 usage, 2 numeric failure, 3 tolerance failure."
)]
struct Flags {
    /// Experiment to run.
    #[arg(value_enum)]
    experiment: Experiment,
    /// key=value configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Spatial dimension (1 or 2).
    #[arg(long = "d")]
    dim: Option<usize>,
    /// Cells per axis.
    #[arg(long)]
    n: Option<usize>,
    /// Shape of Ω.
    #[arg(long, value_enum)]
    domain: Option<DomainShape>,
    /// Comma-separated alpha values.
    #[arg(long)]
    alphas: Option<String>,
    /// +1 or -1.
    #[arg(long, allow_hyphen_values = true)]
    sign: Option<f64>,
    /// indicator, gaussian, two-bump or file:PATH.
    #[arg(long)]
    u0: Option<String>,
    /// Time step; chosen from the certified λ when absent.
    #[arg(long)]
    tau: Option<f64>,
    /// Final time.
    #[arg(long = "T")]
    t_final: Option<f64>,
    /// Record every k-th step of a flow.
    #[arg(long = "record-every")]
    record_every: Option<usize>,
    /// mm (minimizing movements) or explicit.
    #[arg(long)]
    scheme: Option<String>,
    /// Kernel table quadrature tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Tolerance for the experiment's pass/fail check.
    #[arg(long = "check-tol")]
    check_tol: Option<f64>,
    /// Base node count of the exp-sinh rule in fourier-check.
    #[arg(long = "quad-n")]
    quad_n: Option<usize>,
    /// Seed for random test fields.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated k for the counterexample scan over n = 10^k.
    #[arg(long)]
    exponents: Option<String>,
    /// CSV output path; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a gnuplot script next to the CSV.
    #[arg(long)]
    plot: bool,
}

const FILE_KEYS: &[&str] = &[
    "d",
    "n",
    "domain",
    "alphas",
    "sign",
    "u0",
    "tau",
    "T",
    "record-every",
    "scheme",
    "tol",
    "check-tol",
    "quad-n",
    "seed",
    "exponents",
    "out",
    "plot",
];

/// Reads `key=value` lines; `#` starts a comment and blank lines are skipped.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, (usize, String)>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |message: String| Error::Parse { line: line_no, message };
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("expected key=value, got '{line}'")))?;
        let (k, v) = (k.trim(), v.trim());
        if !FILE_KEYS.contains(&k) {
            return Err(bad(format!("unknown key '{k}'")));
        }
        if v.is_empty() {
            return Err(bad(format!("empty value for '{k}'")));
        }
        if map.insert(k.to_string(), (line_no, v.to_string())).is_some() {
            return Err(bad(format!("key '{k}' given twice")));
        }
    }
    Ok(map)
}

fn parse_list(s: &str, what: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("bad {what} entry '{t}'"))
        })
        .collect()
}

fn parse_scheme(s: &str) -> std::result::Result<Scheme, String> {
    match s {
        "mm" | "minimizing-movements" => Ok(Scheme::MinimizingMovements),
        "explicit" | "explicit-euler" => Ok(Scheme::ExplicitEuler),
        _ => Err(format!("unknown scheme '{s}' (mm, explicit)")),
    }
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("expected a boolean, got '{s}'")),
    }
}

/// Help or version text when the arguments ask for it.
pub fn help_request(args: &[String]) -> Option<String> {
    let argv = std::iter::once("riesz-flow".to_string()).chain(args.iter().cloned());
    match Flags::try_parse_from(argv) {
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => Some(e.to_string()),
        _ => None,
    }
}

/// Builds a configuration from command-line arguments (without the program
/// name) and an optional key=value file. Flags take precedence over the file;
/// a `--config` flag is used when `file` is `None`.
pub fn parse_config(args: &[String], file: Option<&Path>) -> Result<ExperimentConfig> {
    let argv = std::iter::once("riesz-flow".to_string()).chain(args.iter().cloned());
    let flags = Flags::try_parse_from(argv).map_err(|e| Error::Usage(e.to_string()))?;
    let path = file.map(Path::to_path_buf).or_else(|| flags.config.clone());
    let fmap = match &path {
        Some(p) => parse_config_text(&std::fs::read_to_string(p)?)?,
        None => BTreeMap::new(),
    };

    // file values are parsed with their line numbers attached
    fn from_file<T>(
        fmap: &BTreeMap<String, (usize, String)>,
        key: &str,
        parse: impl Fn(&str) -> std::result::Result<T, String>,
    ) -> Result<Option<T>> {
        match fmap.get(key) {
            Some((line, v)) => parse(v)
                .map(Some)
                .map_err(|message| Error::Parse { line: *line, message }),
            None => Ok(None),
        }
    }
    fn usage<T>(r: std::result::Result<T, String>) -> Result<T> {
        r.map_err(Error::Usage)
    }
    fn num<T: FromStr>(s: &str) -> std::result::Result<T, String> {
        s.parse().map_err(|_| format!("cannot parse '{s}'"))
    }

    let dim = match flags.dim {
        Some(d) => d,
        None => from_file(&fmap, "d", num::<usize>)?.unwrap_or(1),
    };
    if !(1..=2).contains(&dim) {
        return Err(Error::Usage(format!("d must be 1 or 2, got {dim}")));
    }
    let df = dim as f64;
    let n = match flags.n {
        Some(n) => n,
        None => from_file(&fmap, "n", num::<usize>)?.unwrap_or(if dim == 1 { 1024 } else { 128 }),
    };
    let shape = match flags.domain {
        Some(s) => s,
        None => from_file(&fmap, "domain", |s| DomainShape::from_str(s, true))?.unwrap_or(DomainShape::Box),
    };
    let alphas = match &flags.alphas {
        Some(s) => usage(parse_list(s, "alpha"))?,
        None => from_file(&fmap, "alphas", |s| parse_list(s, "alpha"))?
            .unwrap_or_else(|| flags.experiment.default_alphas(df)),
    };
    let sign = match flags.sign {
        Some(s) => s,
        None => from_file(&fmap, "sign", num::<f64>)?.unwrap_or(1.0),
    };
    let u0 = match &flags.u0 {
        Some(s) => usage(s.parse())?,
        None => from_file(&fmap, "u0", |s| s.parse())?.unwrap_or(match flags.experiment {
            Experiment::FlowZeroRenorm => InitialData::Gaussian,
            _ => InitialData::Indicator,
        }),
    };
    let tau = match flags.tau {
        Some(t) => Some(t),
        None => from_file(&fmap, "tau", num::<f64>)?,
    };
    let t_final = match flags.t_final {
        Some(t) => t,
        None => from_file(&fmap, "T", num::<f64>)?.unwrap_or(0.5),
    };
    let record_every = match flags.record_every {
        Some(r) => r,
        None => from_file(&fmap, "record-every", num::<usize>)?.unwrap_or(10),
    };
    let scheme = match &flags.scheme {
        Some(s) => usage(parse_scheme(s))?,
        None => from_file(&fmap, "scheme", parse_scheme)?.unwrap_or(Scheme::MinimizingMovements),
    };
    let tol = match flags.tol {
        Some(t) => t,
        None => from_file(&fmap, "tol", num::<f64>)?.unwrap_or(crate::kernels::DEFAULT_TABLE_TOL),
    };
    let check_tol = match flags.check_tol {
        Some(t) => Some(t),
        None => from_file(&fmap, "check-tol", num::<f64>)?,
    };
    let quad_n = match flags.quad_n {
        Some(q) => q,
        None => from_file(&fmap, "quad-n", num::<usize>)?.unwrap_or(4096),
    };
    let seed = match flags.seed {
        Some(s) => s,
        None => from_file(&fmap, "seed", num::<u64>)?.unwrap_or(7),
    };
    let exponents = match &flags.exponents {
        Some(s) => usage(parse_list(s, "exponent"))?,
        None => from_file(&fmap, "exponents", |s| parse_list(s, "exponent"))?
            .unwrap_or_else(|| vec![2.0, 4.0, 8.0, 16.0, 32.0, 64.0]),
    };
    let out = match &flags.out {
        Some(p) => Some(p.clone()),
        None => from_file(&fmap, "out", |s| Ok(PathBuf::from(s)))?,
    };
    let plot = flags.plot || from_file(&fmap, "plot", parse_bool)?.unwrap_or(false);

    let config = ExperimentConfig {
        experiment: flags.experiment,
        dim,
        n,
        shape,
        alphas,
        sign,
        u0,
        tau,
        t_final,
        record_every,
        scheme,
        tol,
        check_tol,
        quad_n,
        seed,
        exponents,
        out,
        plot,
    };
    config.validate()?;
    Ok(config)
}

impl ExperimentConfig {
    /// Default configuration for an experiment in dimension `dim`.
    pub fn defaults(experiment: Experiment, dim: usize) -> Result<Self> {
        let args = vec![experiment.id().to_string(), "--d".into(), dim.to_string()];
        parse_config(&args, None)
    }

    /// Checks ranges; violations are usage errors.
    pub fn validate(&self) -> Result<()> {
        let u = |m: String| Err(Error::Usage(m));
        let d = self.dim as f64;
        if self.n < 2 {
            return u("n must be at least 2".into());
        }
        if self.shape == DomainShape::Disk && self.dim != 2 {
            return u("the disk domain needs d = 2".into());
        }
        if self.sign != 1.0 && self.sign != -1.0 {
            return u(format!("sign must be 1 or -1, got {}", self.sign));
        }
        if self.alphas.is_empty() {
            return u("at least one alpha is required".into());
        }
        let (lo, hi) = match self.experiment {
            Experiment::FourierCheck => {
                if self.dim != 1 {
                    return u("fourier-check runs in d = 1".into());
                }
                (0.0, 1.0)
            }
            _ => (crate::kernels::ALPHA_MARGIN, d - crate::kernels::ALPHA_MARGIN),
        };
        for &a in &self.alphas {
            let inside = if self.experiment == Experiment::FourierCheck {
                a > lo && a < hi
            } else {
                a >= lo && a <= hi
            };
            if !inside {
                return u(format!(
                    "alpha = {a} is outside the admissible range for {} in d = {}",
                    self.experiment, self.dim
                ));
            }
        }
        if let Some(t) = self.tau {
            if !(t > 0.0 && t.is_finite()) {
                return u("tau must be positive".into());
            }
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return u("T must be positive".into());
        }
        if self.record_every == 0 {
            return u("record-every must be at least 1".into());
        }
        if !(self.tol > 0.0) {
            return u("tol must be positive".into());
        }
        if self.quad_n < 2 {
            return u("quad-n must be at least 2".into());
        }
        if self.exponents.iter().any(|&k| !(k > 0.0 && k <= 300.0)) {
            return u("exponents must lie in (0, 300]".into());
        }
        if let InitialData::File(p) = &self.u0 {
            if !p.is_file() {
                return u(format!("initial data file {} is not readable", p.display()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn args(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn flags_only() {
        let c = parse_config(&args(&["sweep-zero", "--n", "1024", "--alphas", "0.4,0.2,0.1"]), None).unwrap();
        assert_eq!(c.alphas, vec![0.4, 0.2, 0.1]);
        assert_eq!(c.n, 1024);
        assert_eq!(c.experiment, Experiment::SweepZero);
    }

    #[test]
    fn flags_override_file() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# flow settings\ntau=1e-3\nT = 0.25").unwrap();
        let c = parse_config(&args(&["flow-zero-scaled", "--tau", "1e-4"]), Some(f.path())).unwrap();
        assert_eq!(c.tau, Some(1e-4));
        assert_eq!(c.t_final, 0.25);
    }

    #[test]
    fn alpha_beyond_dimension_is_usage_error() {
        let e = parse_config(&args(&["flow-zero-renorm", "--alphas", "1.5"]), None).unwrap_err();
        assert!(matches!(e, Error::Usage(_)));
    }

    #[test]
    fn repeated_flag_is_usage_error() {
        let e = parse_config(&args(&["sweep-zero", "--n", "8", "--n", "16"]), None).unwrap_err();
        assert!(matches!(e, Error::Usage(_)));
    }

    #[test]
    fn file_errors_carry_line_numbers() {
        let e = parse_config_text("n=8\n\nbogus line\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }));
        let e = parse_config_text("n=8\nwidth=3\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "n=8\ntau=fast").unwrap();
        let e = parse_config(&args(&["sweep-zero"]), Some(f.path())).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn defaults_depend_on_dimension() {
        let c = ExperimentConfig::defaults(Experiment::SweepD, 2).unwrap();
        assert_eq!(c.n, 128);
        assert!((c.alphas[2] - 1.99).abs() < 1e-12);
        assert_eq!(
            ExperimentConfig::defaults(Experiment::FlowZeroRenorm, 1).unwrap().u0,
            InitialData::Gaussian
        );
    }
}
