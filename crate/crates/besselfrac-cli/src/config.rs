//! Flags, the optional key=value file and their merge into a [`RunConfig`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use besselfrac::analysis::IntervalFamily;
use besselfrac::grid::{test_function, Grid, GridFunction, OperatorParams, RealFn, Sampled, TestFunction, TestKind};
use besselfrac::operators::RouteTag;
use besselfrac::quad::QuadratureSpec;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "besselfrac",
    version,
    about = "Fractional powers of the Bessel operator on the half-line"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate Δ_λ^σ f on a grid along one route or all admissible routes.
    Apply(CommonArgs),
    /// Run an invariant suite and write a JSON report.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Tabulate a kernel or transform to CSV.
    Dump {
        #[arg(value_enum)]
        kind: DumpKind,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Poisson–Hölder ratio sup_x |t^β ∂_t^β P_t f(x)|/t^α per t.
    Holder(CommonArgs),
    /// Carleson-box integrals over a dyadic interval family.
    Carleson(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Kernels,
    Routes,
    Semigroup,
    Limits,
    Holder,
    Carleson,
    Extension,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DumpKind {
    Heat,
    Poisson,
    Ksigma,
    Transform,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// key=value file; flags given on the command line win
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// spectral, heat, poisson, pointwise or all
    #[arg(long)]
    pub route: Option<String>,
    /// phi, gauss, holder, bump, zero or samples
    #[arg(long = "fn")]
    pub function: Option<String>,
    /// Gaussian rate a in φ_{λ,a} and e^{−ax²}
    #[arg(long)]
    pub fn_a: Option<f64>,
    /// CSV of samples (`x,value_re`) for --fn samples
    #[arg(long)]
    pub samples: Option<PathBuf>,
    #[arg(long)]
    pub x_min: Option<f64>,
    #[arg(long)]
    pub x_max: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    /// geometric or linear
    #[arg(long)]
    pub spacing: Option<String>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// csv or json
    #[arg(long)]
    pub format: Option<String>,
    /// Treat violated hypotheses as errors instead of warnings
    #[arg(long)]
    pub strict: bool,
    /// Subsample verification lattices 4×
    #[arg(long)]
    pub quick: bool,
    /// Fixed t for kernel dumps
    #[arg(long)]
    pub t: Option<f64>,
    /// Fixed x for the K_σ^λ profile
    #[arg(long)]
    pub x: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub k_min: Option<i32>,
    #[arg(long, allow_hyphen_values = true)]
    pub k_max: Option<i32>,
    #[arg(long)]
    pub family_x_max: Option<f64>,
}

const KEYS: [&str; 23] = [
    "lambda",
    "sigma",
    "beta",
    "alpha",
    "route",
    "fn",
    "fn_a",
    "samples",
    "x_min",
    "x_max",
    "n",
    "spacing",
    "abs_tol",
    "rel_tol",
    "output",
    "format",
    "strict",
    "quick",
    "t",
    "x",
    "k_min",
    "k_max",
    "family_x_max",
];

impl CommonArgs {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut put = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k, v));
            }
        };
        let s = |v: Option<f64>| v.map(|v| v.to_string());
        put("lambda", s(self.lambda));
        put("sigma", s(self.sigma));
        put("beta", s(self.beta));
        put("alpha", s(self.alpha));
        put("route", self.route.clone());
        put("fn", self.function.clone());
        put("fn_a", s(self.fn_a));
        put("samples", self.samples.as_ref().map(|p| p.display().to_string()));
        put("x_min", s(self.x_min));
        put("x_max", s(self.x_max));
        put("n", self.n.map(|v| v.to_string()));
        put("spacing", self.spacing.clone());
        put("abs_tol", s(self.abs_tol));
        put("rel_tol", s(self.rel_tol));
        put("output", self.output.as_ref().map(|p| p.display().to_string()));
        put("format", self.format.clone());
        put("strict", self.strict.then(|| "true".to_string()));
        put("quick", self.quick.then(|| "true".to_string()));
        put("t", s(self.t));
        put("x", s(self.x));
        put("k_min", self.k_min.map(|v| v.to_string()));
        put("k_max", self.k_max.map(|v| v.to_string()));
        put("family_x_max", s(self.family_x_max));
        out
    }
}

/// Parses `key = value` lines; `#` starts a comment, dashes in keys read as
/// underscores.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key=value, got '{raw}'", i + 1)))?;
        let key = k.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Config(format!("line {}: unknown key '{}'", i + 1, k.trim())));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteChoice {
    One(RouteTag),
    All,
}

impl RouteChoice {
    pub fn routes(self) -> Vec<RouteTag> {
        match self {
            RouteChoice::One(r) => vec![r],
            RouteChoice::All => RouteTag::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FnChoice {
    Phi,
    Gauss,
    Holder,
    Bump,
    Zero,
    Samples(PathBuf),
}

/// The resolved configuration of one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub lambda: f64,
    pub sigma: f64,
    pub beta: f64,
    pub alpha: f64,
    /// λ as given explicitly, used to restrict verification lattices
    pub lambda_explicit: Option<f64>,
    pub route: RouteChoice,
    pub function: Option<FnChoice>,
    pub fn_a: f64,
    pub grid: Grid,
    pub spec: QuadratureSpec,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub strict: bool,
    pub quick: bool,
    pub t: f64,
    pub x: f64,
    pub family: IntervalFamily,
}

fn num<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, CliError> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|_| CliError::Config(format!("{key}: cannot parse '{v}'"))),
    }
}

fn boolean(map: &BTreeMap<String, String>, key: &str) -> Result<bool, CliError> {
    match map.get(key).map(String::as_str) {
        None | Some("false") | Some("0") | Some("no") => Ok(false),
        Some("true") | Some("1") | Some("yes") => Ok(true),
        Some(v) => Err(CliError::Config(format!("{key}: expected true or false, got '{v}'"))),
    }
}

impl RunConfig {
    /// Defaults, then the config file, then the flags.
    pub fn resolve(args: &CommonArgs) -> Result<Self, CliError> {
        let mut map = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
                parse_config_text(&text)?
            }
            None => BTreeMap::new(),
        };
        for (k, v) in args.pairs() {
            map.insert(k.to_string(), v);
        }
        Self::from_map(&map)
    }

    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self, CliError> {
        let lambda_explicit: Option<f64> = num(map, "lambda")?;
        let lambda = lambda_explicit.unwrap_or(1.0);
        let sigma: f64 = num(map, "sigma")?.unwrap_or(0.5);
        let beta: f64 = num(map, "beta")?.unwrap_or(1.0);
        let alpha: f64 = num(map, "alpha")?.unwrap_or(0.3);
        OperatorParams::new(lambda, sigma).map_err(|e| CliError::Config(e.to_string()))?;
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(CliError::Config(format!("beta must be positive, got {beta}")));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(CliError::Config(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        let route = match map.get("route").map(String::as_str) {
            None => RouteChoice::One(RouteTag::Heat),
            Some("all") => RouteChoice::All,
            Some(r) => RouteChoice::One(r.parse().map_err(CliError::Config)?),
        };
        let function = match map.get("fn").map(String::as_str) {
            None => None,
            Some("phi") => Some(FnChoice::Phi),
            Some("gauss") => Some(FnChoice::Gauss),
            Some("holder") => Some(FnChoice::Holder),
            Some("bump") => Some(FnChoice::Bump),
            Some("zero") => Some(FnChoice::Zero),
            Some("samples") => {
                Some(FnChoice::Samples(map.get("samples").map(PathBuf::from).ok_or_else(
                    || CliError::Config("fn=samples needs samples=<csv path>".into()),
                )?))
            }
            Some(other) => return Err(CliError::Config(format!("unknown function '{other}'"))),
        };
        let fn_a: f64 = num(map, "fn_a")?.unwrap_or(1.0);
        if !(fn_a > 0.0 && fn_a.is_finite()) {
            return Err(CliError::Config(format!("fn_a must be positive, got {fn_a}")));
        }
        let grid = {
            let d = Grid::default();
            let (d_min, d_max) = (d.nodes()[0], d.nodes()[d.len() - 1]);
            let x_min: f64 = num(map, "x_min")?.unwrap_or(d_min);
            let x_max: f64 = num(map, "x_max")?.unwrap_or(d_max);
            let n: usize = num(map, "n")?.unwrap_or(d.len());
            let g = match map.get("spacing").map(String::as_str) {
                None | Some("geometric") => Grid::geometric(x_min, x_max, n),
                Some("linear") => Grid::linear(x_min, x_max, n),
                Some(other) => return Err(CliError::Config(format!("unknown spacing '{other}'"))),
            };
            g.map_err(|e| CliError::Config(format!("grid: {e}")))?
        };
        let d = QuadratureSpec::default();
        let spec = d.with_tolerances(
            num(map, "abs_tol")?.unwrap_or(d.abs_tol),
            num(map, "rel_tol")?.unwrap_or(d.rel_tol),
        );
        spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let format = match map.get("format").map(String::as_str) {
            None | Some("csv") => Format::Csv,
            Some("json") => Format::Json,
            Some(other) => return Err(CliError::Config(format!("unknown format '{other}'"))),
        };
        let t: f64 = num(map, "t")?.unwrap_or(1.0);
        let x: f64 = num(map, "x")?.unwrap_or(1.0);
        if !(t > 0.0 && t.is_finite()) || !(x > 0.0 && x.is_finite()) {
            return Err(CliError::Config(format!(
                "t and x must be positive, got t = {t}, x = {x}"
            )));
        }
        let family = match (
            num::<i32>(map, "k_min")?,
            num::<i32>(map, "k_max")?,
            num::<f64>(map, "family_x_max")?,
        ) {
            (None, None, None) => IntervalFamily::default_dyadic(),
            (k_min, k_max, x_max) => {
                IntervalFamily::dyadic(k_min.unwrap_or(-3), k_max.unwrap_or(6), x_max.unwrap_or(4.0))
                    .map_err(|e| CliError::Config(format!("interval family: {e}")))?
            }
        };
        Ok(Self {
            lambda,
            sigma,
            beta,
            alpha,
            lambda_explicit,
            route,
            function,
            fn_a,
            grid,
            spec,
            output: map.get("output").map(PathBuf::from),
            format,
            strict: boolean(map, "strict")?,
            quick: boolean(map, "quick")?,
            t,
            x,
            family,
        })
    }

    pub fn params(&self) -> OperatorParams {
        OperatorParams::new(self.lambda, self.sigma).expect("validated in from_map")
    }

    /// The input function, or `default` when none was configured.
    pub fn input(&self, default: FnChoice) -> Result<InputFn, CliError> {
        let choice = self.function.clone().unwrap_or(default);
        let kind = match choice {
            FnChoice::Phi => TestKind::Phi {
                lambda: self.lambda,
                a: self.fn_a,
            },
            FnChoice::Gauss => TestKind::Gaussian { a: self.fn_a },
            FnChoice::Holder => TestKind::Holder { alpha: self.alpha },
            FnChoice::Bump => TestKind::Bump {
                center: 1.0,
                radius: 0.5,
            },
            FnChoice::Zero => TestKind::Zero,
            FnChoice::Samples(path) => return Ok(InputFn::Sampled(load_samples(&path)?)),
        };
        Ok(InputFn::Test(
            test_function(kind).map_err(|e| CliError::Config(e.to_string()))?,
        ))
    }
}

fn load_samples(path: &Path) -> Result<Sampled, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let gf = GridFunction::from_csv(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Sampled::new(&gf).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// A test-family function or interpolated samples.
pub enum InputFn {
    Test(TestFunction),
    Sampled(Sampled),
}

impl InputFn {
    pub fn is_sampled(&self) -> bool {
        matches!(self, InputFn::Sampled(_))
    }
}

impl RealFn for InputFn {
    fn value(&self, x: f64) -> f64 {
        match self {
            InputFn::Test(f) => f.value(x),
            InputFn::Sampled(f) => f.value(x),
        }
    }

    fn derivative(&self, x: f64) -> Option<f64> {
        match self {
            InputFn::Test(f) => f.derivative(x),
            InputFn::Sampled(f) => f.derivative(x),
        }
    }

    fn second_derivative(&self, x: f64) -> Option<f64> {
        match self {
            InputFn::Test(f) => f.second_derivative(x),
            InputFn::Sampled(f) => f.second_derivative(x),
        }
    }

    fn decaying(&self) -> bool {
        match self {
            InputFn::Test(f) => f.decaying(),
            InputFn::Sampled(f) => f.decaying(),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            InputFn::Test(f) => f.breakpoints(),
            InputFn::Sampled(f) => f.breakpoints(),
        }
    }

    fn effective_support(&self) -> Option<f64> {
        match self {
            InputFn::Test(f) => f.effective_support(),
            InputFn::Sampled(f) => f.effective_support(),
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            InputFn::Test(f) => f.is_zero(),
            InputFn::Sampled(f) => f.is_zero(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let file = parse_config_text("# comment\nlambda = 2\nsigma=0.25 # trailing\nx-min = 0.1\n").unwrap();
        let mut map = file.clone();
        map.insert("sigma".into(), "0.75".into());
        let cfg = RunConfig::from_map(&map).unwrap();
        assert_eq!(cfg.lambda, 2.0);
        assert_eq!(cfg.sigma, 0.75);
        assert_eq!(cfg.grid.nodes()[0], 0.1);
        assert_eq!(cfg.lambda_explicit, Some(2.0));
    }

    #[test]
    fn bad_input_is_a_config_error() {
        assert!(matches!(parse_config_text("lambda"), Err(CliError::Config(_))));
        assert!(matches!(parse_config_text("colour = red"), Err(CliError::Config(_))));
        for (k, v) in [
            ("sigma", "1.5"),
            ("route", "sideways"),
            ("lambda", "abc"),
            ("n", "3"),
            ("fn", "samples"),
        ] {
            let map = BTreeMap::from([(k.to_string(), v.to_string())]);
            assert!(matches!(RunConfig::from_map(&map), Err(CliError::Config(_))), "{k}={v}");
        }
    }

    #[test]
    fn defaults() {
        let cfg = RunConfig::from_map(&BTreeMap::new()).unwrap();
        assert_eq!(cfg.route, RouteChoice::One(RouteTag::Heat));
        assert_eq!(cfg.format, Format::Csv);
        assert_eq!(cfg.grid.len(), Grid::default().len());
        assert_eq!(cfg.family.len(), IntervalFamily::default_dyadic().len());
    }
}
