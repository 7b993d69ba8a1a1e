//! Grids on ℝ₊, sampled functions, the C^α₊ and L_ρ norms, Campanato
//! ratios and the test-function families.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::quad::{self, QuadError, QuadratureSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid needs at least 8 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("grid nodes must be finite, positive and strictly increasing")]
    BadNodes,
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("NaN value at node {0}")]
    NanValue(usize),
    #[error("operation needs a real-valued grid function")]
    NotReal,
    #[error("empty grid")]
    Empty,
    #[error("invalid parameter {name} = {value}")]
    InvalidParam { name: &'static str, value: f64 },
    #[error("integral diverges or did not converge (estimate {value}, error {err_est})")]
    Divergent { value: f64, err_est: f64 },
    #[error("malformed csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

/// The pair (λ, σ) with λ̃ = min(λ, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorParams {
    lambda: f64,
    sigma: f64,
}

impl OperatorParams {
    pub fn new(lambda: f64, sigma: f64) -> Result<Self, GridError> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(GridError::InvalidParam {
                name: "lambda",
                value: lambda,
            });
        }
        if !(sigma > 0.0 && sigma < 1.0) {
            return Err(GridError::InvalidParam {
                name: "sigma",
                value: sigma,
            });
        }
        Ok(Self { lambda, sigma })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn lambda_tilde(&self) -> f64 {
        self.lambda.min(1.0)
    }

    /// Bessel order ν = λ − 1/2 of the Hankel and heat kernels.
    pub fn nu(&self) -> f64 {
        self.lambda - 0.5
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self, GridError> {
        Self::new(self.lambda, sigma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Spacing {
    Geometric { x_min: f64, x_max: f64, n: usize },
    Linear { a: f64, b: f64, n: usize },
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
    spacing: Spacing,
}

impl Default for Grid {
    fn default() -> Self {
        Self::geometric(1e-2, 20.0, 256).expect("default grid is valid")
    }
}

impl Grid {
    pub fn geometric(x_min: f64, x_max: f64, n: usize) -> Result<Self, GridError> {
        if n < 8 {
            return Err(GridError::TooFewNodes(n));
        }
        if !(x_min > 0.0 && x_max > x_min && x_max.is_finite()) {
            return Err(GridError::BadNodes);
        }
        let r = (x_max / x_min).ln() / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| x_min * (r * i as f64).exp()).collect();
        nodes[n - 1] = x_max;
        Ok(Self {
            nodes,
            spacing: Spacing::Geometric { x_min, x_max, n },
        })
    }

    pub fn linear(a: f64, b: f64, n: usize) -> Result<Self, GridError> {
        if n < 8 {
            return Err(GridError::TooFewNodes(n));
        }
        if !(a > 0.0 && b > a && b.is_finite()) {
            return Err(GridError::BadNodes);
        }
        let h = (b - a) / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| a + h * i as f64).collect();
        nodes[n - 1] = b;
        Ok(Self {
            nodes,
            spacing: Spacing::Linear { a, b, n },
        })
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self, GridError> {
        if nodes.len() < 8 {
            return Err(GridError::TooFewNodes(nodes.len()));
        }
        let ok = nodes.iter().all(|x| x.is_finite() && *x > 0.0) && nodes.windows(2).all(|w| w[1] > w[0]);
        if !ok {
            return Err(GridError::BadNodes);
        }
        Ok(Self {
            nodes,
            spacing: Spacing::Custom,
        })
    }

    /// Same family with every gap halved, so the old nodes are kept.
    pub fn refined(&self) -> Self {
        let mut nodes = Vec::with_capacity(2 * self.nodes.len() - 1);
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            let mid = match self.spacing {
                Spacing::Geometric { .. } => (w[0] * w[1]).sqrt(),
                _ => 0.5 * (w[0] + w[1]),
            };
            nodes.push(mid);
        }
        nodes.push(*self.nodes.last().expect("grid is nonempty"));
        let n = nodes.len();
        let spacing = match self.spacing {
            Spacing::Geometric { x_min, x_max, .. } => Spacing::Geometric { x_min, x_max, n },
            Spacing::Linear { a, b, .. } => Spacing::Linear { a, b, n },
            Spacing::Custom => Spacing::Custom,
        };
        Self { nodes, spacing }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Values {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Values,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Values) -> Result<Self, GridError> {
        let got = match &values {
            Values::Real(v) => v.len(),
            Values::Complex(v) => v.len(),
        };
        if got != grid.len() {
            return Err(GridError::LengthMismatch {
                expected: grid.len(),
                got,
            });
        }
        let nan = match &values {
            Values::Real(v) => v.iter().position(|x| x.is_nan()),
            Values::Complex(v) => v.iter().position(|z| z.re.is_nan() || z.im.is_nan()),
        };
        if let Some(i) = nan {
            return Err(GridError::NanValue(i));
        }
        Ok(Self { grid, values })
    }

    pub fn real(grid: Grid, values: Vec<f64>) -> Result<Self, GridError> {
        Self::new(grid, Values::Real(values))
    }

    /// Samples `f` at every node.
    pub fn sample<F: Fn(f64) -> f64>(grid: Grid, f: F) -> Result<Self, GridError> {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Self::real(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &Values {
        &self.values
    }

    pub fn real_values(&self) -> Option<&[f64]> {
        match &self.values {
            Values::Real(v) => Some(v),
            Values::Complex(_) => None,
        }
    }

    /// CSV with header `x,value_re[,value_im]` and 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match &self.values {
            Values::Real(v) => {
                out.push_str("x,value_re\n");
                for (x, y) in self.grid.nodes().iter().zip(v) {
                    let _ = writeln!(out, "{x:.16e},{y:.16e}");
                }
            }
            Values::Complex(v) => {
                out.push_str("x,value_re,value_im\n");
                for (x, z) in self.grid.nodes().iter().zip(v) {
                    let _ = writeln!(out, "{x:.16e},{:.16e},{:.16e}", z.re, z.im);
                }
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, GridError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| GridError::Csv("empty input".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let complex = match cols.as_slice() {
            ["x", "value_re"] => false,
            ["x", "value_re", "value_im"] => true,
            _ => return Err(GridError::Csv(format!("unexpected header '{header}'"))),
        };
        let mut xs = Vec::new();
        let mut re = Vec::new();
        let mut im = Vec::new();
        for (i, line) in lines.enumerate() {
            let fields: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| GridError::Csv(format!("row {}: {e}", i + 1)))?;
            if fields.len() != cols.len() {
                return Err(GridError::Csv(format!("row {} has {} fields", i + 1, fields.len())));
            }
            xs.push(fields[0]);
            re.push(fields[1]);
            if complex {
                im.push(fields[2]);
            }
        }
        let grid = Grid::from_nodes(xs)?;
        let values = if complex {
            Values::Complex(re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b)).collect())
        } else {
            Values::Real(re)
        };
        Self::new(grid, values)
    }
}

/// Discrete C^α₊ norm pieces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderEstimate {
    pub alpha: f64,
    pub quotient_sup: f64,
    pub weight_sup: f64,
    pub total: f64,
}

/// sup |f(x)−f(y)|/|x−y|^α over all node pairs plus sup x^{−α}|f(x)|.
pub fn holder_norm_plus(f: &GridFunction, alpha: f64) -> Result<HolderEstimate, GridError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(GridError::InvalidParam {
            name: "alpha",
            value: alpha,
        });
    }
    let vals = f.real_values().ok_or(GridError::NotReal)?;
    let xs = f.grid().nodes();
    if xs.is_empty() {
        return Err(GridError::Empty);
    }
    let quotient_sup = (0..xs.len())
        .into_par_iter()
        .map(|i| {
            let mut best: f64 = 0.0;
            for j in i + 1..xs.len() {
                let q = (vals[i] - vals[j]).abs() / (xs[j] - xs[i]).powf(alpha);
                best = best.max(q);
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    let weight_sup = xs
        .iter()
        .zip(vals)
        .map(|(x, v)| v.abs() * x.powf(-alpha))
        .fold(0.0, f64::max);
    Ok(HolderEstimate {
        alpha,
        quotient_sup,
        weight_sup,
        total: quotient_sup + weight_sup,
    })
}

/// A real function on ℝ₊ that the operators can consume.
pub trait RealFn: Sync {
    fn value(&self, x: f64) -> f64;

    fn derivative(&self, _x: f64) -> Option<f64> {
        None
    }

    fn second_derivative(&self, _x: f64) -> Option<f64> {
        None
    }

    /// Gaussian-type or compactly supported; required by the spectral path.
    fn decaying(&self) -> bool {
        false
    }

    /// Points where the function is not smooth, or support edges.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Beyond this point the function is negligible (decaying class only).
    fn effective_support(&self) -> Option<f64> {
        None
    }

    /// True when the function vanishes identically.
    fn is_zero(&self) -> bool {
        false
    }
}

impl<T: RealFn + ?Sized> RealFn for &T {
    fn value(&self, x: f64) -> f64 {
        (**self).value(x)
    }
    fn derivative(&self, x: f64) -> Option<f64> {
        (**self).derivative(x)
    }
    fn second_derivative(&self, x: f64) -> Option<f64> {
        (**self).second_derivative(x)
    }
    fn decaying(&self) -> bool {
        (**self).decaying()
    }
    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
    fn effective_support(&self) -> Option<f64> {
        (**self).effective_support()
    }
    fn is_zero(&self) -> bool {
        (**self).is_zero()
    }
}

/// Wraps a closure as a `RealFn` with no derivative information.
pub struct Callable<F>(pub F);

impl<F: Fn(f64) -> f64 + Sync> RealFn for Callable<F> {
    fn value(&self, x: f64) -> f64 {
        (self.0)(x)
    }
}

/// The families used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestKind {
    /// φ_{λ,a}(x) = x^λ e^{−ax²}
    Phi {
        lambda: f64,
        a: f64,
    },
    /// h_α(x) = min(x,1)^α
    Holder {
        alpha: f64,
    },
    /// exp(1 − 1/(1−r²)) with r = (x−center)/radius, zero for |r| ≥ 1
    Bump {
        center: f64,
        radius: f64,
    },
    /// ψ(x) = e^{−a x²}
    Gaussian {
        a: f64,
    },
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction {
    kind: TestKind,
    scale: f64,
}

pub fn test_function(kind: TestKind) -> Result<TestFunction, GridError> {
    let bad = |name, value| Err(GridError::InvalidParam { name, value });
    match kind {
        TestKind::Phi { lambda, a } => {
            if !(lambda > 0.0) {
                return bad("lambda", lambda);
            }
            if !(a > 0.0) {
                return bad("a", a);
            }
        }
        TestKind::Holder { alpha } => {
            if !(alpha > 0.0 && alpha <= 1.0) {
                return bad("alpha", alpha);
            }
        }
        TestKind::Bump { center, radius } => {
            if !(radius > 0.0) {
                return bad("radius", radius);
            }
            if !(center - radius >= 0.0) {
                return bad("center", center);
            }
        }
        TestKind::Gaussian { a } => {
            if !(a > 0.0) {
                return bad("a", a);
            }
        }
        TestKind::Zero => {}
    }
    Ok(TestFunction { kind, scale: 1.0 })
}

impl TestFunction {
    pub fn kind(&self) -> TestKind {
        self.kind
    }

    /// c·f.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            kind: self.kind,
            scale: self.scale * c,
        }
    }

    fn derivs(&self, x: f64) -> (f64, f64, f64) {
        match self.kind {
            TestKind::Phi { lambda: l, a } => {
                let e = (-a * x * x).exp();
                if e == 0.0 {
                    return (0.0, 0.0, 0.0);
                }
                let p = x.powf(l);
                let v = p * e;
                let d1 = (l / x - 2.0 * a * x) * v;
                let d2 = (l * (l - 1.0) / (x * x) - 2.0 * a * (2.0 * l + 1.0) + 4.0 * a * a * x * x) * v;
                (v, d1, d2)
            }
            TestKind::Holder { alpha } => {
                if x < 1.0 {
                    let v = x.powf(alpha);
                    (v, alpha * v / x, alpha * (alpha - 1.0) * v / (x * x))
                } else {
                    (1.0, 0.0, 0.0)
                }
            }
            TestKind::Bump { center, radius } => {
                let r = (x - center) / radius;
                if r.abs() >= 1.0 {
                    return (0.0, 0.0, 0.0);
                }
                let q = 1.0 - r * r;
                let v = (1.0 - 1.0 / q).exp();
                // g = 1 − 1/q, g' = −2r/q², g'' = −2/q² − 8r²/q³ (in r)
                let g1 = -2.0 * r / (q * q);
                let g2 = -2.0 / (q * q) - 8.0 * r * r / (q * q * q);
                let d1 = v * g1 / radius;
                let d2 = v * (g1 * g1 + g2) / (radius * radius);
                (v, d1, d2)
            }
            TestKind::Gaussian { a } => {
                let v = (-a * x * x).exp();
                if v == 0.0 {
                    return (0.0, 0.0, 0.0);
                }
                (v, -2.0 * a * x * v, (4.0 * a * a * x * x - 2.0 * a) * v)
            }
            TestKind::Zero => (0.0, 0.0, 0.0),
        }
    }
}

impl RealFn for TestFunction {
    fn value(&self, x: f64) -> f64 {
        self.scale * self.derivs(x).0
    }

    fn derivative(&self, x: f64) -> Option<f64> {
        Some(self.scale * self.derivs(x).1)
    }

    fn second_derivative(&self, x: f64) -> Option<f64> {
        Some(self.scale * self.derivs(x).2)
    }

    fn decaying(&self) -> bool {
        !matches!(self.kind, TestKind::Holder { .. })
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self.kind {
            TestKind::Holder { .. } => vec![1.0],
            TestKind::Bump { center, radius } => vec![center - radius, center, center + radius],
            TestKind::Phi { lambda, a } => vec![(lambda / (2.0 * a)).sqrt()],
            _ => Vec::new(),
        }
    }

    fn effective_support(&self) -> Option<f64> {
        match self.kind {
            // x^λ e^{−ax²} < 1e−18 relative to its peak well before this point
            TestKind::Phi { lambda, a } => Some(((42.0 + lambda * 2.0) / a).sqrt() + 1.0),
            TestKind::Gaussian { a } => Some((42.0 / a).sqrt()),
            TestKind::Bump { center, radius } => Some(center + radius),
            TestKind::Zero => Some(0.0),
            TestKind::Holder { .. } => None,
        }
    }

    fn is_zero(&self) -> bool {
        self.kind == TestKind::Zero || self.scale == 0.0
    }
}

/// x^λ·ψ(x) for a profile ψ, as used by the conjugacy with x^{±λ}.
pub struct PowerTimes<F> {
    pub lambda: f64,
    pub profile: F,
}

impl<F: RealFn> RealFn for PowerTimes<F> {
    fn value(&self, x: f64) -> f64 {
        let v = self.profile.value(x);
        if v == 0.0 {
            0.0
        } else {
            x.powf(self.lambda) * v
        }
    }

    fn derivative(&self, x: f64) -> Option<f64> {
        let d = self.profile.derivative(x)?;
        let p = x.powf(self.lambda);
        Some(p * d + self.lambda * p / x * self.profile.value(x))
    }

    fn second_derivative(&self, x: f64) -> Option<f64> {
        let d2 = self.profile.second_derivative(x)?;
        let d1 = self.profile.derivative(x)?;
        let l = self.lambda;
        let p = x.powf(l);
        Some(p * d2 + 2.0 * l * p / x * d1 + l * (l - 1.0) * p / (x * x) * self.profile.value(x))
    }

    fn decaying(&self) -> bool {
        self.profile.decaying()
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.profile.breakpoints()
    }

    fn effective_support(&self) -> Option<f64> {
        self.profile.effective_support().map(|s| s + 1.0)
    }

    fn is_zero(&self) -> bool {
        self.profile.is_zero()
    }
}

/// Monotone piecewise-cubic (Fritsch–Carlson) interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, GridError> {
        if xs.len() != ys.len() {
            return Err(GridError::LengthMismatch {
                expected: xs.len(),
                got: ys.len(),
            });
        }
        if xs.len() < 2 || xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(GridError::BadNodes);
        }
        let n = xs.len();
        let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])).collect();
        let mut m = vec![0.0; n];
        m[0] = delta[0];
        m[n - 1] = delta[n - 2];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] <= 0.0 {
                m[i] = 0.0;
            } else {
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        Ok(Self { xs, ys, slopes: m })
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    /// Value at x, clamped to the end values outside the table.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = match self.xs.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(i) => return self.ys[i],
            Err(i) => i - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let s = (x - self.xs[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.ys[i] + h10 * h * self.slopes[i] + h01 * self.ys[i + 1] + h11 * h * self.slopes[i + 1]
    }
}

/// Samples interpolated by `MonotoneCubic`; zero outside the sampled range.
pub struct Sampled {
    interp: MonotoneCubic,
}

impl Sampled {
    pub fn new(f: &GridFunction) -> Result<Self, GridError> {
        let vals = f.real_values().ok_or(GridError::NotReal)?;
        Ok(Self {
            interp: MonotoneCubic::new(f.grid().nodes().to_vec(), vals.to_vec())?,
        })
    }
}

impl RealFn for Sampled {
    fn value(&self, x: f64) -> f64 {
        let (lo, hi) = self.interp.x_range();
        if x < lo {
            self.interp.eval(lo)
        } else if x > hi {
            0.0
        } else {
            self.interp.eval(x)
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        let (lo, hi) = self.interp.x_range();
        vec![lo, hi]
    }
}

/// ∫₀^∞ |f(x)| (1+x)^{−1−2ρ} dx.
pub fn l_rho_norm<F: RealFn>(f: &F, rho: f64, spec: &QuadratureSpec) -> Result<f64, GridError> {
    if !(rho > 0.0) {
        return Err(GridError::InvalidParam {
            name: "rho",
            value: rho,
        });
    }
    if f.is_zero() {
        return Ok(0.0);
    }
    // u = (1+x)^{−2ρ} turns the weighted half-line into ∫₀¹ |f(x(u))| du / 2ρ
    let to_u = |x: f64| (1.0 + x).powf(-2.0 * rho);
    let mut pts = vec![0.0, 1.0];
    pts.extend(f.breakpoints().into_iter().filter(|b| *b > 0.0).map(to_u));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let r = quad::integrate_breaks(
        |u: f64| {
            let x = u.powf(-0.5 / rho) - 1.0;
            if x.is_finite() {
                f.value(x).abs() / (2.0 * rho)
            } else {
                0.0
            }
        },
        &pts,
        spec,
    )?;
    if !r.converged {
        return Err(GridError::Divergent {
            value: r.value,
            err_est: r.err_est,
        });
    }
    Ok(r.value)
}

/// The two Campanato-type ratios of an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CampanatoRatio {
    /// |I|^{−1−α} ∫_I |f − f_I|^p
    pub m1: f64,
    /// |I|^{−1−α} ∫_I |f|^p, only for I = (0, b)
    pub m2: Option<f64>,
}

/// Ratios (M1) and (M2) over I = (lo, hi), normalised by |I|^{1+α} as
/// displayed for every p.
pub fn campanato_ratio<F: RealFn>(
    f: &F,
    lo: f64,
    hi: f64,
    alpha: f64,
    p: f64,
    spec: &QuadratureSpec,
) -> Result<CampanatoRatio, GridError> {
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        return Err(GridError::InvalidParam {
            name: "interval",
            value: hi - lo,
        });
    }
    if !(p >= 1.0) {
        return Err(GridError::InvalidParam { name: "p", value: p });
    }
    let len = hi - lo;
    let mut pts = vec![lo];
    pts.extend(f.breakpoints().into_iter().filter(|b| *b > lo && *b < hi));
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    let mean = quad::integrate_breaks(|y| f.value(y), &pts, spec)?.value / len;
    let norm = len.powf(1.0 + alpha);
    let m1 = quad::integrate_breaks(|y| (f.value(y) - mean).abs().powf(p), &pts, spec)?.value / norm;
    let m2 = if lo == 0.0 {
        Some(quad::integrate_breaks(|y| f.value(y).abs().powf(p), &pts, spec)?.value / norm)
    } else {
        None
    };
    Ok(CampanatoRatio { m1, m2 })
}
