//! Littlewood–Paley g-function, area function, fractional Carleson boxes,
//! the Poisson–Hölder ratio and Hardy-space atoms.
//!
//! Every functional reads F(x,t) = t^β ∂_t^β P_t^λ f(x) through a
//! [`TimeDerivative`], so the same code runs on Hankel tables, on the λ = 1
//! Dirichlet kernel and on closed-form atoms.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::grid::{test_function, GridError, OperatorParams, RealFn, TestKind};
use crate::kernels;
use crate::operators::{self, FracDerivSpec, OperatorError};
use crate::quad::{self, QuadError, QuadResult, QuadratureSpec};
use crate::specfun::{self, SpecfunError};
use crate::transforms::{HankelTable, SpectralMultiplier, TransformError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("quadrature did not converge (value {value}, error {err_est})")]
    NotConverged { value: f64, err_est: f64 },
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
}

/// Inner integrals run at a tolerance ten times tighter than the caller's
/// and are judged against the caller's tolerance.
fn accept(r: QuadResult<f64>, spec: &QuadratureSpec) -> Result<QuadResult<f64>, AnalysisError> {
    if r.converged || (r.value.is_finite() && r.err_est <= 10.0 * spec.tolerance_for(r.value)) {
        Ok(r)
    } else {
        Err(AnalysisError::NotConverged {
            value: r.value,
            err_est: r.err_est,
        })
    }
}

/// ∂_t^β P_t^λ f(x) for one fixed f and β.
pub trait TimeDerivative: Sync {
    fn beta(&self) -> f64;

    fn derivative(&self, x: f64, t: f64) -> Result<Complex64, AnalysisError>;

    /// F(x,t) = t^β ∂_t^β P_t f(x).
    fn scaled(&self, x: f64, t: f64) -> Result<Complex64, AnalysisError> {
        Ok(self.derivative(x, t)? * t.powf(self.beta()))
    }

    /// Points in x where F changes character (support edges, kinks).
    fn x_breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Decay exponent q with |F(x,t)| ≲ t^{−q} for large t at fixed x.
    fn large_t_decay(&self) -> f64;
}

/// The Hankel multiplier e^{iπβ} y^β e^{−ty} applied to a table of h_λ f.
pub struct SpectralDerivative {
    table: HankelTable,
    beta: f64,
    lambda_tilde: f64,
}

impl SpectralDerivative {
    pub fn new<F: RealFn>(p: &OperatorParams, beta: f64, f: &F, spec: &QuadratureSpec) -> Result<Self, AnalysisError> {
        FracDerivSpec::new(beta)?;
        Ok(Self {
            table: HankelTable::new(p.lambda(), f, spec)?,
            beta,
            lambda_tilde: p.lambda_tilde(),
        })
    }
}

impl TimeDerivative for SpectralDerivative {
    fn beta(&self) -> f64 {
        self.beta
    }

    fn derivative(&self, x: f64, t: f64) -> Result<Complex64, AnalysisError> {
        Ok(self
            .table
            .apply(&SpectralMultiplier::frac_deriv_poisson(self.beta, t), x)?)
    }

    fn large_t_decay(&self) -> f64 {
        self.lambda_tilde + 1.0
    }
}

/// ∂_t^β of the classical Poisson kernel ℙ_t(s) = Re[(t+is)^{−1}]/π, as
/// e^{iπβ} times a real kernel.
#[derive(Debug, Clone, Copy)]
struct ClassicalPoissonDerivative {
    beta: f64,
    phase: Complex64,
    c_kernel: f64,
    c_cdf: f64,
}

impl ClassicalPoissonDerivative {
    fn new(beta: f64) -> Result<Self, AnalysisError> {
        FracDerivSpec::new(beta)?;
        Ok(Self {
            beta,
            phase: Complex64::from_polar(1.0, PI * beta),
            c_kernel: specfun::gamma(beta + 1.0)? / PI,
            c_cdf: specfun::gamma(beta)? / PI,
        })
    }

    /// Γ(β+1)/π Re[(t+is)^{−β−1}].
    fn kernel(&self, s: f64, t: f64) -> f64 {
        self.c_kernel * Complex64::new(t, s).powf(-self.beta - 1.0).re
    }

    /// ∫_{−∞}^s of the kernel: Γ(β)/π Re[i(t+is)^{−β}].
    fn cdf(&self, s: f64, t: f64) -> f64 {
        -self.c_cdf * Complex64::new(t, s).powf(-self.beta).im
    }
}

/// λ = 1: P_t f is the classical Poisson integral of the odd extension, so
/// ∂_t^β P_t f(x) = ∫₀^∞ [∂ℙ(x−y)(f(y) − f(x)) − ∂ℙ(x+y) f(y)] dy
/// + f(x) ∫_{−∞}^x ∂ℙ, which avoids the cancellation of ∫∂ℙ = 0.
pub struct DirichletDerivative<F> {
    f: F,
    k: ClassicalPoissonDerivative,
    spec: QuadratureSpec,
}

impl<F: RealFn> DirichletDerivative<F> {
    pub fn new(p: &OperatorParams, beta: f64, f: F, spec: &QuadratureSpec) -> Result<Self, AnalysisError> {
        if p.lambda() != 1.0 {
            return Err(AnalysisError::Precondition(format!(
                "the Dirichlet kernel route needs lambda = 1, got {}",
                p.lambda()
            )));
        }
        Ok(Self {
            f,
            k: ClassicalPoissonDerivative::new(beta)?,
            spec: spec.tightened(10.0),
        })
    }

    fn real_part(&self, x: f64, t: f64) -> Result<f64, AnalysisError> {
        let k = &self.k;
        let mut pts = vec![0.0, x, 2.0 * x];
        for c in [-10.0, -1.0, 1.0, 10.0] {
            let y = x + c * t;
            if y > 0.0 {
                pts.push(y);
            }
        }
        pts.extend(self.f.breakpoints().into_iter().filter(|b| *b > 0.0));
        if let Some(s) = self.f.effective_support() {
            pts.extend([0.5 * s, s]);
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        // a wide kernel sees no cancellation
        if t >= x {
            let r = quad::try_integrate_half_line(
                |y: f64| {
                    Ok::<f64, QuadError>(if y > 0.0 {
                        (k.kernel(x - y, t) - k.kernel(x + y, t)) * self.f.value(y)
                    } else {
                        0.0
                    })
                },
                &pts,
                &self.spec,
            )?;
            return Ok(accept(r, &self.spec)?.value);
        }
        // f(x) + f′(x)(y−x) is subtracted on the window |y−x| < x, where the
        // linear part integrates to zero against the even kernel
        let fx = self.f.value(x);
        let dfx = self.f.derivative(x).unwrap_or(0.0);
        // rounding in f(y) − f(x) meets a kernel of size t^{−β−1}
        let floor = 1e-14 * (fx.abs() + dfx.abs() * x) * t.powf(-k.beta);
        let spec = self
            .spec
            .with_tolerances(self.spec.abs_tol.max(floor), self.spec.rel_tol);
        let r = quad::try_integrate_half_line(
            |y: f64| {
                if y <= 0.0 {
                    return Ok::<f64, QuadError>(0.0);
                }
                let fy = self.f.value(y);
                let near = if y < 2.0 * x { fx + dfx * (y - x) } else { 0.0 };
                Ok(k.kernel(x - y, t) * (fy - near) - k.kernel(x + y, t) * fy)
            },
            &pts,
            &spec,
        )?;
        Ok(accept(r, &spec)?.value + fx * (k.cdf(x, t) - k.cdf(-x, t)))
    }
}

impl<F: RealFn> TimeDerivative for DirichletDerivative<F> {
    fn beta(&self) -> f64 {
        self.k.beta
    }

    fn derivative(&self, x: f64, t: f64) -> Result<Complex64, AnalysisError> {
        Ok(self.k.phase * self.real_part(x, t)?)
    }

    fn x_breakpoints(&self) -> Vec<f64> {
        self.f.breakpoints()
    }

    fn large_t_decay(&self) -> f64 {
        2.0
    }
}

/// λ = 1 and f = h·χ_{(0,b)} in closed form:
/// ∂_t^β P_t f(x) = h [2Φ(x) − Φ(x−b) − Φ(x+b)] with Φ the antiderivative
/// of ∂_t^β ℙ_t.
pub struct IndicatorDerivative {
    b: f64,
    height: f64,
    k: ClassicalPoissonDerivative,
}

impl IndicatorDerivative {
    pub fn new(b: f64, height: f64, beta: f64) -> Result<Self, AnalysisError> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(AnalysisError::Precondition(format!(
                "support end b must be positive, got {b}"
            )));
        }
        Ok(Self {
            b,
            height,
            k: ClassicalPoissonDerivative::new(beta)?,
        })
    }
}

impl TimeDerivative for IndicatorDerivative {
    fn beta(&self) -> f64 {
        self.k.beta
    }

    fn derivative(&self, x: f64, t: f64) -> Result<Complex64, AnalysisError> {
        let k = &self.k;
        let v = 2.0 * k.cdf(x, t) - k.cdf(x - self.b, t) - k.cdf(x + self.b, t);
        Ok(k.phase * (self.height * v))
    }

    fn x_breakpoints(&self) -> Vec<f64> {
        vec![self.b]
    }

    fn large_t_decay(&self) -> f64 {
        2.0
    }
}

/// The Segovia–Wheeden definition through the heat kernel (any λ, any f).
pub struct PointwiseDerivative<F> {
    p: OperatorParams,
    f: F,
    d: FracDerivSpec,
    spec: QuadratureSpec,
}

impl<F: RealFn> PointwiseDerivative<F> {
    pub fn new(p: &OperatorParams, beta: f64, f: F, spec: &QuadratureSpec) -> Result<Self, AnalysisError> {
        Ok(Self {
            p: *p,
            f,
            d: FracDerivSpec::new(beta)?,
            spec: spec.clone(),
        })
    }
}

impl<F: RealFn> TimeDerivative for PointwiseDerivative<F> {
    fn beta(&self) -> f64 {
        self.d.beta()
    }

    fn derivative(&self, x: f64, t: f64) -> Result<Complex64, AnalysisError> {
        Ok(operators::frac_deriv_poisson(
            &self.p, self.d, &self.f, x, t, &self.spec,
        )?)
    }

    fn x_breakpoints(&self) -> Vec<f64> {
        self.f.breakpoints()
    }

    fn large_t_decay(&self) -> f64 {
        self.p.lambda_tilde() + 1.0
    }
}

struct ZeroDerivative(f64);

impl TimeDerivative for ZeroDerivative {
    fn beta(&self) -> f64 {
        self.0
    }

    fn derivative(&self, _x: f64, _t: f64) -> Result<Complex64, AnalysisError> {
        Ok(Complex64::new(0.0, 0.0))
    }

    fn large_t_decay(&self) -> f64 {
        f64::INFINITY
    }
}

/// The cheapest exact route for (λ, β, f): the closed-form kernel for λ = 1,
/// the Hankel table for decaying f and the heat-kernel definition otherwise.
pub fn time_derivative<'a, F: RealFn + 'a>(
    p: &OperatorParams,
    beta: f64,
    f: &'a F,
    spec: &QuadratureSpec,
) -> Result<Box<dyn TimeDerivative + 'a>, AnalysisError> {
    FracDerivSpec::new(beta)?;
    if f.is_zero() {
        return Ok(Box::new(ZeroDerivative(beta)));
    }
    if p.lambda() == 1.0 {
        return Ok(Box::new(DirichletDerivative::new(p, beta, f, spec)?));
    }
    if f.decaying() {
        return Ok(Box::new(SpectralDerivative::new(p, beta, f, spec)?));
    }
    Ok(Box::new(PointwiseDerivative::new(p, beta, f, spec)?))
}

/// ∫ over t ∈ (lower, ∞) in ln t of |F(x,t)|² dt/t.
fn squared_over_t<D: TimeDerivative + ?Sized>(
    src: &D,
    x: f64,
    lower: f64,
    spec: &QuadratureSpec,
) -> Result<QuadResult<f64>, AnalysisError> {
    kernels::integrate_log_line(
        |t| Ok::<f64, AnalysisError>(src.scaled(x, t)?.norm_sqr() / t),
        lower,
        &[x.min(1.0) * 1e-2, x, 1.0, 4.0 * x.max(1.0)],
        spec,
    )
}

/// g_λ^β f(x) = (∫₀^∞ |t^β ∂_t^β P_t f(x)|² dt/t)^{1/2}.
pub fn g_function<F: RealFn>(
    p: &OperatorParams,
    beta: f64,
    f: &F,
    x: f64,
    spec: &QuadratureSpec,
) -> Result<f64, AnalysisError> {
    let src = time_derivative(p, beta, f, spec)?;
    g_function_with(src.as_ref(), x, spec)
}

/// The t-integral starts at 1e−10·min(x,1); the omitted part is
/// O((1e−10)^{2β}) relative.
pub fn g_function_with<D: TimeDerivative + ?Sized>(
    src: &D,
    x: f64,
    spec: &QuadratureSpec,
) -> Result<f64, AnalysisError> {
    if !(x > 0.0) {
        return Err(AnalysisError::Precondition(format!("x must be positive, got {x}")));
    }
    let r = accept(squared_over_t(src, x, 1e-10 * x.min(1.0), spec)?, spec)?;
    Ok(r.value.max(0.0).sqrt())
}

const X_PANELS: [f64; 9] = [0.0, 0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0];

/// ∫₀^∞ h(x) dx over fixed panels in parallel, summed in panel order.
fn integrate_x<H>(h: H, extra: &[f64], spec: &QuadratureSpec) -> Result<QuadResult<f64>, AnalysisError>
where
    H: Fn(f64) -> Result<f64, AnalysisError> + Sync,
{
    let mut pts: Vec<f64> = X_PANELS.to_vec();
    pts.extend(extra.iter().copied().filter(|b| *b > 0.0 && b.is_finite()));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let n = pts.len();
    let pieces: Vec<Result<QuadResult<f64>, AnalysisError>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let r = if i + 1 < n {
                quad::try_integrate_breaks(&h, &pts[i..=i + 1], spec)?
            } else {
                quad::try_integrate_log_tail(&h, pts[i], spec)?
            };
            accept(r, spec)
        })
        .collect();
    let mut total = QuadResult::zero();
    for p in pieces {
        total = total.combine(p?);
    }
    Ok(total)
}

/// ‖g_λ^β f‖²_{L²(ℝ₊)}.
pub fn g_norm_squared<D: TimeDerivative + ?Sized>(src: &D, spec: &QuadratureSpec) -> Result<f64, AnalysisError> {
    let inner = spec.tightened(10.0);
    let r = integrate_x(
        |x| {
            if x <= 0.0 {
                return Ok(0.0);
            }
            Ok(accept(squared_over_t(src, x, 1e-10 * x.min(1.0), &inner)?, spec)?.value)
        },
        &src.x_breakpoints(),
        spec,
    )?;
    Ok(r.value)
}

/// ‖g_λ^β f‖² / ‖f‖² together with the identity's constant Γ(2β)/2^{2β}
/// obtained from Plancherel for h_λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GIdentity {
    pub g_norm_sq: f64,
    pub f_norm_sq: f64,
    pub ratio: f64,
    pub plancherel_constant: f64,
}

pub fn g_identity<F: RealFn>(
    p: &OperatorParams,
    beta: f64,
    f: &F,
    spec: &QuadratureSpec,
) -> Result<GIdentity, AnalysisError> {
    let src = time_derivative(p, beta, f, spec)?;
    let g_norm_sq = g_norm_squared(src.as_ref(), spec)?;
    let f_norm_sq = integrate_x(
        |x| {
            let v = f.value(x);
            Ok(v * v)
        },
        &f.breakpoints(),
        spec,
    )?
    .value;
    Ok(GIdentity {
        g_norm_sq,
        f_norm_sq,
        ratio: g_norm_sq / f_norm_sq,
        plancherel_constant: specfun::gamma(2.0 * beta)? / 4f64.powf(beta),
    })
}

/// Γ₊(x) = {(y,t): y > 0, |x−y| < t < t_max}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeSpec {
    x: f64,
    t_max: f64,
}

impl ConeSpec {
    pub const DEFAULT_T_MAX: f64 = 16.0;

    pub fn new(x: f64, t_max: f64) -> Result<Self, AnalysisError> {
        if !(x > 0.0 && x.is_finite() && t_max > 0.0 && t_max.is_finite()) {
            return Err(AnalysisError::Precondition(format!(
                "cone needs apex x > 0 and finite t_max > 0, got ({x}, {t_max})"
            )));
        }
        Ok(Self { x, t_max })
    }

    pub fn at(x: f64) -> Result<Self, AnalysisError> {
        Self::new(x, Self::DEFAULT_T_MAX)
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaValue {
    pub value: f64,
    pub err_est: f64,
    /// Estimate of the omitted t > t_max part of S², from |F| ≲ t^{−q}.
    pub tail_bound: f64,
}

/// S_λ^β f(x) over the truncated cone.
pub fn area_function<F: RealFn>(
    p: &OperatorParams,
    beta: f64,
    f: &F,
    cone: ConeSpec,
    spec: &QuadratureSpec,
) -> Result<AreaValue, AnalysisError> {
    let src = time_derivative(p, beta, f, spec)?;
    area_function_with(src.as_ref(), cone, spec)
}

/// (1/t²)∫_{|x−y|<t, y>0} |F(y,t)|² dy, the per-dt density of S².
fn cone_slice<D: TimeDerivative + ?Sized>(
    src: &D,
    x: f64,
    t: f64,
    spec: &QuadratureSpec,
) -> Result<f64, AnalysisError> {
    let (lo, hi) = ((x - t).max(0.0), x + t);
    let mut pts = vec![lo, x, hi];
    pts.extend(src.x_breakpoints().into_iter().filter(|b| *b > lo && *b < hi));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let r = quad::try_integrate_breaks(
        |y: f64| Ok::<f64, AnalysisError>(if y > 0.0 { src.scaled(y, t)?.norm_sqr() } else { 0.0 }),
        &pts,
        spec,
    )?;
    // run at the inner tolerance, judged against the caller's
    Ok(accept(r, &spec.tightened(0.1))?.value / (t * t))
}

pub fn area_function_with<D: TimeDerivative + ?Sized>(
    src: &D,
    cone: ConeSpec,
    spec: &QuadratureSpec,
) -> Result<AreaValue, AnalysisError> {
    let (x, t_max) = (cone.x(), cone.t_max());
    let inner = spec.tightened(10.0);
    let lower = 1e-10 * x.min(1.0);
    let mut ws: Vec<f64> = [lower, 1e-2 * x.min(1.0), x, 1.0, t_max]
        .iter()
        .filter(|t| **t >= lower && **t <= t_max)
        .map(|t| t.ln())
        .collect();
    for b in src.x_breakpoints() {
        let d = (b - x).abs();
        if d > lower && d < t_max {
            ws.push(d.ln());
        }
    }
    ws.sort_by(f64::total_cmp);
    ws.dedup();
    let r = quad::try_integrate_breaks(
        |w: f64| {
            let t = w.exp();
            Ok::<f64, AnalysisError>(cone_slice(src, x, t, &inner)? * t)
        },
        &ws,
        spec,
    )?;
    let r = accept(r, spec)?;
    // slice density at t_max decays like t^{−2q−1}
    let q = src.large_t_decay();
    let tail_bound = if q.is_finite() {
        cone_slice(src, x, t_max, &inner)? * t_max / (2.0 * q)
    } else {
        0.0
    };
    Ok(AreaValue {
        value: r.value.max(0.0).sqrt(),
        err_est: r.err_est,
        tail_bound,
    })
}

/// ‖S_λ^β f‖_{L^p}^p = ∫₀^∞ S(x)^p dx over the truncated cones.
pub fn area_lp_norm_p<D: TimeDerivative + ?Sized>(
    src: &D,
    p_exp: f64,
    t_max: f64,
    spec: &QuadratureSpec,
) -> Result<f64, AnalysisError> {
    if !(p_exp > 0.0) {
        return Err(AnalysisError::Precondition(format!(
            "exponent must be positive, got {p_exp}"
        )));
    }
    let inner = spec.tightened(10.0);
    let mut extra = src.x_breakpoints();
    extra.push(t_max);
    let r = integrate_x(
        |x| {
            if x <= 0.0 {
                return Ok(0.0);
            }
            Ok(area_function_with(src, ConeSpec::new(x, t_max)?, &inner)?
                .value
                .powf(p_exp))
        },
        &extra,
        spec,
    )?;
    Ok(r.value)
}

/// Bounded intervals of ℝ₊.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalFamily {
    intervals: Vec<(f64, f64)>,
}

impl IntervalFamily {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self, AnalysisError> {
        if intervals.is_empty() {
            return Err(AnalysisError::Precondition("interval family is empty".into()));
        }
        for &(lo, hi) in &intervals {
            if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
                return Err(AnalysisError::Precondition(format!("bad interval ({lo}, {hi})")));
            }
        }
        Ok(Self { intervals })
    }

    /// (j 2^{−k}, (j+1) 2^{−k}) ∩ (0, x_max) for k_min ≤ k ≤ k_max.
    pub fn dyadic(k_min: i32, k_max: i32, x_max: f64) -> Result<Self, AnalysisError> {
        if !(x_max > 0.0 && x_max.is_finite()) || k_min > k_max {
            return Err(AnalysisError::Precondition(format!(
                "dyadic family needs k_min ≤ k_max and x_max > 0, got ({k_min}, {k_max}, {x_max})"
            )));
        }
        let mut intervals = Vec::new();
        for k in k_min..=k_max {
            let h = 2f64.powi(-k);
            let mut j = 0.0;
            while j * h < x_max {
                intervals.push((j * h, ((j + 1.0) * h).min(x_max)));
                j += 1.0;
            }
        }
        Self::new(intervals)
    }

    /// k = −3..6 on (0, 4).
    pub fn default_dyadic() -> Self {
        Self::dyadic(-3, 6, 4.0).expect("valid constants")
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// The union with another family.
    pub fn union(&self, other: &Self) -> Self {
        let mut intervals = self.intervals.clone();
        for iv in &other.intervals {
            if !intervals.contains(iv) {
                intervals.push(*iv);
            }
        }
        Self { intervals }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarlesonReport {
    /// sup over the family of the box integrals, as displayed (no |I| power).
    pub sup: f64,
    pub argmax: (f64, f64),
    pub boxes: Vec<(f64, f64, f64)>,
}

impl CarlesonReport {
    /// sup of |I|^{−2α} × box integral, the scale-invariant reading.
    pub fn normalized_sup(&self, alpha: f64) -> f64 {
        self.boxes
            .iter()
            .map(|(lo, hi, v)| v / (hi - lo).powf(2.0 * alpha))
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("interval_lo,interval_hi,box_integral\n");
        for (lo, hi, v) in &self.boxes {
            let _ = writeln!(s, "{lo:.16e},{hi:.16e},{v:.16e}");
        }
        s
    }
}

/// ∫₀^{|I|} ∫_I |F(x,t)|² dx dt/t, in ln t from 1e−8|I|.
pub fn carleson_box<D: TimeDerivative + ?Sized>(
    src: &D,
    lo: f64,
    hi: f64,
    spec: &QuadratureSpec,
) -> Result<f64, AnalysisError> {
    let len = hi - lo;
    let inner = spec.tightened(10.0);
    let mut xs = vec![lo, hi];
    xs.extend(src.x_breakpoints().into_iter().filter(|b| *b > lo && *b < hi));
    xs.sort_by(f64::total_cmp);
    let (w0, w1) = ((1e-8 * len).ln(), len.ln());
    let mut ws = vec![w0, w1];
    let mut w = w1 - 2.0;
    while w > w0 {
        ws.push(w);
        w -= 2.0;
    }
    ws.sort_by(f64::total_cmp);
    let r = quad::try_integrate_breaks(
        |w: f64| {
            let t = w.exp();
            let r = quad::try_integrate_breaks(
                |x: f64| Ok::<f64, AnalysisError>(src.scaled(x, t)?.norm_sqr()),
                &xs,
                &inner,
            )?;
            Ok::<f64, AnalysisError>(accept(r, spec)?.value)
        },
        &ws,
        spec,
    )?;
    Ok(accept(r, spec)?.value)
}

/// [dμ_f]_α over the family. α enters only through the hypothesis check.
pub fn carleson_norm<F: RealFn>(
    p: &OperatorParams,
    beta: f64,
    alpha: f64,
    f: &F,
    fam: &IntervalFamily,
    spec: &QuadratureSpec,
) -> Result<CarlesonReport, AnalysisError> {
    check_alpha(p, beta, alpha)?;
    let src = time_derivative(p, beta, f, spec)?;
    carleson_norm_with(src.as_ref(), fam, spec)
}

pub fn carleson_norm_with<D: TimeDerivative + ?Sized>(
    src: &D,
    fam: &IntervalFamily,
    spec: &QuadratureSpec,
) -> Result<CarlesonReport, AnalysisError> {
    let boxes = fam
        .intervals()
        .par_iter()
        .map(|&(lo, hi)| Ok((lo, hi, carleson_box(src, lo, hi, spec)?)))
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    let (mut sup, mut argmax) = (0.0, fam.intervals()[0]);
    for &(lo, hi, v) in &boxes {
        if v > sup {
            sup = v;
            argmax = (lo, hi);
        }
    }
    Ok(CarlesonReport { sup, argmax, boxes })
}

fn check_alpha(p: &OperatorParams, beta: f64, alpha: f64) -> Result<(), AnalysisError> {
    if !(alpha > 0.0 && alpha < 1.0 && alpha < p.lambda().min(beta)) {
        return Err(AnalysisError::Precondition(format!(
            "need 0 < alpha < min(lambda, beta, 1), got alpha = {alpha}, lambda = {}, beta = {beta}",
            p.lambda()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderRatioReport {
    pub sup: f64,
    /// (t, sup over x of |F(x,t)|/t^α)
    pub per_t: Vec<(f64, f64)>,
}

impl HolderRatioReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,sup_x_ratio\n");
        for (t, v) in &self.per_t {
            let _ = writeln!(s, "{t:.16e},{v:.16e}");
        }
        s
    }
}

/// n log-spaced values from 1e−3 to 1.
pub fn default_t_set(n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| 10f64.powf(-3.0 + 3.0 * i as f64 / (n - 1) as f64))
        .collect()
}

/// sup over xs × t_set of |t^β ∂_t^β P_t f(x)| / t^α.
pub fn poisson_holder_ratio<F: RealFn>(
    p: &OperatorParams,
    beta: f64,
    alpha: f64,
    f: &F,
    xs: &[f64],
    t_set: &[f64],
    spec: &QuadratureSpec,
) -> Result<HolderRatioReport, AnalysisError> {
    check_alpha(p, beta, alpha)?;
    let src = time_derivative(p, beta, f, spec)?;
    poisson_holder_ratio_with(src.as_ref(), alpha, xs, t_set)
}

pub fn poisson_holder_ratio_with<D: TimeDerivative + ?Sized>(
    src: &D,
    alpha: f64,
    xs: &[f64],
    t_set: &[f64],
) -> Result<HolderRatioReport, AnalysisError> {
    let per_t = t_set
        .par_iter()
        .map(|&t| {
            let mut best: f64 = 0.0;
            for &x in xs {
                best = best.max(src.scaled(x, t)?.norm() / t.powf(alpha));
            }
            Ok((t, best))
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    let sup = per_t.iter().map(|v| v.1).fold(0.0, f64::max);
    Ok(HolderRatioReport { sup, per_t })
}

/// ∫₀^∞∫₀^∞ F_f(x,t) · F_a(x,t) dx dt/t, with F_a conjugated on request.
pub fn polarization_pairing<D1, D2>(
    f: &D1,
    a: &D2,
    conjugate: bool,
    spec: &QuadratureSpec,
) -> Result<Complex64, AnalysisError>
where
    D1: TimeDerivative + ?Sized,
    D2: TimeDerivative + ?Sized,
{
    let inner = spec.tightened(10.0);
    let part = |x: f64, im: bool| -> Result<f64, AnalysisError> {
        let r = kernels::integrate_log_line(
            |t| {
                let fa = a.scaled(x, t)?;
                let fa = if conjugate { fa.conj() } else { fa };
                let v = f.scaled(x, t)? * fa / t;
                Ok::<f64, AnalysisError>(if im { v.im } else { v.re })
            },
            1e-10 * x.min(1.0),
            &[x.min(1.0) * 1e-2, x, 1.0, 4.0 * x.max(1.0)],
            &inner,
        )?;
        Ok(r.value)
    };
    let mut extra = f.x_breakpoints();
    extra.extend(a.x_breakpoints());
    let re = integrate_x(|x| if x <= 0.0 { Ok(0.0) } else { part(x, false) }, &extra, spec)?;
    let im = if f.beta().fract() == 0.0 && a.beta().fract() == 0.0 {
        0.0
    } else {
        integrate_x(|x| if x <= 0.0 { Ok(0.0) } else { part(x, true) }, &extra, spec)?.value
    };
    Ok(Complex64::new(re.value, im))
}

/// e^{2πiβ} Γ(2β)/2^{2β}, the constant of the pairing identity as displayed.
pub fn polarization_constant(beta: f64) -> Result<Complex64, AnalysisError> {
    Ok(Complex64::from_polar(
        specfun::gamma(2.0 * beta)? / 4f64.powf(beta),
        2.0 * PI * beta,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AtomKind {
    /// support in [b, c], zero integral, ‖a‖_∞ ≤ (c−b)^{−1/p}
    Cancellative { b: f64, c: f64 },
    /// a = b^{−1/p} χ_{(0,b)}
    Boundary { b: f64 },
}

/// A (p,∞)-atom of H^p(ℝ₊).
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    kind: AtomKind,
    p: f64,
    height: f64,
}

pub fn make_atom(kind: AtomKind, p: f64) -> Result<Atom, AnalysisError> {
    if !(p > 0.5 && p <= 1.0) {
        return Err(AnalysisError::Precondition(format!(
            "atom exponent must lie in (1/2, 1], got {p}"
        )));
    }
    let height = match kind {
        AtomKind::Cancellative { b, c } => {
            if !(b >= 0.0 && c > b && c.is_finite()) {
                return Err(AnalysisError::Precondition(format!("need 0 ≤ b < c, got ({b}, {c})")));
            }
            (c - b).powf(-1.0 / p)
        }
        AtomKind::Boundary { b } => {
            if !(b > 0.0 && b.is_finite()) {
                return Err(AnalysisError::Precondition(format!("need b > 0, got {b}")));
            }
            b.powf(-1.0 / p)
        }
    };
    Ok(Atom { kind, p, height })
}

impl Atom {
    pub fn kind(&self) -> AtomKind {
        self.kind
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// ‖a‖_∞, equal to the admissible bound by construction.
    pub fn sup_norm(&self) -> f64 {
        self.height
    }

    /// The cancellative profile is h·(bump(x; b+L/4) − bump(x; b+3L/4)) with
    /// bump radius L/4; the two bumps are translates, so ∫a = 0.
    fn bumps(&self) -> Option<(crate::grid::TestFunction, crate::grid::TestFunction)> {
        match self.kind {
            AtomKind::Cancellative { b, c } => {
                let l = c - b;
                let r = l / 4.0;
                let first = test_function(TestKind::Bump {
                    center: b + r,
                    radius: r,
                })
                .ok()?;
                let second = test_function(TestKind::Bump {
                    center: b + 3.0 * r,
                    radius: r,
                })
                .ok()?;
                Some((first, second))
            }
            AtomKind::Boundary { .. } => None,
        }
    }

    /// ∂_t^β P_t^λ a: closed form for boundary atoms at λ = 1.
    pub fn time_derivative<'a>(
        &'a self,
        p: &OperatorParams,
        beta: f64,
        spec: &QuadratureSpec,
    ) -> Result<Box<dyn TimeDerivative + 'a>, AnalysisError> {
        match self.kind {
            AtomKind::Boundary { b } if p.lambda() == 1.0 => {
                Ok(Box::new(IndicatorDerivative::new(b, self.height, beta)?))
            }
            AtomKind::Boundary { .. } => Ok(Box::new(PointwiseDerivative::new(p, beta, self, spec)?)),
            AtomKind::Cancellative { .. } => time_derivative(p, beta, self, spec),
        }
    }
}

impl RealFn for Atom {
    fn value(&self, x: f64) -> f64 {
        match self.kind {
            AtomKind::Boundary { b } => {
                if x > 0.0 && x < b {
                    self.height
                } else {
                    0.0
                }
            }
            AtomKind::Cancellative { .. } => {
                let (f, g) = self.bumps().expect("validated at construction");
                self.height * (f.value(x) - g.value(x))
            }
        }
    }

    fn derivative(&self, x: f64) -> Option<f64> {
        let (f, g) = self.bumps()?;
        Some(self.height * (f.derivative(x)? - g.derivative(x)?))
    }

    fn second_derivative(&self, x: f64) -> Option<f64> {
        let (f, g) = self.bumps()?;
        Some(self.height * (f.second_derivative(x)? - g.second_derivative(x)?))
    }

    fn decaying(&self) -> bool {
        true
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self.kind {
            AtomKind::Boundary { b } => vec![b],
            AtomKind::Cancellative { b, c } => {
                let l = c - b;
                vec![b, b + l / 2.0, c]
            }
        }
    }

    fn effective_support(&self) -> Option<f64> {
        Some(match self.kind {
            AtomKind::Boundary { b } => b,
            AtomKind::Cancellative { c, .. } => c,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(lambda: f64) -> OperatorParams {
        OperatorParams::new(lambda, 0.5).unwrap()
    }

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default().with_tolerances(1e-12, 1e-9)
    }

    fn phi11() -> crate::grid::TestFunction {
        test_function(TestKind::Phi { lambda: 1.0, a: 1.0 }).unwrap()
    }

    #[test]
    fn classical_derivative_matches_finite_difference() {
        let (s, t, h) = (0.7, 0.4, 1e-4);
        let p = |t: f64| kernels::classical_poisson(t, s);
        let fd1 = (p(t + h) - p(t - h)) / (2.0 * h);
        let fd2 = (p(t + h) - 2.0 * p(t) + p(t - h)) / (h * h);
        let k1 = ClassicalPoissonDerivative::new(1.0).unwrap();
        let k2 = ClassicalPoissonDerivative::new(2.0).unwrap();
        assert!((k1.phase.re * k1.kernel(s, t) - fd1).abs() < 1e-7);
        assert!((k2.phase.re * k2.kernel(s, t) - fd2).abs() < 1e-5);
        let cdf = quad::integrate_semi_infinite(|u| k1.kernel(s - u, t), 0.0, &spec())
            .unwrap()
            .value;
        assert!((k1.cdf(s, t) - cdf).abs() < 1e-9);
    }

    #[test]
    fn classical_fractional_derivative_matches_definition() {
        // e^{−iπ(1−β)}/Γ(1−β) ∫₀^∞ ∂_tℙ_{t+r}(s) r^{−β} dr
        let (s, t, beta) = (0.7, 0.4, 0.5);
        let k = ClassicalPoissonDerivative::new(beta).unwrap();
        let k1 = ClassicalPoissonDerivative::new(1.0).unwrap();
        let g = |r: f64| Ok::<f64, QuadError>(-k1.kernel(s, t + r) * r.powf(-beta));
        let head = quad::try_integrate_singular_head(g, 1.0, beta, &spec()).unwrap().value;
        let tail = quad::try_integrate_log_tail(g, 1.0, &spec()).unwrap().value;
        let def = Complex64::from_polar(1.0, -PI * (1.0 - beta)) / specfun::gamma(1.0 - beta).unwrap() * (head + tail);
        let closed = k.phase * k.kernel(s, t);
        assert!((def - closed).norm() < 1e-9 * closed.norm(), "{def} {closed}");
        let g = |u: f64| Ok::<f64, QuadError>(k.kernel(s - u, t));
        let cdf = quad::try_integrate_breaks(g, &[0.0, s, 1.0], &spec()).unwrap().value
            + quad::try_integrate_log_tail(g, 1.0, &spec()).unwrap().value;
        assert!((k.cdf(s, t) - cdf).abs() < 1e-9, "{} {cdf}", k.cdf(s, t));
    }

    #[test]
    fn dirichlet_and_spectral_agree() {
        let f = phi11();
        for beta in [1.0, 0.5] {
            let a = DirichletDerivative::new(&params(1.0), beta, &f, &spec()).unwrap();
            let b = SpectralDerivative::new(&params(1.0), beta, &f, &spec()).unwrap();
            for &(x, t) in &[(0.5, 0.3), (2.0, 1.5)] {
                let (u, v) = (a.derivative(x, t).unwrap(), b.derivative(x, t).unwrap());
                assert!(
                    (u - v).norm() < 1e-6 * v.norm().max(1e-3),
                    "beta={beta} x={x} t={t} {u} {v}"
                );
            }
        }
    }

    #[test]
    fn indicator_closed_form_matches_quadrature() {
        let atom = make_atom(AtomKind::Boundary { b: 1.0 }, 0.8).unwrap();
        let closed = atom.time_derivative(&params(1.0), 1.0, &spec()).unwrap();
        let quad = DirichletDerivative::new(&params(1.0), 1.0, &atom, &spec()).unwrap();
        for &(x, t) in &[(0.5, 0.1), (1.5, 0.7), (3.0, 2.0)] {
            let (u, v) = (closed.derivative(x, t).unwrap(), quad.derivative(x, t).unwrap());
            assert!((u - v).norm() < 1e-8, "x={x} t={t} {u} {v}");
        }
        let loose = QuadratureSpec::default().with_tolerances(1e-10, 1e-7);
        let heat = PointwiseDerivative::new(&params(1.0), 0.5, &atom, &loose).unwrap();
        let closed = IndicatorDerivative::new(1.0, atom.value(0.5), 0.5).unwrap();
        for &(x, t) in &[(0.5, 0.3), (2.0, 1.0)] {
            let (u, v) = (closed.derivative(x, t).unwrap(), heat.derivative(x, t).unwrap());
            assert!((u - v).norm() < 1e-5 * u.norm(), "x={x} t={t} {u} {v}");
        }
    }

    #[test]
    fn atoms_satisfy_their_invariants() {
        let a = make_atom(AtomKind::Boundary { b: 1.0 }, 1.0).unwrap();
        assert_eq!(a.sup_norm(), 1.0);
        assert_eq!(a.value(0.5), 1.0);
        assert_eq!(a.value(1.5), 0.0);
        let c = make_atom(AtomKind::Cancellative { b: 0.0, c: 1.0 }, 1.0).unwrap();
        let integral = quad::integrate_breaks(|x| c.value(x), &[0.0, 0.25, 0.5, 0.75, 1.0], &spec())
            .unwrap()
            .value;
        assert!(integral.abs() < 1e-12);
        let c = make_atom(AtomKind::Cancellative { b: 1.0, c: 3.0 }, 0.8).unwrap();
        assert!((c.value(1.5) - 2f64.powf(-1.25)).abs() < 1e-15);
        assert!(make_atom(AtomKind::Boundary { b: 1.0 }, 0.4).is_err());
    }

    #[test]
    fn zero_input_gives_zero() {
        let z = test_function(TestKind::Zero).unwrap();
        let p = params(2.0);
        assert_eq!(g_function(&p, 1.0, &z, 1.0, &spec()).unwrap(), 0.0);
        assert_eq!(
            area_function(&p, 1.0, &z, ConeSpec::at(1.0).unwrap(), &spec())
                .unwrap()
                .value,
            0.0
        );
        let fam = IntervalFamily::dyadic(0, 1, 2.0).unwrap();
        assert_eq!(carleson_norm(&p, 1.0, 0.3, &z, &fam, &spec()).unwrap().sup, 0.0);
        assert_eq!(
            poisson_holder_ratio(&p, 1.0, 0.3, &z, &[1.0], &[0.1], &spec())
                .unwrap()
                .sup,
            0.0
        );
    }

    #[test]
    fn holder_ratio_is_linear() {
        let p = params(1.0);
        let h = test_function(TestKind::Holder { alpha: 0.3 }).unwrap();
        let h2 = h.scaled(2.0);
        let xs = [0.1, 0.5, 1.0, 2.0];
        let ts = default_t_set(4);
        let a = poisson_holder_ratio(&p, 1.0, 0.3, &h, &xs, &ts, &spec()).unwrap().sup;
        let b = poisson_holder_ratio(&p, 1.0, 0.3, &h2, &xs, &ts, &spec()).unwrap().sup;
        assert!((b - 2.0 * a).abs() < 1e-9 * b, "a={a} b={b}");
    }

    #[test]
    fn dyadic_family_shape() {
        let fam = IntervalFamily::dyadic(0, 1, 2.0).unwrap();
        assert_eq!(
            fam.intervals(),
            &[(0.0, 1.0), (1.0, 2.0), (0.0, 0.5), (0.5, 1.0), (1.0, 1.5), (1.5, 2.0)]
        );
        assert_eq!(
            IntervalFamily::dyadic(-1, -1, 3.0).unwrap().intervals(),
            &[(0.0, 2.0), (2.0, 3.0)]
        );
    }

    #[test]
    fn carleson_sup_is_monotone_in_the_family() {
        let p = params(1.0);
        let h = test_function(TestKind::Holder { alpha: 0.3 }).unwrap();
        let small = IntervalFamily::dyadic(1, 1, 1.0).unwrap();
        let big = small.union(&IntervalFamily::dyadic(0, 0, 2.0).unwrap());
        let spec = QuadratureSpec::default().with_tolerances(1e-9, 1e-6);
        let a = carleson_norm(&p, 1.0, 0.3, &h, &small, &spec).unwrap().sup;
        let b = carleson_norm(&p, 1.0, 0.3, &h, &big, &spec).unwrap().sup;
        assert!(a > 0.0 && b >= a);
    }

    #[test]
    fn g_identity_at_beta_one() {
        let f = phi11();
        let spec = QuadratureSpec::default().with_tolerances(1e-10, 1e-6);
        let r = g_identity(&params(1.0), 1.0, &f, &spec).unwrap();
        assert!((r.ratio / r.plancherel_constant - 1.0).abs() < 1e-3, "{r:?}");
    }

    #[test]
    fn alpha_hypothesis_is_enforced() {
        let h = test_function(TestKind::Holder { alpha: 0.3 }).unwrap();
        let fam = IntervalFamily::default_dyadic();
        assert!(matches!(
            carleson_norm(&params(1.0), 0.2, 0.3, &h, &fam, &spec()),
            Err(AnalysisError::Precondition(_))
        ));
    }
}
