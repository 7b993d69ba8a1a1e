//! Heat and Poisson semigroups, Segovia–Wheeden time derivatives, the
//! fractional powers Δ_λ^{±σ} and the extension problem.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::grid::{l_rho_norm, GridError, OperatorParams, PowerTimes, RealFn};
use crate::kernels::{self, KernelError};
use crate::quad::{self, QuadError, QuadResult, QuadratureSpec};
use crate::specfun::{self, SpecfunError};
use crate::transforms::{HankelTable, SpectralMultiplier, TransformError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("quadrature did not converge (value {value}, error {err_est})")]
    NotConverged { value: f64, err_est: f64 },
    #[error("extrapolation did not stabilise: {0:?}")]
    Unstable(Vec<f64>),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
}

/// A computed value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpValue {
    pub value: f64,
    pub err_est: f64,
}

impl OpValue {
    fn exact(value: f64) -> Self {
        Self { value, err_est: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RouteTag {
    Spectral,
    Heat,
    Poisson,
    Pointwise,
}

impl RouteTag {
    pub const ALL: [RouteTag; 4] = [
        RouteTag::Spectral,
        RouteTag::Heat,
        RouteTag::Poisson,
        RouteTag::Pointwise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RouteTag::Spectral => "spectral",
            RouteTag::Heat => "heat",
            RouteTag::Poisson => "poisson",
            RouteTag::Pointwise => "pointwise",
        }
    }

    /// Whether the route can evaluate Δ_λ^σ u for this σ and input class.
    pub fn admissible<F: RealFn>(self, sigma: f64, u: &F) -> Result<(), OperatorError> {
        match self {
            RouteTag::Poisson if sigma >= 0.5 => Err(OperatorError::Precondition(format!(
                "poisson route needs 0 < sigma < 1/2, got sigma = {sigma}"
            ))),
            RouteTag::Spectral if !u.decaying() => Err(OperatorError::Precondition(
                "spectral route needs a Gaussian-type or compactly supported input".into(),
            )),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for RouteTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RouteTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "spectral" => Ok(RouteTag::Spectral),
            "heat" => Ok(RouteTag::Heat),
            "poisson" => Ok(RouteTag::Poisson),
            "pointwise" => Ok(RouteTag::Pointwise),
            other => Err(format!("unknown route '{other}'")),
        }
    }
}

/// β > 0 with m − 1 ≤ β < m, or m = β for integer β.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracDerivSpec {
    beta: f64,
    m: u32,
}

impl FracDerivSpec {
    pub fn new(beta: f64) -> Result<Self, OperatorError> {
        if !(beta > 0.0 && beta < 64.0) {
            return Err(OperatorError::Precondition(format!(
                "beta must be positive, got {beta}"
            )));
        }
        let m = if beta.fract() == 0.0 {
            beta as u32
        } else {
            beta.floor() as u32 + 1
        };
        Ok(Self { beta, m })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn is_integer(&self) -> bool {
        self.beta == self.m as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtensionPoint {
    x: f64,
    y: f64,
}

impl ExtensionPoint {
    pub fn new(x: f64, y: f64) -> Result<Self, OperatorError> {
        if !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()) {
            return Err(OperatorError::Precondition(format!(
                "extension point needs x, y > 0, got ({x}, {y})"
            )));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }
}

fn accept(r: QuadResult<f64>, spec: &QuadratureSpec) -> Result<QuadResult<f64>, OperatorError> {
    if r.converged || (r.value.is_finite() && r.err_est <= 10.0 * spec.tolerance_for(r.value)) {
        Ok(r)
    } else {
        Err(OperatorError::NotConverged {
            value: r.value,
            err_est: r.err_est,
        })
    }
}

fn positive(name: &str, v: f64) -> Result<(), OperatorError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(OperatorError::Precondition(format!("{name} must be positive, got {v}")))
    }
}

fn y_points<F: RealFn>(t: f64, x: f64, f: &F) -> Vec<f64> {
    let mut pts = kernels::heat_y_points(t, x);
    pts.extend(f.breakpoints().into_iter().filter(|b| *b > 0.0));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

fn first_derivative<F: RealFn>(u: &F, x: f64) -> f64 {
    u.derivative(x).unwrap_or_else(|| {
        let h = 1e-4 * x.min(1.0);
        (u.value(x - 2.0 * h) - 8.0 * u.value(x - h) + 8.0 * u.value(x + h) - u.value(x + 2.0 * h)) / (12.0 * h)
    })
}

fn second_derivative<F: RealFn>(u: &F, x: f64) -> f64 {
    u.second_derivative(x).unwrap_or_else(|| {
        let h = 1e-3 * x.min(1.0);
        (-u.value(x - 2.0 * h) + 16.0 * u.value(x - h) - 30.0 * u.value(x) + 16.0 * u.value(x + h)
            - u.value(x + 2.0 * h))
            / (12.0 * h * h)
    })
}

/// W_t^λ f(x) = ∫₀^∞ W_t^λ(x,y) f(y) dy.
pub fn heat_apply<F: RealFn>(
    p: &OperatorParams,
    t: f64,
    f: &F,
    x: f64,
    spec: &QuadratureSpec,
) -> Result<OpValue, OperatorError> {
    positive("t", t)?;
    positive("x", x)?;
    if f.is_zero() {
        return Ok(OpValue::exact(0.0));
    }
    let nu = p.nu();
    let r = quad::try_integrate_half_line(
        |y: f64| {
            Ok::<f64, QuadError>(if y > 0.0 {
                kernels::heat_raw(nu, t, x, y).0 * f.value(y)
            } else {
                0.0
            })
        },
        &y_points(t, x, f),
        spec,
    )?;
    let r = accept(r, spec)?;
    Ok(OpValue {
        value: r.value,
        err_est: r.err_est,
    })
}

/// W_t u(x) − u(x) = ∫𝕎_t(x−y)(u(y)−u(x)) dy + ∫𝕎_t(x−y)Ψ_ν u(y) dy
/// − u(x)·½erfc(x/2√t), free of the cancellation in the plain difference.
pub fn heat_difference<F: RealFn>(
    p: &OperatorParams,
    t: f64,
    u: &F,
    x: f64,
    spec: &QuadratureSpec,
) -> Result<f64, OperatorError> {
    positive("t", t)?;
    positive("x", x)?;
    if u.is_zero() {
        return Ok(0.0);
    }
    let ux = u.value(x);
    if t >= x * x {
        return Ok(heat_apply(p, t, u, x, spec)?.value - ux);
    }
    let nu = p.nu();
    let r = quad::try_integrate_half_line(
        |y: f64| {
            if y <= 0.0 {
                return Ok::<f64, QuadError>(0.0);
            }
            let uy = u.value(y);
            Ok(kernels::gauss_weierstrass(t, x - y) * (uy - ux) + kernels::heat_deviation_raw(nu, t, x, y) * uy)
        },
        &y_points(t, x, u),
        spec,
    )?;
    let r = accept(r, spec)?;
    Ok(r.value - ux * 0.5 * specfun::erfc(x / (2.0 * t.sqrt())))
}

/// How P_t f is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoissonForm {
    /// (2/√π) ∫ e^{−ρ²} W_{t²/4ρ²} f dρ
    Subordinated,
    /// ∫ P_t(x,y) f(y) dy with the subordinated kernel
    Kernel,
}

const RHO_MAX: f64 = 6.5;

/// ρ-breakpoints: W_{t²/4ρ²}f(x) changes on the scale ρ ~ t, so small t
/// needs a geometric ladder from t up to O(1).
fn rho_points(t: f64, x: f64) -> Vec<f64> {
    let mut pts = vec![0.0, 0.5, 1.0, 3.0, RHO_MAX];
    for s in [t / 2.0, t / (2.0 * x)] {
        if s < RHO_MAX {
            pts.push(s);
        }
    }
    let mut r = t / 16.0;
    while r < 1.0 {
        pts.push(r);
        r *= 2.0;
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// P_t^λ f(x).
pub fn poisson_apply<F: RealFn>(
    p: &OperatorParams,
    t: f64,
    f: &F,
    x: f64,
    form: PoissonForm,
    spec: &QuadratureSpec,
) -> Result<OpValue, OperatorError> {
    positive("t", t)?;
    positive("x", x)?;
    if f.is_zero() {
        return Ok(OpValue::exact(0.0));
    }
    let inner = spec.tightened(10.0);
    let r = match form {
        PoissonForm::Subordinated => {
            let c = 2.0 / PI.sqrt();
            // ρ > 6.5 carries less than e^{−42} of the weight
            quad::try_integrate_breaks(
                |rho: f64| {
                    if rho == 0.0 {
                        return Ok::<f64, OperatorError>(0.0);
                    }
                    let s = t * t / (4.0 * rho * rho);
                    if !s.is_finite() {
                        return Ok(0.0);
                    }
                    Ok(c * (-rho * rho).exp() * heat_apply(p, s, f, x, &inner)?.value)
                },
                &rho_points(t, x),
                spec,
            )?
        }
        PoissonForm::Kernel => {
            let mut pts = vec![0.0, x, (x - t).max(0.0), x + t];
            pts.extend(f.breakpoints().into_iter().filter(|b| *b > 0.0));
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            quad::try_integrate_half_line(
                |y: f64| {
                    if y <= 0.0 {
                        return Ok::<f64, OperatorError>(0.0);
                    }
                    let fy = f.value(y);
                    if fy == 0.0 {
                        return Ok(0.0);
                    }
                    Ok(kernels::poisson_kernel(p, t, x, y, &inner)?.value * fy)
                },
                &pts,
                spec,
            )?
        }
    };
    let r = accept(r, spec)?;
    Ok(OpValue {
        value: r.value,
        err_est: r.err_est,
    })
}

/// P_t u(x) − u(x) = (2/√π) ∫ e^{−ρ²} (W_{t²/4ρ²} u − u)(x) dρ.
fn poisson_difference<F: RealFn>(
    p: &OperatorParams,
    t: f64,
    u: &F,
    x: f64,
    spec: &QuadratureSpec,
) -> Result<f64, OperatorError> {
    let inner = spec.tightened(10.0);
    let c = 2.0 / PI.sqrt();
    let ux = u.value(x);
    let r = quad::try_integrate_breaks(
        |rho: f64| {
            if rho == 0.0 {
                return Ok::<f64, OperatorError>(-c * ux);
            }
            let s = t * t / (4.0 * rho * rho);
            if !s.is_finite() {
                return Ok(-c * (-rho * rho).exp() * ux);
            }
            Ok(c * (-rho * rho).exp() * heat_difference(p, s, u, x, &inner)?)
        },
        &rho_points(t, x),
        spec,
    )?;
    // the omitted ρ > 6.5 piece is −u(x)·erfc(6.5) ≈ 0
    Ok(accept(r, spec)?.value)
}

/// Δ_λ^σ u(x) along the chosen route.
pub fn frac_power<F: RealFn>(
    p: &OperatorParams,
    u: &F,
    x: f64,
    route: RouteTag,
    spec: &QuadratureSpec,
) -> Result<OpValue, OperatorError> {
    positive("x", x)?;
    route.admissible(p.sigma(), u)?;
    if u.is_zero() {
        return Ok(OpValue::exact(0.0));
    }
    match route {
        RouteTag::Spectral => {
            let table = HankelTable::new(p.lambda(), u, spec)?;
            frac_power_spectral(&table, p.sigma(), x)
        }
        RouteTag::Heat => frac_power_heat(p, u, x, spec),
        RouteTag::Poisson => frac_power_poisson(p, u, x, spec),
        RouteTag::Pointwise => frac_power_pointwise(p, u, x, spec),
    }
}

/// Δ_λ^σ u at several points; the spectral table is built once.
pub fn frac_power_many<F: RealFn>(
    p: &OperatorParams,
    u: &F,
    xs: &[f64],
    route: RouteTag,
    spec: &QuadratureSpec,
) -> Result<Vec<Result<OpValue, OperatorError>>, OperatorError> {
    route.admissible(p.sigma(), u)?;
    if route == RouteTag::Spectral && !u.is_zero() {
        let table = HankelTable::new(p.lambda(), u, spec)?;
        return Ok(xs
            .par_iter()
            .map(|&x| frac_power_spectral(&table, p.sigma(), x))
            .collect());
    }
    Ok(xs.par_iter().map(|&x| frac_power(p, u, x, route, spec)).collect())
}

/// h_λ(y^{2σ} h_λ u)(x) from a prepared table.
pub fn frac_power_spectral(table: &HankelTable, sigma: f64, x: f64) -> Result<OpValue, OperatorError> {
    let v = table.apply_real(&SpectralMultiplier::power(2.0 * sigma), x)?;
    Ok(OpValue {
        value: v,
        err_est: 1e-9 * v.abs().max(1e-12),
    })
}

/// (1/Γ(−σ)) [∫₀¹ (W_t u − u) t^{−1−σ} dt + ∫₁^∞ W_t u t^{−1−σ} dt − u(x)/σ].
fn frac_power_heat<F: RealFn>(
    p: &OperatorParams,
    u: &F,
    x: f64,
    spec: &QuadratureSpec,
) -> Result<OpValue, OperatorError> {
    let sigma = p.sigma();
    let inner = spec.tightened(10.0);
    let head = kernels::difference_head(
        |t| heat_difference(p, t, u, x, &inner),
        sigma,
        1e-6 * (x * x).min(1.0),
        1.0,
        spec,
    )?;
    let head = accept(head, spec)?;
    let tail = quad::try_integrate_log_tail(
        |t: f64| Ok::<f64, OperatorError>(heat_apply(p, t, u, x, &inner)?.value * t.powf(-1.0 - sigma)),
        1.0,
        spec,
    )?;
    let tail = accept(tail, spec)?;
    let c = -kernels::inv_neg_gamma_neg(sigma)?;
    Ok(OpValue {
        value: c * (head.value + tail.value - u.value(x) / sigma),
        err_est: c.abs() * (head.err_est + tail.err_est),
    })
}

/// (1/Γ(−2σ)) [∫₀¹ (P_t u − u) t^{−1−2σ} dt + ∫₁^∞ P_t u t^{−1−2σ} dt − u(x)/2σ].
fn frac_power_poisson<F: RealFn>(
    p: &OperatorParams,
    u: &F,
    x: f64,
    spec: &QuadratureSpec,
) -> Result<OpValue, OperatorError> {
    let s2 = 2.0 * p.sigma();
    let inner = spec.tightened(10.0);
    let head = kernels::difference_head(
        |t| poisson_difference(p, t, u, x, &inner),
        s2,
        1e-6 * x.min(1.0),
        1.0,
        spec,
    )?;
    let head = accept(head, spec)?;
    let tail = quad::try_integrate_log_tail(
        |t: f64| {
            Ok::<f64, OperatorError>(
                poisson_apply(p, t, u, x, PoissonForm::Subordinated, &inner)?.value * t.powf(-1.0 - s2),
            )
        },
        1.0,
        spec,
    )?;
    let tail = accept(tail, spec)?;
    let c = -kernels::inv_neg_gamma_neg(s2)?;
    Ok(OpValue {
        value: c * (head.value + tail.value - u.value(x) / s2),
        err_est: c.abs() * (head.err_est + tail.err_est),
    })
}

/// ∫(u(x)−u(y))K dy + u(x)B(x), with the compensated form
/// ∫(u(x)−u(y)−u′(x)(x−y)χ_{|x−y|≤1})K dy + uB + u′C for σ ≥ 1/2.
///
/// The y-integral pairs y = x ± d on d < x. Below d = δ the pair is replaced
/// by its Taylor limit −u″(x) d² · c|d|^{−1−2σ}, exact up to O(δ²).
fn frac_power_pointwise<F: RealFn>(
    p: &OperatorParams,
    u: &F,
    x: f64,
    spec: &QuadratureSpec,
) -> Result<OpValue, OperatorError> {
    let sigma = p.sigma();
    let compensated = sigma >= 0.5;
    let inner = spec.tightened(10.0);
    let ux = u.value(x);
    let du = if compensated { first_derivative(u, x) } else { 0.0 };
    let k = |y: f64| -> Result<f64, OperatorError> { Ok(kernels::k_sigma(p, x, y, &inner)?.value) };
    let numer = |y: f64| -> f64 {
        let chi = if compensated && (x - y).abs() <= 1.0 { 1.0 } else { 0.0 };
        ux - u.value(y) - du * (x - y) * chi
    };

    let delta = 1e-3 * x.min(1.0);
    let c = kernels::dirichlet_kernel_constant(sigma)?;
    let near = -c * second_derivative(u, x) * delta.powf(2.0 - 2.0 * sigma) / (2.0 - 2.0 * sigma);

    // paired part in w = ln d
    let (w0, w1) = (delta.ln(), x.ln());
    let mut ws = vec![w0, w1];
    let mut w = w0.ceil();
    while w < w1 {
        ws.push(w);
        w += 1.0;
    }
    for b in u.breakpoints() {
        let d = (b - x).abs();
        if d > delta && d < x {
            ws.push(d.ln());
        }
    }
    ws.sort_by(f64::total_cmp);
    ws.dedup();
    let paired = quad::try_integrate_breaks(
        |w: f64| {
            let d = w.exp();
            let a = numer(x - d);
            let b = numer(x + d);
            let mut s = 0.0;
            if a != 0.0 {
                s += a * k(x - d)?;
            }
            if b != 0.0 {
                s += b * k(x + d)?;
            }
            Ok::<f64, OperatorError>(s * d)
        },
        &ws,
        spec,
    )?;
    let paired = accept(paired, spec)?;

    // one-sided part y > 2x
    let y1 = (x + 1.0).max(4.0 * x);
    let mut pts = vec![2.0 * x, y1];
    if compensated && x + 1.0 > 2.0 * x {
        pts.push(x + 1.0);
    }
    pts.extend(u.breakpoints().into_iter().filter(|b| *b > 2.0 * x && *b < y1));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let body = quad::try_integrate_breaks(|y: f64| Ok::<f64, OperatorError>(numer(y) * k(y)?), &pts, spec)?;
    let body = accept(body, spec)?;
    let tail = quad::try_integrate_log_tail(|y: f64| Ok::<f64, OperatorError>(numer(y) * k(y)?), y1, spec)?;
    let tail = accept(tail, spec)?;

    let mut value = near + paired.value + body.value + tail.value + ux * kernels::b_sigma(p, x, &inner)?;
    if compensated && du != 0.0 {
        value += du * kernels::c_sigma_compensator(p, x, &inner)?;
    }
    Ok(OpValue {
        value,
        err_est: paired.err_est + body.err_est + tail.err_est + inner.tolerance_for(value),
    })
}

/// Which representation evaluates Δ_λ^{−σ}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NegPowerForm {
    /// (1/Γ(2σ)) ∫₀^∞ P_t f t^{2σ−1} dt
    Poisson,
    /// (1/Γ(σ)) ∫₀^∞ W_s f s^{σ−1} ds, the same integral after subordination
    Heat,
    /// h_λ(y^{−2σ} h_λ f)
    Spectral,
}

/// Δ_λ^{−σ} f(x) through the heat form, which needs one nested quadrature
/// less than the Poisson form it is equivalent to.
pub fn neg_power<F: RealFn>(
    p: &OperatorParams,
    f: &F,
    x: f64,
    spec: &QuadratureSpec,
) -> Result<OpValue, OperatorError> {
    neg_power_with(p, f, x, NegPowerForm::Heat, spec)
}

pub fn neg_power_with<F: RealFn>(
    p: &OperatorParams,
    f: &F,
    x: f64,
    form: NegPowerForm,
    spec: &QuadratureSpec,
) -> Result<OpValue, OperatorError> {
    positive("x", x)?;
    if f.is_zero() {
        return Ok(OpValue::exact(0.0));
    }
    let sigma = p.sigma();
    let inner = spec.tightened(10.0);
    let (value, err) = match form {
        NegPowerForm::Spectral => {
            let table = HankelTable::new(p.lambda(), f, spec)?;
            let v = table.apply_real(&SpectralMultiplier::power(-2.0 * sigma), x)?;
            (v, 1e-9 * v.abs())
        }
        NegPowerForm::Heat => {
            let g = |s: f64| Ok::<f64, OperatorError>(heat_apply(p, s, f, x, &inner)?.value * s.powf(sigma - 1.0));
            let head = accept(quad::try_integrate_singular_head(g, 1.0, 1.0 - sigma, spec)?, spec)?;
            let tail = accept(quad::try_integrate_log_tail(g, 1.0, spec)?, spec)?;
            let c = 1.0 / specfun::gamma(sigma)?;
            (c * (head.value + tail.value), c * (head.err_est + tail.err_est))
        }
        NegPowerForm::Poisson => {
            let s2 = 2.0 * sigma;
            let g = |t: f64| {
                Ok::<f64, OperatorError>(
                    poisson_apply(p, t, f, x, PoissonForm::Subordinated, &inner)?.value * t.powf(s2 - 1.0),
                )
            };
            let head = accept(quad::try_integrate_singular_head(g, 1.0, 1.0 - s2, spec)?, spec)?;
            let tail = accept(quad::try_integrate_log_tail(g, 1.0, spec)?, spec)?;
            let c = 1.0 / specfun::gamma(s2)?;
            (c * (head.value + tail.value), c * (head.err_est + tail.err_est))
        }
    };
    Ok(OpValue { value, err_est: err })
}

/// The Schauder-estimate hypotheses α + 2σ < λ̃ and f ∈ L_σ.
pub fn neg_power_hypotheses<F: RealFn>(p: &OperatorParams, f: &F, alpha: f64, spec: &QuadratureSpec) -> Vec<String> {
    let mut out = Vec::new();
    if !(alpha + 2.0 * p.sigma() < p.lambda_tilde()) {
        out.push(format!(
            "alpha + 2 sigma = {} is not below min(lambda, 1) = {}",
            alpha + 2.0 * p.sigma(),
            p.lambda_tilde()
        ));
    }
    if l_rho_norm(f, p.sigma(), spec).is_err() {
        out.push(format!("f is not in L_rho for rho = sigma = {}", p.sigma()));
    }
    out
}

/// Advisory checks of the representation hypotheses of each route.
pub fn route_hypotheses<F: RealFn>(p: &OperatorParams, u: &F, route: RouteTag, spec: &QuadratureSpec) -> Vec<String> {
    let mut out = Vec::new();
    if let Err(e) = route.admissible(p.sigma(), u) {
        out.push(e.to_string());
    }
    if matches!(route, RouteTag::Heat | RouteTag::Poisson | RouteTag::Pointwise)
        && l_rho_norm(u, p.sigma(), spec).is_err()
    {
        out.push(format!("u is not in L_sigma for sigma = {}", p.sigma()));
    }
    if route == RouteTag::Pointwise && p.sigma() >= 0.5 && u.derivative(1.0).is_none() {
        out.push("compensated pointwise form uses a finite-difference u'".into());
    }
    out
}

/// x^{−λ} Δ_λ^σ(y^λ ψ)(x) with λ = (N−1)/2: the radial (−Δ)^σ on ℝᴺ.
pub fn radial_frac_laplacian<F: RealFn>(
    n: u32,
    sigma: f64,
    psi: &F,
    x: f64,
    route: RouteTag,
    spec: &QuadratureSpec,
) -> Result<OpValue, OperatorError> {
    if n < 2 {
        return Err(OperatorError::Precondition(format!(
            "dimension must be at least 2, got {n}"
        )));
    }
    let lambda = (n as f64 - 1.0) / 2.0;
    let p = OperatorParams::new(lambda, sigma)?;
    let g = PowerTimes { lambda, profile: psi };
    let v = frac_power(&p, &g, x, route, spec)?;
    let s = x.powf(-lambda);
    Ok(OpValue {
        value: s * v.value,
        err_est: s * v.err_est,
    })
}

/// Δ_λ u = −u″ + λ(λ−1)x^{−2}u for u with an analytic second derivative.
pub struct BesselLaplacian<F> {
    pub lambda: f64,
    pub u: F,
}

impl<F: RealFn> RealFn for BesselLaplacian<F> {
    fn value(&self, x: f64) -> f64 {
        -second_derivative(&self.u, x) + self.lambda * (self.lambda - 1.0) / (x * x) * self.u.value(x)
    }

    fn decaying(&self) -> bool {
        self.u.decaying()
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.u.breakpoints()
    }

    fn effective_support(&self) -> Option<f64> {
        self.u.effective_support()
    }

    fn is_zero(&self) -> bool {
        self.u.is_zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaEnd {
    Zero,
    One,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaProbe {
    pub values: Vec<(f64, f64)>,
    pub target: f64,
}

/// Δ_λ^σ u(x) along σ → 0⁺ or σ → 1⁻, with the limit u(x) or Δ_λ u(x).
pub fn sigma_limit_probe<F: RealFn>(
    lambda: f64,
    u: &F,
    x: f64,
    end: SigmaEnd,
    route: RouteTag,
    spec: &QuadratureSpec,
) -> Result<SigmaProbe, OperatorError> {
    let near = [0.2, 0.1, 0.05, 0.02, 0.01];
    let sigmas: Vec<f64> = match end {
        SigmaEnd::Zero => near.to_vec(),
        SigmaEnd::One => near.iter().map(|s| 1.0 - s).collect(),
    };
    let target = match end {
        SigmaEnd::Zero => u.value(x),
        SigmaEnd::One => -second_derivative(u, x) + lambda * (lambda - 1.0) / (x * x) * u.value(x),
    };
    let values = sigmas
        .par_iter()
        .map(|&s| {
            let p = OperatorParams::new(lambda, s)?;
            Ok((s, frac_power(&p, u, x, route, spec)?.value))
        })
        .collect::<Result<Vec<_>, OperatorError>>()?;
    Ok(SigmaProbe { values, target })
}

/// d^m/dt^m P_t f(x) from the Hermite form
/// (1/√π)(−1/2)^{m−1} ∫ H_{m−1}(t/2√v) e^{−t²/4v} v^{−m/2} ∂_v W_v f(x) dv.
pub fn poisson_t_derivative<F: RealFn>(
    p: &OperatorParams,
    m: u32,
    f: &F,
    x: f64,
    t: f64,
    spec: &QuadratureSpec,
) -> Result<f64, OperatorError> {
    positive("t", t)?;
    positive("x", x)?;
    if m == 0 {
        return Ok(poisson_apply(p, t, f, x, PoissonForm::Subordinated, spec)?.value);
    }
    if f.is_zero() {
        return Ok(0.0);
    }
    let nu = p.nu();
    let inner = spec.tightened(10.0);
    let dv_apply = |v: f64| -> Result<f64, OperatorError> {
        let r = quad::try_integrate_half_line(
            |y: f64| {
                Ok::<f64, QuadError>(if y > 0.0 {
                    kernels::heat_dv_raw(nu, v, x, y) * f.value(y)
                } else {
                    0.0
                })
            },
            &y_points(v, x, f),
            &inner,
        )?;
        Ok(accept(r, spec)?.value)
    };
    let c = (-0.5f64).powi(m as i32 - 1) / PI.sqrt();
    let mut scales = vec![t * t / 4.0, x * x, 1.0];
    scales.extend(
        f.breakpoints()
            .into_iter()
            .filter(|b| *b > 0.0)
            .map(|b| (b - x) * (b - x)),
    );
    let r = kernels::integrate_log_line(
        |v| {
            let r = t / (2.0 * v.sqrt());
            let w = (-r * r).exp();
            if w == 0.0 {
                return Ok::<f64, OperatorError>(0.0);
            }
            Ok(specfun::hermite(m - 1, r) * w * v.powf(-0.5 * m as f64) * dv_apply(v)?)
        },
        t * t / 400.0,
        &scales,
        spec,
    )?;
    Ok(c * accept(r, spec)?.value)
}

/// ∂_t^β P_t f(x) from the Segovia–Wheeden definition
/// e^{−iπ(m−β)}/Γ(m−β) ∫₀^∞ ∂_t^m P_{t+s} f(x) s^{m−β−1} ds.
pub fn frac_deriv_poisson<F: RealFn>(
    p: &OperatorParams,
    d: FracDerivSpec,
    f: &F,
    x: f64,
    t: f64,
    spec: &QuadratureSpec,
) -> Result<Complex64, OperatorError> {
    if d.is_integer() {
        return Ok(Complex64::new(poisson_t_derivative(p, d.m(), f, x, t, spec)?, 0.0));
    }
    let m = d.m();
    let a = m as f64 - d.beta();
    let inner = spec.tightened(10.0);
    let g = |s: f64| {
        // |∂_t^m P_t f| ≤ C t^{−m}‖f‖_∞, so s > 1e100 contributes below 1e−100^β
        if s > 1e100 * (t + x) {
            return Ok(0.0);
        }
        Ok::<f64, OperatorError>(poisson_t_derivative(p, m, f, x, t + s, &inner)? * s.powf(a - 1.0))
    };
    let head = accept(quad::try_integrate_singular_head(g, t, 1.0 - a, spec)?, spec)?;
    let tail = accept(quad::try_integrate_log_tail(g, t, spec)?, spec)?;
    let phase = Complex64::from_polar(1.0, -PI * a) / specfun::gamma(a)?;
    Ok(phase * (head.value + tail.value))
}

/// ∂_t^β P_t f(x) through the Hankel multiplier e^{iπβ} y^β e^{−ty}.
pub fn frac_deriv_poisson_spectral(
    table: &HankelTable,
    d: FracDerivSpec,
    x: f64,
    t: f64,
) -> Result<Complex64, OperatorError> {
    Ok(table.apply(&SpectralMultiplier::frac_deriv_poisson(d.beta(), t), x)?)
}

/// u(x,y) = y^{2σ}/(4^σΓ(σ)) ∫₀^∞ e^{−y²/4t} W_t f(x) t^{−1−σ} dt, written as
/// f(x) + y^{2σ}/(4^σΓ(σ)) ∫ e^{−y²/4t} (W_t f − f)(x) t^{−1−σ} dt.
pub fn extension_solve<F: RealFn>(
    p: &OperatorParams,
    f: &F,
    pt: ExtensionPoint,
    spec: &QuadratureSpec,
) -> Result<f64, OperatorError> {
    let (x, y) = (pt.x(), pt.y());
    if f.is_zero() {
        return Ok(0.0);
    }
    let sigma = p.sigma();
    let inner = spec.tightened(10.0);
    let c = y.powf(2.0 * sigma) / (4f64.powf(sigma) * specfun::gamma(sigma)?);
    let r = kernels::integrate_log_line(
        |t| {
            let w = (-y * y / (4.0 * t)).exp();
            if w == 0.0 {
                return Ok::<f64, OperatorError>(0.0);
            }
            Ok(w * heat_difference(p, t, f, x, &inner)? * t.powf(-1.0 - sigma))
        },
        y * y / 400.0,
        &[y * y / 4.0, x * x, 1.0],
        spec,
    )?;
    Ok(f.value(x) + c * accept(r, spec)?.value)
}

/// u_yy + (1−2σ)/y u_y − Δ_λ u at pt, with y-derivatives from 5-point
/// stencils of step h and Δ_λ u the extension of Δ_λ f. Returns
/// (residual, largest term) so callers can form a relative residual.
pub fn extension_residual<F: RealFn + Clone>(
    p: &OperatorParams,
    f: &F,
    pt: ExtensionPoint,
    h: f64,
    spec: &QuadratureSpec,
) -> Result<(f64, f64), OperatorError> {
    let (x, y) = (pt.x(), pt.y());
    if !(h > 0.0 && h < y / 2.0) {
        return Err(OperatorError::Precondition(format!("step {h} must lie in (0, y/2)")));
    }
    let u = |yy: f64| extension_solve(p, f, ExtensionPoint::new(x, yy)?, spec);
    let (um2, um1, u0, up1, up2) = (u(y - 2.0 * h)?, u(y - h)?, u(y)?, u(y + h)?, u(y + 2.0 * h)?);
    let uy = (um2 - 8.0 * um1 + 8.0 * up1 - up2) / (12.0 * h);
    let uyy = (-um2 + 16.0 * um1 - 30.0 * u0 + 16.0 * up1 - up2) / (12.0 * h * h);
    let lap_f = BesselLaplacian {
        lambda: p.lambda(),
        u: f.clone(),
    };
    let lap_u = extension_solve(p, &lap_f, pt, spec)?;
    let drift = (1.0 - 2.0 * p.sigma()) / y * uy;
    let scale = uyy.abs().max(drift.abs()).max(lap_u.abs());
    Ok((uyy + drift - lap_u, scale))
}

/// The y → 0 limit of y^{1−2σ} ∂_y u(x,y), extrapolated.
#[derive(Debug, Clone, PartialEq)]
pub struct NeumannTrace {
    pub raw_trace: f64,
    pub samples: Vec<(f64, f64)>,
}

/// y^{1−2σ} u_y = (1/4^σΓ(σ)) ∫ (2σ − y²/2t) e^{−y²/4t} (W_t f − f)(x) t^{−1−σ} dt
/// (the f(x) part integrates to zero), sampled at y = 0.1·2^{−k} and
/// Richardson-extrapolated in the exponents 2−2σ, 2 and 4−2σ.
pub fn neumann_trace<F: RealFn>(
    p: &OperatorParams,
    f: &F,
    x: f64,
    spec: &QuadratureSpec,
) -> Result<NeumannTrace, OperatorError> {
    positive("x", x)?;
    if f.is_zero() {
        return Ok(NeumannTrace {
            raw_trace: 0.0,
            samples: Vec::new(),
        });
    }
    let sigma = p.sigma();
    let inner = spec.tightened(10.0);
    let c = 1.0 / (4f64.powf(sigma) * specfun::gamma(sigma)?);
    let ys: Vec<f64> = (0..9).map(|k| 0.1 * 0.5f64.powi(k)).collect();
    let samples = ys
        .par_iter()
        .map(|&y| {
            let r = kernels::integrate_log_line(
                |t| {
                    let w = (-y * y / (4.0 * t)).exp();
                    if w == 0.0 {
                        return Ok::<f64, OperatorError>(0.0);
                    }
                    let d = heat_difference(p, t, f, x, &inner)?;
                    Ok((2.0 * sigma - y * y / (2.0 * t)) * w * d * t.powf(-1.0 - sigma))
                },
                y * y / 400.0,
                &[y * y / 4.0, x * x, 1.0],
                spec,
            )?;
            Ok((y, c * accept(r, spec)?.value))
        })
        .collect::<Result<Vec<_>, OperatorError>>()?;
    let richardson = |vals: &[f64], q: f64| -> Vec<f64> {
        let r = 2f64.powf(q);
        vals.windows(2).map(|w| (r * w[1] - w[0]) / (r - 1.0)).collect()
    };
    let raw: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let once = richardson(&raw, 2.0 - 2.0 * sigma);
    let twice = richardson(&once, 2.0);
    let thrice = richardson(&twice, 4.0 - 2.0 * sigma);
    let n = thrice.len();
    let last = thrice[n - 1];
    let spread = (thrice[n - 1] - thrice[n - 2]).abs();
    if !(spread <= 1e-6 * last.abs().max(1e-12)) {
        return Err(OperatorError::Unstable(thrice));
    }
    Ok(NeumannTrace {
        raw_trace: last,
        samples,
    })
}

/// c_σ = −Δ_λ^σ f(x) / trace, with Δ_λ^σ f from the heat route.
pub fn calibrate_extension_constant<F: RealFn>(
    p: &OperatorParams,
    f: &F,
    x: f64,
    spec: &QuadratureSpec,
) -> Result<f64, OperatorError> {
    let target = frac_power(p, f, x, RouteTag::Heat, spec)?.value;
    let trace = neumann_trace(p, f, x, spec)?.raw_trace;
    Ok(-target / trace)
}

/// 4^σ Γ(σ)/(2Γ(1−σ)), the value the calibration should reproduce.
pub fn extension_constant(sigma: f64) -> Result<f64, OperatorError> {
    Ok(4f64.powf(sigma) * specfun::gamma(sigma)? / (2.0 * specfun::gamma(1.0 - sigma)?))
}
