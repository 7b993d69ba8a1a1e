//! Heat, Poisson and fractional-operator kernels of Δ_λ.
//!
//! The Bessel heat kernel is evaluated as W_t(x,y) = 𝕎_t(x−y)·(1+Ψ_ν(z))
//! with z = xy/(2t), ν = λ−1/2, so no exponential ever overflows and the
//! deviation from the Gauss–Weierstrass kernel is available without
//! cancellation.

use std::f64::consts::PI;

use thiserror::Error;

use crate::grid::OperatorParams;
use crate::quad::{self, QuadError, QuadResult, QuadratureSpec};
use crate::specfun::{self, IBranch, SpecfunError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("invalid argument {name} = {value}")]
    Domain { name: &'static str, value: f64 },
    #[error("points too close to the diagonal: x = {x}, y = {y}")]
    Diagonal { x: f64, y: f64 },
    #[error("quadrature did not converge (value {value}, error {err_est})")]
    NotConverged { value: f64, err_est: f64 },
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Series,
    Asymptotic,
    Subordinated,
}

impl From<IBranch> for Regime {
    fn from(b: IBranch) -> Self {
        match b {
            IBranch::Series => Regime::Series,
            IBranch::Asymptotic => Regime::Asymptotic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelEval {
    pub value: f64,
    pub err_est: f64,
    pub regime: Regime,
}

/// The two equivalent subordination integrals for P_t.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subordination {
    /// t/(2√π) ∫₀^∞ e^{−t²/4s} s^{−3/2} W_s ds
    Time,
    /// (1/√π) ∫₀^∞ e^{−r} r^{−1/2} W_{t²/4r} dr, computed with r = ρ²
    Rate,
}

fn positive(name: &'static str, v: f64) -> Result<(), KernelError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(KernelError::Domain { name, value: v })
    }
}

/// Accepts a quadrature result, allowing a 10× miss of the requested
/// tolerance before reporting failure.
pub(crate) fn accept(r: QuadResult<f64>, spec: &QuadratureSpec) -> Result<QuadResult<f64>, KernelError> {
    if r.converged || (r.value.is_finite() && r.err_est <= 10.0 * spec.tolerance_for(r.value)) {
        Ok(r)
    } else {
        Err(KernelError::NotConverged {
            value: r.value,
            err_est: r.err_est,
        })
    }
}

/// 𝕎_t(x) = (4πt)^{−1/2} e^{−x²/(4t)}.
pub fn gauss_weierstrass(t: f64, x: f64) -> f64 {
    (-x * x / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()
}

/// ℙ_t(x) = t / (π(t² + x²)).
pub fn classical_poisson(t: f64, x: f64) -> f64 {
    t / (PI * (t * t + x * x))
}

/// W_t without argument checks; returns (value, branch).
pub(crate) fn heat_raw(nu: f64, t: f64, x: f64, y: f64) -> (f64, IBranch) {
    let g = gauss_weierstrass(t, x - y);
    let z = x * y / (2.0 * t);
    if g == 0.0 {
        return (0.0, IBranch::Series);
    }
    let (s, b) = specfun::i_scaled_raw(nu, z);
    (g * (2.0 * PI * z).sqrt() * s, b)
}

/// 𝕎_t(x−y)·Ψ_ν(xy/2t) = W_t(x,y) − 𝕎_t(x−y).
pub(crate) fn heat_deviation_raw(nu: f64, t: f64, x: f64, y: f64) -> f64 {
    let g = gauss_weierstrass(t, x - y);
    if g == 0.0 {
        return 0.0;
    }
    let z = x * y / (2.0 * t);
    if z == 0.0 {
        return -g;
    }
    g * specfun::i_psi_raw(nu, z).0
}

/// W_t^λ(x,y) = √(xy)/(2t) I_{λ−1/2}(xy/2t) e^{−(x²+y²)/(4t)}.
pub fn heat_kernel(p: &OperatorParams, t: f64, x: f64, y: f64) -> Result<KernelEval, KernelError> {
    positive("t", t)?;
    positive("x", x)?;
    positive("y", y)?;
    let (value, b) = heat_raw(p.nu(), t, x, y);
    let rel = match b {
        IBranch::Series => 1e-14,
        IBranch::Asymptotic => 1e-12,
    };
    Ok(KernelEval {
        value,
        err_est: rel * value,
        regime: b.into(),
    })
}

/// I_{ν+1}(z)/I_ν(z) − 1 without cancellation for large z.
fn i_ratio_minus_one(nu: f64, z: f64) -> f64 {
    if z < 1.0 {
        let (a, _) = specfun::i_scaled_raw(nu + 1.0, z);
        let (b, _) = specfun::i_scaled_raw(nu, z);
        a / b - 1.0
    } else {
        let (p1, _) = specfun::i_psi_raw(nu + 1.0, z);
        let (p0, _) = specfun::i_psi_raw(nu, z);
        (p1 - p0) / (1.0 + p0)
    }
}

/// ∂_v W_v(x,y) = W_v·[(x−y)²/(4v²) − (1+ν)/v − (z/v)(I_{ν+1}/I_ν − 1)].
pub(crate) fn heat_dv_raw(nu: f64, v: f64, x: f64, y: f64) -> f64 {
    let (w, _) = heat_raw(nu, v, x, y);
    if w == 0.0 {
        return 0.0;
    }
    let z = x * y / (2.0 * v);
    let d = x - y;
    w * (d * d / (4.0 * v * v) - (1.0 + nu) / v - z / v * i_ratio_minus_one(nu, z))
}

pub fn heat_kernel_dv(p: &OperatorParams, v: f64, x: f64, y: f64) -> Result<f64, KernelError> {
    positive("t", v)?;
    positive("x", x)?;
    positive("y", y)?;
    Ok(heat_dv_raw(p.nu(), v, x, y))
}

/// y-breakpoints that resolve W_t(x, ·).
pub(crate) fn heat_y_points(t: f64, x: f64) -> Vec<f64> {
    let s = t.sqrt();
    let mut pts = vec![0.0, x];
    for c in [-12.0, -4.0, -1.0, 1.0, 4.0, 12.0] {
        let y = x + c * s;
        if y > 0.0 {
            pts.push(y);
        }
    }
    for c in [1.0, 4.0] {
        pts.push(c * s);
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// W_t 1(x) = ∫₀^∞ W_t(x,y) dy.
pub fn heat_mass(p: &OperatorParams, t: f64, x: f64, spec: &QuadratureSpec) -> Result<f64, KernelError> {
    positive("t", t)?;
    positive("x", x)?;
    if t < x * x {
        return Ok(1.0 + heat_mass_minus_one(p, t, x, spec)?);
    }
    let nu = p.nu();
    let r = quad::try_integrate_half_line(
        |y: f64| Ok::<f64, QuadError>(if y > 0.0 { heat_raw(nu, t, x, y).0 } else { 0.0 }),
        &heat_y_points(t, x),
        spec,
    )?;
    Ok(accept(r, spec)?.value)
}

/// W_t 1(x) − 1 = −½ erfc(x/2√t) + ∫₀^∞ 𝕎_t(x−y) Ψ_ν(xy/2t) dy.
pub fn heat_mass_minus_one(p: &OperatorParams, t: f64, x: f64, spec: &QuadratureSpec) -> Result<f64, KernelError> {
    positive("t", t)?;
    positive("x", x)?;
    let nu = p.nu();
    let r = quad::try_integrate_half_line(
        |y: f64| Ok::<f64, QuadError>(if y > 0.0 { heat_deviation_raw(nu, t, x, y) } else { 0.0 }),
        &heat_y_points(t, x),
        spec,
    )?;
    // the Gaussian part is at most ½, so an absolute tolerance is natural here
    let r = accept(r, spec)?;
    Ok(r.value - 0.5 * specfun::erfc(x / (2.0 * t.sqrt())))
}

/// t-scales at which W_t(x,y) changes regime.
fn heat_t_scales(x: f64, y: f64) -> Vec<f64> {
    let d = x - y;
    let mut pts = vec![x * y];
    if d != 0.0 {
        pts.push(d * d);
    }
    pts.push((x + y) * (x + y));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// ∫₀^∞ g(t) dt for g that vanishes faster than any power below `lower`
/// and decays algebraically beyond the last scale, in the variable ln t.
pub(crate) fn integrate_log_line<E, F>(
    mut g: F,
    lower: f64,
    scales: &[f64],
    spec: &QuadratureSpec,
) -> Result<QuadResult<f64>, E>
where
    E: From<QuadError>,
    F: FnMut(f64) -> Result<f64, E>,
{
    // the Gaussian factor below `lower` has overflowed its scale: nothing
    // representable is left to integrate
    if !lower.is_finite() {
        return Ok(QuadResult::zero());
    }
    let mut ws: Vec<f64> = std::iter::once(lower)
        .chain(scales.iter().copied().filter(|s| *s > lower))
        .map(f64::ln)
        .collect();
    ws.sort_by(f64::total_cmp);
    ws.dedup();
    let top = ws[ws.len() - 1].exp();
    let head = if ws.len() > 1 {
        quad::try_integrate_breaks(
            |w: f64| {
                let t = w.exp();
                Ok::<f64, E>(g(t)? * t)
            },
            &ws,
            spec,
        )?
    } else {
        QuadResult::zero()
    };
    let tail = quad::try_integrate_log_tail(&mut g, top, spec)?;
    Ok(head.combine(tail))
}

/// ∫₀^T D(t) t^{−1−s} dt for a semigroup difference D(t) = O(t). Below t_min
/// D is replaced by the quadratic a·t + b·t² through D(t_min) and D(2t_min):
/// the quadrature of D itself loses relative accuracy like t^{−1/2} there,
/// while the model is off by O(t_min^{3−s}).
pub(crate) fn difference_head<E, D>(
    d: D,
    s: f64,
    t_min: f64,
    t_end: f64,
    spec: &QuadratureSpec,
) -> Result<QuadResult<f64>, E>
where
    E: From<QuadError>,
    D: Fn(f64) -> Result<f64, E>,
{
    let (d1, d2) = (d(t_min)?, d(2.0 * t_min)?);
    let b = (d2 - 2.0 * d1) / 2.0;
    let a = d1 - b;
    let start = t_min.powf(-s) * (a / (1.0 - s) + b / (2.0 - s));
    let (w0, w1) = (t_min.ln(), t_end.ln());
    let mut ws = vec![w0, w1];
    let mut w = w0.ceil();
    while w < w1 {
        ws.push(w);
        w += 1.0;
    }
    ws.sort_by(f64::total_cmp);
    ws.dedup();
    let r = quad::try_integrate_breaks(
        |w: f64| {
            let t = w.exp();
            Ok::<f64, E>(d(t)? * t.powf(-s))
        },
        &ws,
        spec,
    )?;
    Ok(QuadResult {
        value: start + r.value,
        ..r
    })
}

/// P_t^λ(x,y) by subordination of the heat kernel.
pub fn poisson_kernel(
    p: &OperatorParams,
    t: f64,
    x: f64,
    y: f64,
    spec: &QuadratureSpec,
) -> Result<KernelEval, KernelError> {
    poisson_kernel_with(p, t, x, y, Subordination::Time, spec)
}

pub fn poisson_kernel_with(
    p: &OperatorParams,
    t: f64,
    x: f64,
    y: f64,
    form: Subordination,
    spec: &QuadratureSpec,
) -> Result<KernelEval, KernelError> {
    positive("t", t)?;
    positive("x", x)?;
    positive("y", y)?;
    let nu = p.nu();
    let r = match form {
        Subordination::Time => {
            let mut scales = heat_t_scales(x, y);
            scales.push(t * t / 4.0);
            let d = x - y;
            let lower = (t * t + d * d) / 400.0;
            let c = t / (2.0 * PI.sqrt());
            integrate_log_line(
                |s| Ok::<f64, KernelError>(c * (-t * t / (4.0 * s)).exp() * s.powf(-1.5) * heat_raw(nu, s, x, y).0),
                lower,
                &scales,
                spec,
            )?
        }
        Subordination::Rate => {
            // W_{t²/4ρ²} in ρ; the heat scales s map to ρ = t/(2√s)
            let mut pts = vec![0.0, 1.0, 6.5];
            for s in heat_t_scales(x, y) {
                let rho = t / (2.0 * s.sqrt());
                if rho < 6.5 {
                    pts.push(rho);
                }
            }
            pts.sort_by(f64::total_cmp);
            pts.dedup();
            let c = 2.0 / PI.sqrt();
            let r = quad::try_integrate_breaks(
                |rho: f64| {
                    Ok::<f64, QuadError>(if rho == 0.0 {
                        0.0
                    } else {
                        c * (-rho * rho).exp() * heat_raw(nu, t * t / (4.0 * rho * rho), x, y).0
                    })
                },
                &pts,
                spec,
            )?;
            // ρ > 6.5 carries less than e^{−42} of the Gaussian weight
            let tail = quad::try_integrate_half_line(
                |rho: f64| {
                    Ok::<f64, QuadError>(c * (-rho * rho).exp() * heat_raw(nu, t * t / (4.0 * rho * rho), x, y).0)
                },
                &[6.5],
                spec,
            )?;
            r.combine(tail)
        }
    };
    let r = accept(r, spec)?;
    Ok(KernelEval {
        value: r.value.max(0.0),
        err_est: r.err_est,
        regime: Regime::Subordinated,
    })
}

/// 1/(−Γ(−σ)) = σ/Γ(1−σ).
pub(crate) fn inv_neg_gamma_neg(sigma: f64) -> Result<f64, KernelError> {
    Ok(sigma / specfun::gamma(1.0 - sigma)?)
}

/// K_σ^λ(x,y) = 1/(−Γ(−σ)) ∫₀^∞ W_t(x,y) t^{−1−σ} dt.
pub fn k_sigma(p: &OperatorParams, x: f64, y: f64, spec: &QuadratureSpec) -> Result<KernelEval, KernelError> {
    positive("x", x)?;
    positive("y", y)?;
    let d = (x - y).abs();
    if d < 1e-8 * x.max(y) {
        return Err(KernelError::Diagonal { x, y });
    }
    let (nu, sigma) = (p.nu(), p.sigma());
    let c = inv_neg_gamma_neg(sigma)?;
    let r = integrate_log_line(
        |t| Ok::<f64, KernelError>(heat_raw(nu, t, x, y).0 * t.powf(-1.0 - sigma)),
        d * d / 400.0,
        &heat_t_scales(x, y),
        spec,
    )?;
    let r = accept(r, spec)?;
    Ok(KernelEval {
        value: c * r.value,
        err_est: c * r.err_est,
        regime: Regime::Subordinated,
    })
}

/// B_σ^λ(x) = 1/Γ(−σ) ∫₀^∞ (W_t 1(x) − 1) t^{−1−σ} dt, split at t = x².
pub fn b_sigma(p: &OperatorParams, x: f64, spec: &QuadratureSpec) -> Result<f64, KernelError> {
    positive("x", x)?;
    let sigma = p.sigma();
    let inner = spec.tightened(10.0);
    let x2 = x * x;
    let head = difference_head(|t| heat_mass_minus_one(p, t, x, &inner), sigma, 1e-6 * x2, x2, spec)?;
    let head = accept(head, spec)?;
    let tail = quad::try_integrate_log_tail(
        |t: f64| Ok::<f64, KernelError>(heat_mass(p, t, x, &inner)? * t.powf(-1.0 - sigma)),
        x2,
        spec,
    )?;
    let tail = accept(tail, spec)?;
    let total = head.value + tail.value - x.powf(-2.0 * sigma) / sigma;
    Ok(-inv_neg_gamma_neg(sigma)? * total)
}

/// C_σ^λ(x) = PV ∫ K_σ^λ(x,y)(x−y) χ_{|x−y|≤1} dy for σ ≥ 1/2.
///
/// The Gauss–Weierstrass part of W_t integrates in closed form over the
/// window, so only the regular deviation 𝕎_t Ψ_ν is integrated and no
/// principal value is needed: C = 1/(−Γ(−σ)) ∫ G(t) t^{−1−σ} dt with
/// G(t) = √(t/π)(e^{−1/4t} − e^{−m²/4t}) + ∫ 𝕎_t(x−y)Ψ_ν(xy/2t)(x−y) dy,
/// m = min(x, 1). G(t) = O(t²) at 0.
pub fn c_sigma_compensator(p: &OperatorParams, x: f64, spec: &QuadratureSpec) -> Result<f64, KernelError> {
    positive("x", x)?;
    let sigma = p.sigma();
    if sigma < 0.5 {
        return Err(KernelError::Domain {
            name: "sigma",
            value: sigma,
        });
    }
    let nu = p.nu();
    let inner = spec.tightened(10.0);
    let (lo, hi) = ((x - 1.0).max(0.0), x + 1.0);
    let m = x.min(1.0);
    let g = |t: f64| -> Result<f64, KernelError> {
        let gauss = (t / PI).sqrt() * ((-0.25 / t).exp() - (-m * m / (4.0 * t)).exp());
        let mut pts: Vec<f64> = heat_y_points(t, x).into_iter().filter(|y| *y > lo && *y < hi).collect();
        pts.push(lo);
        pts.push(hi);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let r = quad::try_integrate_breaks(
            |y: f64| {
                Ok::<f64, KernelError>(if y > 0.0 {
                    heat_deviation_raw(nu, t, x, y) * (x - y)
                } else {
                    0.0
                })
            },
            &pts,
            &inner,
        )?;
        Ok(gauss + accept(r, &inner)?.value)
    };
    let r = integrate_log_line(
        |t| Ok::<f64, KernelError>(g(t)? * t.powf(-1.0 - sigma)),
        1e-8 * (x * x).min(1.0),
        &[x * x, 1.0, hi * hi],
        spec,
    )?;
    Ok(inv_neg_gamma_neg(sigma)? * accept(r, spec)?.value)
}

/// σ 4^σ Γ(1/2+σ)/(√π Γ(1−σ)): the constant of the λ=1 kernel
/// K_σ^1(x,y) = c(|x−y|^{−1−2σ} − (x+y)^{−1−2σ}).
pub fn dirichlet_kernel_constant(sigma: f64) -> Result<f64, KernelError> {
    Ok(sigma * 4f64.powf(sigma) * specfun::gamma(0.5 + sigma)? / (PI.sqrt() * specfun::gamma(1.0 - sigma)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{erf, gamma};

    fn params(lambda: f64, sigma: f64) -> OperatorParams {
        OperatorParams::new(lambda, sigma).unwrap()
    }

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default().with_tolerances(1e-13, 1e-11)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs())
    }

    #[test]
    fn gauss_weierstrass_values() {
        assert!((gauss_weierstrass(1.0 / (4.0 * PI), 0.0) - 1.0).abs() < 1e-15);
        assert!((gauss_weierstrass(1.0, 2.0) - (-1f64).exp() / (4.0 * PI).sqrt()).abs() < 1e-16);
        let r = quad::integrate_semi_infinite(
            |y| gauss_weierstrass(0.7, 0.3 - y) + gauss_weierstrass(0.7, 0.3 + y),
            0.0,
            &spec(),
        )
        .unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn classical_poisson_values() {
        assert!((classical_poisson(1.0, 0.0) - 1.0 / PI).abs() < 1e-16);
        assert!((classical_poisson(2.0, 2.0) - 1.0 / (4.0 * PI)).abs() < 1e-16);
        let r = quad::integrate_semi_infinite(|y| 2.0 * classical_poisson(1.5, y), 0.0, &spec()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn heat_dirichlet_closed_form() {
        let p = params(1.0, 0.5);
        let v = heat_kernel(&p, 1.0, 1.0, 1.0).unwrap().value;
        assert!(rel(v, (1.0 - (-1f64).exp()) / (4.0 * PI).sqrt()) < 1e-15);
        for &t in &[1e-3, 0.1, 1.0, 30.0] {
            for &(x, y) in &[(0.01, 0.02), (0.5, 2.0), (3.0, 3.1), (10.0, 0.2)] {
                let w = heat_kernel(&p, t, x, y).unwrap().value;
                let exact = gauss_weierstrass(t, x - y) - gauss_weierstrass(t, x + y);
                assert!(
                    (w - exact).abs() <= 1e-10 * exact.abs().max(1e-300),
                    "t={t} x={x} y={y}"
                );
            }
        }
    }

    #[test]
    fn heat_symmetric_and_checked() {
        let p = params(2.3, 0.5);
        let a = heat_kernel(&p, 0.4, 0.7, 1.9).unwrap().value;
        let b = heat_kernel(&p, 0.4, 1.9, 0.7).unwrap().value;
        assert_eq!(a, b);
        assert!(heat_kernel(&p, 0.0, 1.0, 1.0).is_err());
        assert!(heat_kernel(&p, 1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn heat_small_argument_law() {
        // W ~ (xy)^λ t^{−λ−1/2} e^{−(x²+y²)/4t} / (2^{2λ} Γ(λ+1/2))
        for &l in &[0.7, 1.0, 2.5] {
            let p = params(l, 0.5);
            let (t, x, y) = (1.0, 1e-4, 2e-4);
            let w = heat_kernel(&p, t, x, y).unwrap().value;
            let scale = (x * y).powf(l) * t.powf(-l - 0.5) * (-(x * x + y * y) / (4.0 * t)).exp();
            let c = 1.0 / (4f64.powf(l) * gamma(l + 0.5).unwrap());
            assert!(rel(w / scale, c) < 1e-6, "lambda={l}");
        }
    }

    #[test]
    fn heat_far_field_correction() {
        for &l in &[0.7, 2.0, 3.0] {
            let p = params(l, 0.5);
            for &q in &[50.0, 200.0] {
                let (x, y) = (2.0, 2.05);
                let t = x * y / q;
                let g = gauss_weierstrass(t, x - y);
                let w = heat_kernel(&p, t, x, y).unwrap().value;
                let ratio = (w - g) / (g * t / (x * y));
                let target = -l * (l - 1.0);
                assert!(
                    (ratio - target).abs() <= 0.1 * target.abs(),
                    "lambda={l} q={q} ratio={ratio}"
                );
            }
        }
    }

    #[test]
    fn gaussian_domination() {
        for &l in &[0.7, 1.0, 2.5] {
            let p = params(l, 0.5);
            let mut sup: f64 = 0.0;
            for &t in &[1e-3, 0.1, 1.0, 10.0] {
                for &x in &[0.01, 0.3, 1.0, 5.0] {
                    for &y in &[0.02, 0.5, 1.0, 4.0] {
                        let w = heat_kernel(&p, t, x, y).unwrap().value;
                        let g = gauss_weierstrass(t, x - y);
                        if g > 1e-300 {
                            sup = sup.max(w / g);
                        }
                    }
                }
            }
            assert!(sup.is_finite() && sup < 10.0, "lambda={l} sup={sup}");
        }
    }

    #[test]
    fn heat_mass_dirichlet() {
        let p = params(1.0, 0.5);
        for &(t, x) in &[(1.0, 4.0), (0.3, 0.2), (5.0, 1.0), (1e-4, 0.5)] {
            let m = heat_mass(&p, t, x, &spec()).unwrap();
            assert!((m - erf(x / (2.0 * t.sqrt()))).abs() < 1e-10, "t={t} x={x}");
        }
        let m = heat_mass(&p, 0.25, 2.0, &spec()).unwrap();
        assert!((m - 0.995_322_265_018_952_7).abs() < 1e-10);
        let m1 = heat_mass_minus_one(&p, 0.3, 0.2, &spec()).unwrap();
        assert!((m1 + specfun::erfc(0.2 / (2.0 * 0.3f64.sqrt()))).abs() < 1e-12);
    }

    #[test]
    fn heat_mass_approximate_identity() {
        for &l in &[0.7, 2.5] {
            let p = params(l, 0.5);
            let m = heat_mass(&p, 1e-6, 1.0, &spec()).unwrap();
            assert!((m - 1.0).abs() < 1e-5, "lambda={l} m={m}");
            // the first-order correction is −λ(λ−1) t/x²
            let d = heat_mass_minus_one(&p, 1e-6, 1.0, &spec()).unwrap();
            assert!(rel(d, -l * (l - 1.0) * 1e-6) < 1e-3, "lambda={l} d={d}");
        }
    }

    #[test]
    fn heat_dv_matches_difference() {
        for &l in &[0.7, 1.0, 3.0] {
            let p = params(l, 0.5);
            for &(v, x, y) in &[(0.5, 1.0, 1.2), (0.01, 2.0, 2.1), (4.0, 0.3, 0.1), (1e-3, 5.0, 5.02)] {
                let h = 1e-4 * v;
                let w = |s| heat_kernel(&p, s, x, y).unwrap().value;
                let fd = (-w(v + 2.0 * h) + 8.0 * w(v + h) - 8.0 * w(v - h) + w(v - 2.0 * h)) / (12.0 * h);
                let an = heat_kernel_dv(&p, v, x, y).unwrap();
                assert!((an - fd).abs() <= 1e-7 * an.abs().max(w(v) / v), "lambda={l} v={v}");
            }
        }
    }

    #[test]
    fn poisson_dirichlet_closed_form() {
        let p = params(1.0, 0.5);
        let v = poisson_kernel(&p, 1.0, 1.0, 1.0, &spec()).unwrap();
        assert!((v.value - 0.8 / PI).abs() < 1e-10);
        for form in [Subordination::Time, Subordination::Rate] {
            for &(t, x, y) in &[(1.0, 1.0, 1.0), (0.1, 0.5, 0.6), (3.0, 2.0, 0.1), (0.5, 4.0, 1.0)] {
                let v = poisson_kernel_with(&p, t, x, y, form, &spec()).unwrap().value;
                let exact = classical_poisson(t, x - y) - classical_poisson(t, x + y);
                assert!(rel(v, exact) < 1e-9, "{form:?} t={t} x={x} y={y}");
            }
        }
    }

    #[test]
    fn poisson_forms_agree() {
        let p = params(2.5, 0.5);
        for &(t, x, y) in &[(0.3, 1.0, 2.0), (2.0, 0.5, 0.5), (0.05, 3.0, 3.02)] {
            let a = poisson_kernel_with(&p, t, x, y, Subordination::Time, &spec()).unwrap();
            let b = poisson_kernel_with(&p, t, x, y, Subordination::Rate, &spec()).unwrap();
            assert!((a.value - b.value).abs() <= 10.0 * (a.err_est + b.err_est) + 1e-12 * a.value);
            let c = poisson_kernel(&p, t, y, x, &spec()).unwrap();
            assert!(rel(a.value, c.value) < 1e-9);
        }
    }

    #[test]
    fn poisson_domination() {
        let p = params(2.0, 0.5);
        let mut sup: f64 = 0.0;
        for &t in &[0.05, 0.5, 2.0] {
            for &x in &[0.1, 1.0, 3.0] {
                for &y in &[0.2, 1.0, 2.5] {
                    let v = poisson_kernel(&p, t, x, y, &QuadratureSpec::default()).unwrap().value;
                    sup = sup.max(v / classical_poisson(t, x - y));
                }
            }
        }
        assert!(sup.is_finite() && sup < 10.0);
    }

    #[test]
    fn k_sigma_dirichlet_closed_form() {
        // integrating 𝕎_t(d) t^{−1−σ} gives 4^σ Γ(1/2+σ)/√π · d^{−1−2σ}
        for &s in &[0.25, 0.5, 0.75] {
            let p = params(1.0, s);
            let c = dirichlet_kernel_constant(s).unwrap();
            for &(x, y) in &[(1.0, 2.0), (0.5, 0.51), (3.0, 0.1)] {
                let k = k_sigma(&p, x, y, &spec()).unwrap().value;
                let exact = c * ((x - y).abs().powf(-1.0 - 2.0 * s) - (x + y).powf(-1.0 - 2.0 * s));
                assert!(rel(k, exact) < 1e-8, "sigma={s} x={x} y={y}");
            }
        }
        assert!((dirichlet_kernel_constant(0.5).unwrap() - 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn k_sigma_symmetric_and_diagonal() {
        let p = params(2.0, 0.3);
        let a = k_sigma(&p, 0.7, 1.3, &spec()).unwrap().value;
        let b = k_sigma(&p, 1.3, 0.7, &spec()).unwrap().value;
        assert!(rel(a, b) < 1e-10 && a > 0.0);
        assert!(matches!(
            k_sigma(&p, 1.0, 1.0, &spec()),
            Err(KernelError::Diagonal { .. })
        ));
    }

    #[test]
    fn b_sigma_dirichlet_power_law() {
        // B_σ^1(x) = 4^σ Γ(σ+1/2)/(√π Γ(1−σ)) x^{−2σ}
        for &s in &[0.25, 0.75] {
            let p = params(1.0, s);
            let c = dirichlet_kernel_constant(s).unwrap() / s;
            // 1-D oracle: −(1/Γ(−σ)) ∫ −erfc(x/2√t) t^{−1−σ} dt at x = 1
            let g = |t: f64| Ok::<f64, QuadError>(specfun::erfc(0.5 / t.sqrt()) * t.powf(-1.0 - s));
            let head = quad::try_integrate_finite(g, 0.0, 1.0, &spec()).unwrap().value;
            let tail = quad::try_integrate_log_tail(g, 1.0, &spec()).unwrap().value;
            let o = (head + tail) * inv_neg_gamma_neg(s).unwrap();
            assert!(rel(o, c) < 1e-7);
            for &x in &[0.3, 1.0, 4.0] {
                let b = b_sigma(&p, x, &QuadratureSpec::default()).unwrap();
                assert!(b > 0.0);
                assert!(rel(b, c * x.powf(-2.0 * s)) < 1e-6, "sigma={s} x={x} b={b}");
            }
        }
    }

    #[test]
    fn compensator_dirichlet_far_from_origin() {
        // for x ≥ 2 only the −(x+y)^{−1−2σ} part survives the symmetric window
        let s = 0.75;
        let p = params(1.0, s);
        let x = 2.5;
        let c = dirichlet_kernel_constant(s).unwrap();
        let oracle = quad::integrate_finite(
            |y| -c * (x + y).powf(-1.0 - 2.0 * s) * (x - y),
            x - 1.0,
            x + 1.0,
            &spec(),
        )
        .unwrap()
        .value;
        let v = c_sigma_compensator(&p, x, &QuadratureSpec::default()).unwrap();
        assert!(
            (v - oracle).abs() < 1e-6 * oracle.abs().max(1.0),
            "v={v} oracle={oracle}"
        );
    }

    #[test]
    fn compensator_dirichlet_near_origin() {
        // window [0, x+1]: the |x−y| part leaves ∫ sgn(s)|s|^{−2σ} over (−1, x)
        let s = 0.75;
        let p = params(1.0, s);
        let x: f64 = 0.5;
        let c = dirichlet_kernel_constant(s).unwrap();
        let q = 1.0 - 2.0 * s;
        let near = c * (x.powf(q) - 1.0) / q;
        let far = quad::integrate_finite(|y| -c * (x + y).powf(-1.0 - 2.0 * s) * (x - y), 0.0, x + 1.0, &spec())
            .unwrap()
            .value;
        let v = c_sigma_compensator(&p, x, &QuadratureSpec::default()).unwrap();
        assert!((v - near - far).abs() < 1e-7, "v={v} oracle={}", near + far);
    }
}
