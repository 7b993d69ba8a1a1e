//! The Hankel transform h_λ, its conjugate 𝓗_λ = x^{−λ} h_λ x^λ, and
//! spectral multipliers h_λ(m · h_λ f).

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::grid::{GridError, PowerTimes, RealFn};
use crate::quad::{self, QuadError, QuadResult, QuadValue, QuadratureSpec};
use crate::specfun::{self, SpecfunError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error("function is not in the decaying class; use the semigroup or pointwise routes")]
    NotDecaying,
    #[error("invalid argument {name} = {value}")]
    Domain { name: &'static str, value: f64 },
    #[error("Hankel quadrature did not converge (value {value}, error {err_est})")]
    NotConverged { value: f64, err_est: f64 },
    #[error("transform still of size {tail:e} at the table end y = {y_max}; the neglected tail exceeds the tolerance")]
    Truncated { y_max: f64, tail: f64 },
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// √z J_ν(z).
fn sqrt_j(nu: f64, z: f64) -> f64 {
    if z == 0.0 {
        return 0.0;
    }
    z.sqrt() * specfun::j_raw(nu, z)
}

/// ∂ₓ[√(xy) J_ν(xy)] = √(y/x) [(ν+½) J_ν(xy) − xy J_{ν+1}(xy)].
fn sqrt_j_dx(nu: f64, x: f64, y: f64) -> f64 {
    let z = x * y;
    if z == 0.0 {
        return 0.0;
    }
    (y / x).sqrt() * ((nu + 0.5) * specfun::j_raw(nu, z) - z * specfun::j_raw(nu + 1.0, z))
}

fn check_lambda(lambda: f64) -> Result<f64, TransformError> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(lambda - 0.5)
    } else {
        Err(TransformError::Domain {
            name: "lambda",
            value: lambda,
        })
    }
}

fn accept<T: QuadValue>(r: QuadResult<T>, spec: &QuadratureSpec) -> Result<QuadResult<T>, TransformError> {
    let m = r.value.magnitude();
    if r.converged || (m.is_finite() && r.err_est <= 10.0 * spec.tolerance_for(m)) {
        Ok(r)
    } else {
        Err(TransformError::NotConverged {
            value: m,
            err_est: r.err_est,
        })
    }
}

/// Breakpoints on [0, top] that separate oscillations of J_ν(xy) in y.
/// Half-periods of J beyond this count make the quadrature impractical.
const MAX_OSCILLATION_PANELS: f64 = 1e5;

fn oscillation_points(x: f64, top: f64, extra: &[f64]) -> Result<Vec<f64>, TransformError> {
    if !(x * top / PI <= MAX_OSCILLATION_PANELS) {
        return Err(TransformError::Domain { name: "x", value: x });
    }
    let mut pts = vec![0.0, top];
    let step = (PI / x).min(0.5 * top);
    let mut y = step;
    while y < top {
        pts.push(y);
        y += step;
    }
    pts.extend(extra.iter().copied().filter(|b| *b > 0.0 && *b < top));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    Ok(pts)
}

fn decaying_support<F: RealFn>(f: &F) -> Result<f64, TransformError> {
    if !f.decaying() {
        return Err(TransformError::NotDecaying);
    }
    f.effective_support().ok_or(TransformError::NotDecaying)
}

/// h_λ f(x) = ∫₀^∞ √(xy) J_{λ−1/2}(xy) f(y) dy for decaying f.
pub fn hankel<F: RealFn>(lambda: f64, f: &F, x: f64, spec: &QuadratureSpec) -> Result<f64, TransformError> {
    Ok(hankel_with_err(lambda, f, x, spec)?.value)
}

pub fn hankel_with_err<F: RealFn>(
    lambda: f64,
    f: &F,
    x: f64,
    spec: &QuadratureSpec,
) -> Result<QuadResult<f64>, TransformError> {
    let nu = check_lambda(lambda)?;
    if !(x > 0.0) {
        return Err(TransformError::Domain { name: "x", value: x });
    }
    if f.is_zero() {
        return Ok(QuadResult::zero());
    }
    let top = decaying_support(f)?;
    let pts = oscillation_points(x, top, &f.breakpoints())?;
    let r = quad::integrate_breaks(|y| sqrt_j(nu, x * y) * f.value(y), &pts, spec)?;
    accept(r, spec)
}

fn hankel_dx<F: RealFn>(nu: f64, f: &F, x: f64, top: f64, spec: &QuadratureSpec) -> Result<f64, TransformError> {
    let pts = oscillation_points(x, top, &f.breakpoints())?;
    let r = quad::integrate_breaks(|y| sqrt_j_dx(nu, x, y) * f.value(y), &pts, spec)?;
    Ok(accept(r, spec)?.value)
}

/// 𝓗_λ f(x) = x^{−λ} h_λ(y^λ f(y))(x).
pub fn conjugated_hankel<F: RealFn>(lambda: f64, f: &F, x: f64, spec: &QuadratureSpec) -> Result<f64, TransformError> {
    let g = PowerTimes { lambda, profile: f };
    Ok(x.powf(-lambda) * hankel(lambda, &g, x, spec)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GrowthClass {
    Polynomial(f64),
    Decaying,
}

/// A symbol m(y) on (0, ∞).
#[derive(Clone)]
pub struct SpectralMultiplier {
    symbol: Arc<dyn Fn(f64) -> Complex64 + Send + Sync>,
    growth: GrowthClass,
}

impl std::fmt::Debug for SpectralMultiplier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralMultiplier")
            .field("growth", &self.growth)
            .finish()
    }
}

impl SpectralMultiplier {
    pub fn new<F>(symbol: F, growth: GrowthClass) -> Self
    where
        F: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            symbol: Arc::new(symbol),
            growth,
        }
    }

    pub fn real<F>(symbol: F, growth: GrowthClass) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(move |y| Complex64::new(symbol(y), 0.0), growth)
    }

    pub fn identity() -> Self {
        Self::real(|_| 1.0, GrowthClass::Polynomial(0.0))
    }

    /// y^s; s = 2σ gives Δ^σ, s = −2σ gives Δ^{−σ}.
    pub fn power(s: f64) -> Self {
        Self::real(move |y| y.powf(s), GrowthClass::Polynomial(s))
    }

    /// e^{−ty²}, the heat semigroup.
    pub fn heat(t: f64) -> Self {
        Self::real(move |y| (-t * y * y).exp(), GrowthClass::Decaying)
    }

    /// e^{−ty}, the Poisson semigroup.
    pub fn poisson(t: f64) -> Self {
        Self::real(move |y| (-t * y).exp(), GrowthClass::Decaying)
    }

    /// e^{iπβ} y^β e^{−ty}: the symbol of ∂_t^β P_t obtained from the
    /// Segovia–Wheeden definition applied to e^{−ty}.
    pub fn frac_deriv_poisson(beta: f64, t: f64) -> Self {
        let phase = Complex64::from_polar(1.0, PI * beta);
        Self::new(move |y| phase * (y.powf(beta) * (-t * y).exp()), GrowthClass::Decaying)
    }

    pub fn growth(&self) -> GrowthClass {
        self.growth
    }

    pub fn eval(&self, y: f64) -> Complex64 {
        (self.symbol)(y)
    }

    /// Pointwise product m₁·m₂.
    pub fn compose(&self, other: &Self) -> Self {
        let (a, b) = (self.symbol.clone(), other.symbol.clone());
        let growth = match (self.growth, other.growth) {
            (GrowthClass::Decaying, _) | (_, GrowthClass::Decaying) => GrowthClass::Decaying,
            (GrowthClass::Polynomial(p), GrowthClass::Polynomial(q)) => GrowthClass::Polynomial(p + q),
        };
        Self {
            symbol: Arc::new(move |y| a(y) * b(y)),
            growth,
        }
    }
}

/// h_λ f tabulated once, with exact slopes, for repeated outer transforms.
#[derive(Debug, Clone)]
pub struct HankelTable {
    lambda: f64,
    nodes: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    spec: QuadratureSpec,
    /// largest |h_λ f| over the last unit before the table end, when the
    /// transform has not decayed there
    tail: f64,
    outer: QuadratureSpec,
}

const TABLE_Y0: f64 = 1e-3;
const TABLE_GEOMETRIC: usize = 360;
const TABLE_STEP: f64 = 0.02;
const TABLE_Y_MAX: f64 = 64.0;

impl HankelTable {
    /// Tabulates h_λ f at inner tolerance 1e−9 relative.
    pub fn new<F: RealFn>(lambda: f64, f: &F, spec: &QuadratureSpec) -> Result<Self, TransformError> {
        let nu = check_lambda(lambda)?;
        let inner = QuadratureSpec {
            abs_tol: spec.abs_tol.min(1e-12),
            rel_tol: spec.rel_tol.min(1e-10),
            ..spec.clone()
        };
        if f.is_zero() {
            return Ok(Self {
                lambda,
                nodes: vec![TABLE_Y0, 1.0],
                values: vec![0.0; 2],
                slopes: vec![0.0; 2],
                spec: inner,
                tail: 0.0,
                outer: spec.clone(),
            });
        }
        let top = decaying_support(f)?;
        let (cut, tail) = Self::cutoff(lambda, f, &inner)?;
        let mut nodes: Vec<f64> = (0..TABLE_GEOMETRIC)
            .map(|i| TABLE_Y0 * (1.0 / TABLE_Y0).powf(i as f64 / TABLE_GEOMETRIC as f64))
            .collect();
        let n_lin = ((cut - 1.0) / TABLE_STEP).ceil() as usize;
        nodes.extend((0..=n_lin).map(|k| 1.0 + k as f64 * TABLE_STEP));
        use rayon::prelude::*;
        let pairs: Vec<Result<(f64, f64), TransformError>> = nodes
            .par_iter()
            .map(|&y| Ok((hankel(lambda, f, y, &inner)?, hankel_dx(nu, f, y, top, &inner)?)))
            .collect();
        let mut values = Vec::with_capacity(nodes.len());
        let mut slopes = Vec::with_capacity(nodes.len());
        for p in pairs {
            let (v, s) = p?;
            values.push(v);
            slopes.push(s);
        }
        Ok(Self {
            lambda,
            nodes,
            values,
            slopes,
            spec: inner,
            tail,
            outer: spec.clone(),
        })
    }

    /// First y beyond which |h_λ f| stays below 1e−14 of its peak on a
    /// coarse scan, and the residual size there if it never does.
    fn cutoff<F: RealFn>(lambda: f64, f: &F, spec: &QuadratureSpec) -> Result<(f64, f64), TransformError> {
        let ys: Vec<f64> = (1..=128).map(|k| 0.5 * k as f64).collect();
        let mut vals = Vec::with_capacity(ys.len());
        for &y in &ys {
            vals.push(hankel(lambda, f, y, spec)?.abs());
        }
        let peak = vals.iter().copied().fold(0.0, f64::max);
        let mut cut = TABLE_Y_MAX;
        for i in (0..ys.len()).rev() {
            if vals[i] > 1e-14 * peak {
                cut = (ys[i] + 1.0).min(TABLE_Y_MAX);
                break;
            }
        }
        let tail = if cut < TABLE_Y_MAX {
            0.0
        } else {
            vals[vals.len() - 2..].iter().copied().fold(0.0, f64::max)
        };
        Ok((cut.max(2.0), tail))
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn y_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Cubic Hermite interpolant of h_λ f; power law y^λ below the table
    /// and zero beyond it.
    pub fn eval(&self, y: f64) -> f64 {
        let n = self.nodes.len();
        if y <= 0.0 {
            return 0.0;
        }
        if y < self.nodes[0] {
            return self.values[0] * (y / self.nodes[0]).powf(self.lambda);
        }
        if y > self.nodes[n - 1] {
            return 0.0;
        }
        let i = match self.nodes.binary_search_by(|p| p.total_cmp(&y)) {
            Ok(i) => return self.values[i],
            Err(i) => i - 1,
        };
        let h = self.nodes[i + 1] - self.nodes[i];
        let s = (y - self.nodes[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * self.values[i]
            + (s3 - 2.0 * s2 + s) * h * self.slopes[i]
            + (-2.0 * s3 + 3.0 * s2) * self.values[i + 1]
            + (s3 - s2) * h * self.slopes[i + 1]
    }

    /// h_λ(m · h_λ f)(x).
    pub fn apply(&self, m: &SpectralMultiplier, x: f64) -> Result<Complex64, TransformError> {
        if !(x > 0.0) {
            return Err(TransformError::Domain { name: "x", value: x });
        }
        let nu = self.lambda - 0.5;
        let top = self.y_max();
        let mut extra: Vec<f64> = vec![TABLE_Y0, 0.01, 0.1, 1.0];
        let mut y = 1.5;
        while y < top {
            extra.push(y);
            y += 0.5;
        }
        let pts = oscillation_points(x, top, &extra)?;
        let spec = QuadratureSpec {
            abs_tol: self.spec.abs_tol * 10.0,
            rel_tol: self.spec.rel_tol * 10.0,
            ..self.spec.clone()
        };
        let neglected = self.tail * m.eval(top).norm() * top;
        let r = quad::integrate_breaks(
            |y: f64| {
                let g = self.eval(y);
                if g == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    m.eval(y) * (sqrt_j(nu, x * y) * g)
                }
            },
            &pts,
            &spec,
        )?;
        let v = accept(r, &spec)?.value;
        if neglected > self.outer.abs_tol.max(self.outer.rel_tol * v.norm()) {
            return Err(TransformError::Truncated {
                y_max: top,
                tail: self.tail,
            });
        }
        Ok(v)
    }

    pub fn apply_real(&self, m: &SpectralMultiplier, x: f64) -> Result<f64, TransformError> {
        Ok(self.apply(m, x)?.re)
    }
}

/// h_λ(m · h_λ f)(x); complex when m is.
pub fn spectral_apply<F: RealFn>(
    lambda: f64,
    m: &SpectralMultiplier,
    f: &F,
    x: f64,
    spec: &QuadratureSpec,
) -> Result<Complex64, TransformError> {
    HankelTable::new(lambda, f, spec)?.apply(m, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{test_function, TestKind};

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default().with_tolerances(1e-13, 1e-11)
    }

    fn phi(lambda: f64, a: f64) -> crate::grid::TestFunction {
        test_function(TestKind::Phi { lambda, a }).unwrap()
    }

    fn gaussian_pair(lambda: f64, x: f64) -> f64 {
        2f64.powf(-(lambda + 0.5)) * x.powf(lambda) * (-x * x / 4.0).exp()
    }

    #[test]
    fn gaussian_hankel_pair() {
        for &l in &[0.5, 1.0, 2.0] {
            let f = phi(l, 1.0);
            for &x in &[0.5, 1.0, 2.0] {
                let h = hankel(l, &f, x, &spec()).unwrap();
                assert!((h - gaussian_pair(l, x)).abs() < 1e-10, "lambda={l} x={x}");
            }
        }
    }

    #[test]
    fn zero_and_slow_inputs() {
        let z = test_function(TestKind::Zero).unwrap();
        assert_eq!(hankel(1.0, &z, 1.0, &spec()).unwrap(), 0.0);
        let h = test_function(TestKind::Holder { alpha: 0.3 }).unwrap();
        assert_eq!(hankel(1.0, &h, 1.0, &spec()), Err(TransformError::NotDecaying));
    }

    #[test]
    fn table_interpolates_the_pair() {
        let f = phi(1.5, 1.0);
        let t = HankelTable::new(1.5, &f, &spec()).unwrap();
        for &y in &[0.0005, 0.013, 0.77, 1.234, 3.31, 7.9] {
            assert!(
                (t.eval(y) - gaussian_pair(1.5, y)).abs() < 1e-9,
                "y={y} err={}",
                t.eval(y) - gaussian_pair(1.5, y)
            );
        }
    }

    #[test]
    fn involution() {
        for &l in &[1.0, 2.0] {
            let f = phi(l, 1.0);
            let t = HankelTable::new(l, &f, &spec()).unwrap();
            for &x in &[0.5, 1.0, 2.0] {
                let v = t.apply_real(&SpectralMultiplier::identity(), x).unwrap();
                assert!((v - f.value(x)).abs() < 1e-8, "lambda={l} x={x}");
            }
        }
    }

    #[test]
    fn laplacian_multiplier() {
        // Δ₁ φ = −φ″ for φ = x e^{−x²}; φ″ = (4x³ − 6x) e^{−x²}
        let f = phi(1.0, 1.0);
        let v = spectral_apply(1.0, &SpectralMultiplier::power(2.0), &f, 1.0, &spec()).unwrap();
        let exact = 2.0 * (-1f64).exp();
        assert!((v.re - exact).abs() < 1e-8 && v.im == 0.0);
    }

    #[test]
    fn heat_multiplier_matches_kernel() {
        use crate::grid::OperatorParams;
        use crate::kernels::heat_kernel;
        let f = phi(1.0, 1.0);
        let p = OperatorParams::new(1.0, 0.5).unwrap();
        let (t, x) = (0.5, 1.0);
        let spectral = spectral_apply(1.0, &SpectralMultiplier::heat(t), &f, x, &spec())
            .unwrap()
            .re;
        let direct = quad::integrate_semi_infinite(
            |y| {
                if y > 0.0 {
                    heat_kernel(&p, t, x, y).unwrap().value * f.value(y)
                } else {
                    0.0
                }
            },
            0.0,
            &spec(),
        )
        .unwrap()
        .value;
        assert!((spectral - direct).abs() < 1e-8);
    }

    #[test]
    fn conjugated_gaussian() {
        let g = test_function(TestKind::Gaussian { a: 1.0 }).unwrap();
        for &l in &[0.7, 2.0] {
            for &x in &[0.5, 1.5] {
                let v = conjugated_hankel(l, &g, x, &spec()).unwrap();
                let exact = 2f64.powf(-(l + 0.5)) * (-x * x / 4.0).exp();
                assert!((v - exact).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn conjugated_matches_radial_fourier() {
        // λ=1: 𝓗₁ψ(x) = √(2/π)/x ∫ r sin(xr) ψ(r) dr, the 3-D radial
        // Fourier transform in the unitary normalisation
        let psi = test_function(TestKind::Gaussian { a: 1.0 }).unwrap();
        for &x in &[0.5, 1.0, 2.0] {
            let v = conjugated_hankel(1.0, &psi, x, &spec()).unwrap();
            let s = quad::integrate_finite(|r| r * (x * r).sin() * psi.value(r), 0.0, 10.0, &spec())
                .unwrap()
                .value;
            assert!((v - (2.0 / PI).sqrt() * s / x).abs() < 1e-10);
        }
    }

    #[test]
    fn plancherel_and_self_adjointness() {
        let f = phi(1.0, 1.0);
        let g = test_function(TestKind::Bump {
            center: 2.0,
            radius: 1.0,
        })
        .unwrap();
        let tf = HankelTable::new(1.0, &f, &spec()).unwrap();
        let tg = HankelTable::new(1.0, &g, &spec()).unwrap();
        let lhs = quad::integrate_finite(|y| tf.eval(y).powi(2), 0.0, tf.y_max(), &spec())
            .unwrap()
            .value;
        let rhs = quad::integrate_finite(|y| f.value(y).powi(2), 0.0, 12.0, &spec())
            .unwrap()
            .value;
        assert!((lhs - rhs).abs() < 1e-8 * rhs);
        let a = quad::integrate_breaks(|y| tf.eval(y) * g.value(y), &[1.0, 2.0, 3.0], &spec())
            .unwrap()
            .value;
        let b = quad::integrate_finite(|y| f.value(y) * tg.eval(y), 0.0, tg.y_max(), &spec())
            .unwrap()
            .value;
        assert!((a - b).abs() < 1e-7 * a.abs().max(1e-3), "a={a} b={b}");
    }

    #[test]
    fn multiplier_composition() {
        // m₁ = e^{−ty²} maps φ_{λ,1} to (4t+1)^{−(λ+1/2)} φ_{λ,1/(4t+1)}
        let (l, t) = (2.0, 0.2);
        let f = phi(l, 1.0);
        let m1 = SpectralMultiplier::heat(t);
        let m2 = SpectralMultiplier::power(0.5);
        let table = HankelTable::new(l, &f, &spec()).unwrap();
        let mid = phi(l, 1.0 / (4.0 * t + 1.0)).scaled((4.0 * t + 1.0).powf(-(l + 0.5)));
        for &x in &[0.5, 1.5] {
            assert!((table.apply_real(&m1, x).unwrap() - mid.value(x)).abs() < 1e-9);
            let both = table.apply_real(&m1.compose(&m2), x).unwrap();
            let chained = spectral_apply(l, &m2, &mid, x, &spec()).unwrap().re;
            assert!(
                (both - chained).abs() < 1e-7 * both.abs(),
                "both={both} chained={chained}"
            );
        }
    }
}
