//! Evolving-surface transport-diffusion problems defined through level sets.
//!
//! A problem supplies the level set `phi(x, t)` with its first derivatives,
//! the transporting velocity, the diffusion coefficient, source, initial data
//! and (optionally) an exact solution. The surface is `{phi(., t) = 0}` and
//! moves with the normal wind `w = -(d_t phi / |grad phi|^2) grad phi`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{dot, norm, Vec3};
use crate::mesh::BoxDomain;
use crate::scalar::Real;

/// Level-set function with its spatial gradient.
pub trait LevelSetField<T>: Send + Sync {
    fn phi(&self, x: &Vec3<T>, t: T) -> T;
    fn grad_phi(&self, x: &Vec3<T>, t: T) -> Vec3<T>;
}

/// Static description of a problem.
#[derive(Clone, Debug, Serialize)]
pub struct ProblemInfo<T> {
    pub name: String,
    pub dim: usize,
    pub domain: BoxDomain<T>,
    /// Coarse Kuhn mesh width for which the box sides are integer multiples.
    pub h0: T,
    pub t_final: T,
    pub nu: T,
    pub sigma_hint: Option<T>,
    /// Analytic `max_t c_F(t) / |Gamma(t)|` when known.
    pub cf_over_area_max: Option<T>,
    /// Times at which the geometry is singular (e.g. a topology change).
    pub singular_times: Vec<T>,
    pub description: String,
}

/// A transport-diffusion problem on an evolving level-set surface.
pub trait ProblemDefinition<T: Real>: LevelSetField<T> {
    fn info(&self) -> &ProblemInfo<T>;

    fn dphi_dt(&self, x: &Vec3<T>, t: T) -> T;

    fn wind(&self, x: &Vec3<T>, t: T) -> Result<Vec3<T>> {
        wind_from_levelset(&self.grad_phi(x, t), self.dphi_dt(x, t), x, t)
    }

    /// Analytic Jacobian `J[i][j] = d w_i / d x_j`, if available.
    fn wind_jacobian(&self, _x: &Vec3<T>, _t: T) -> Option<[[T; 3]; 3]> {
        None
    }

    fn source(&self, _x: &Vec3<T>, _t: T) -> T {
        T::zero()
    }

    fn has_source(&self) -> bool {
        false
    }

    fn initial(&self, x: &Vec3<T>) -> T;

    fn exact(&self, _x: &Vec3<T>, _t: T) -> Option<T> {
        None
    }

    /// Spatial gradient of the exact solution (central differences by default).
    fn exact_gradient(&self, x: &Vec3<T>, t: T) -> Option<Vec3<T>> {
        let info = self.info();
        let h = T::lit(1e-6) * info.domain.diameter();
        let mut g = [T::zero(); 3];
        for i in 0..info.dim {
            let mut xp = *x;
            let mut xm = *x;
            xp[i] += h;
            xm[i] -= h;
            g[i] = (self.exact(&xp, t)? - self.exact(&xm, t)?) / (h + h);
        }
        Some(g)
    }

    /// Poincare constant `c_F(t)` of `Gamma(t)`, when known in closed form.
    fn poincare_constant(&self, _t: T) -> Option<T> {
        None
    }

    /// Surface measure `|Gamma(t)|`, when known in closed form.
    fn surface_area(&self, _t: T) -> Option<T> {
        None
    }
}

/// Normal wind transporting the zero level: `w = -(d_t phi / |grad phi|^2) grad phi`.
pub fn wind_from_levelset<T: Real>(grad: &Vec3<T>, dphi_dt: T, x: &Vec3<T>, t: T) -> Result<Vec3<T>> {
    let g2 = dot(grad, grad);
    if !(g2 > T::zero()) || !g2.is_finite() || !dphi_dt.is_finite() {
        return Err(singular(x, t));
    }
    let a = -dphi_dt / g2;
    Ok([a * grad[0], a * grad[1], a * grad[2]])
}

pub(crate) fn singular<T: Real>(x: &Vec3<T>, t: T) -> Error {
    Error::SingularGeometry { x: [x[0].as_f64(), x[1].as_f64(), x[2].as_f64()], t: t.as_f64() }
}

/// Unit normal `grad phi / |grad phi|`.
pub fn unit_normal<T: Real>(problem: &dyn ProblemDefinition<T>, x: &Vec3<T>, t: T) -> Result<Vec3<T>> {
    let g = problem.grad_phi(x, t);
    let n = norm(&g);
    if !(n > T::zero()) || !n.is_finite() {
        return Err(singular(x, t));
    }
    Ok([g[0] / n, g[1] / n, g[2] / n])
}

/// Jacobian of the wind by central differences with step `1e-5 * diam(domain)`.
pub fn wind_jacobian_fd<T: Real>(problem: &dyn ProblemDefinition<T>, x: &Vec3<T>, t: T) -> Result<[[T; 3]; 3]> {
    let info = problem.info();
    let h = T::lit(1e-5) * info.domain.diameter();
    let mut jac = [[T::zero(); 3]; 3];
    for j in 0..info.dim {
        let mut xp = *x;
        let mut xm = *x;
        xp[j] += h;
        xm[j] -= h;
        let wp = problem.wind(&xp, t)?;
        let wm = problem.wind(&xm, t)?;
        for i in 0..info.dim {
            jac[i][j] = (wp[i] - wm[i]) / (h + h);
        }
    }
    Ok(jac)
}

/// Surface divergence `tr((I - n n^T) grad w)`.
pub fn surface_divergence_wind<T: Real>(problem: &dyn ProblemDefinition<T>, x: &Vec3<T>, t: T) -> Result<T> {
    let n = unit_normal(problem, x, t)?;
    let jac = match problem.wind_jacobian(x, t) {
        Some(j) => j,
        None => wind_jacobian_fd(problem, x, t)?,
    };
    let d = problem.info().dim;
    let mut s = T::zero();
    for i in 0..d {
        for j in 0..d {
            let p = if i == j { T::one() } else { T::zero() } - n[i] * n[j];
            s += p * jac[i][j];
        }
    }
    Ok(s)
}

/// Outcome of checking `div_Gamma w + nu c_F(t) >= c_0 > 0` on samples.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub min_value: f64,
    pub satisfied: bool,
    pub samples: usize,
}

/// Measured constants entering the stability analysis.
#[derive(Clone, Debug, Serialize)]
pub struct AnalysisConstants<T> {
    /// `(t, c_F(t))` samples.
    pub c_f: Vec<(T, T)>,
    pub c0: T,
    pub alpha_inf: T,
    pub sigma: T,
}

/// Evaluates `min (div_Gamma w + nu c_F(t))` over surface samples `(x, t)`.
pub fn check_condition_ass7<T: Real>(
    problem: &dyn ProblemDefinition<T>,
    c_f: &dyn Fn(T) -> T,
    samples: &[(Vec3<T>, T)],
) -> Result<ConditionReport> {
    let nu = problem.info().nu;
    let mut min = T::infinity();
    for (x, t) in samples {
        let v = surface_divergence_wind(problem, x, *t)? + nu * c_f(*t);
        min = min.min(v);
    }
    Ok(ConditionReport { min_value: min.as_f64(), satisfied: min > T::zero(), samples: samples.len() })
}

/// Collects `c_F`, `c_0`, `alpha_inf` over surface samples.
pub fn analysis_constants<T: Real>(
    problem: &dyn ProblemDefinition<T>,
    c_f: &dyn Fn(T) -> T,
    samples: &[(Vec3<T>, T)],
    sigma: T,
) -> Result<AnalysisConstants<T>> {
    let nu = problem.info().nu;
    let mut c0 = T::infinity();
    let mut alpha = T::zero();
    let mut cf = Vec::new();
    for (x, t) in samples {
        let div = surface_divergence_wind(problem, x, *t)?;
        let c = c_f(*t);
        c0 = c0.min(div + nu * c);
        alpha = alpha.max(div.abs());
        if cf.last().is_none_or(|&(tl, _)| tl != *t) {
            cf.push((*t, c));
        }
    }
    Ok(AnalysisConstants { c_f: cf, c0, alpha_inf: alpha, sigma: sigma.max(T::zero()) })
}

/// Lower bound `nu/2 max_t c_F(t)/|Gamma(t)|` on the stabilization parameter
/// from analytic data; `None` when `c_F` or `|Gamma|` is not available.
pub fn default_sigma<T: Real>(problem: &dyn ProblemDefinition<T>) -> Option<T> {
    let info = problem.info();
    let half_nu = info.nu * T::lit(0.5);
    if info.nu == T::zero() {
        return Some(T::zero());
    }
    if let Some(m) = info.cf_over_area_max {
        return Some(half_nu * m);
    }
    let samples = 200;
    let mut max = T::zero();
    for i in 0..=samples {
        let t = info.t_final * T::from_usize_lossy(i) / T::from_usize_lossy(samples);
        let ratio = problem.poincare_constant(t)? / problem.surface_area(t)?;
        max = max.max(ratio);
    }
    Some(half_nu * max)
}

/// As [`default_sigma`] with measured surface areas `(t, |Gamma_h(t)|)`.
pub fn default_sigma_measured<T: Real>(problem: &dyn ProblemDefinition<T>, areas: &[(T, T)]) -> Option<T> {
    let info = problem.info();
    if info.nu == T::zero() {
        return Some(T::zero());
    }
    let mut max = T::zero();
    for &(t, area) in areas {
        max = max.max(problem.poincare_constant(t)? / area);
    }
    Some(info.nu * T::lit(0.5) * max)
}

/// Optional overrides applied to catalog problems.
#[derive(Clone, Copy, Debug, Default)]
pub struct ProblemParams<T> {
    pub nu: Option<T>,
    pub t_final: Option<T>,
}

fn info<T: Real>(
    name: &str,
    dim: usize,
    lo: &[f64],
    hi: &[f64],
    params: &ProblemParams<T>,
    description: &str,
) -> ProblemInfo<T> {
    ProblemInfo {
        name: name.to_string(),
        dim,
        domain: BoxDomain::new(dim, lo, hi),
        h0: T::lit(2.0),
        t_final: params.t_final.unwrap_or(T::one()),
        nu: params.nu.unwrap_or(T::one()),
        sigma_hint: None,
        cf_over_area_max: None,
        singular_times: Vec::new(),
        description: description.to_string(),
    }
}

fn radial_unit<T: Real>(x: &Vec3<T>) -> Vec3<T> {
    let r = norm(x);
    if r > T::zero() {
        [x[0] / r, x[1] / r, x[2] / r]
    } else {
        [T::zero(); 3]
    }
}

/// Stationary sphere (d = 3) or circle (d = 2) of unit radius with `w = 0`,
/// `u_0 = x_1` and exact solution `exp(-(d-1) nu t) x_1`.
#[derive(Clone, Debug)]
pub struct StationarySphere<T> {
    info: ProblemInfo<T>,
}

impl<T: Real> StationarySphere<T> {
    pub fn new(dim: usize, params: &ProblemParams<T>) -> Self {
        let (name, desc) = if dim == 2 {
            ("stationary_circle", "unit circle at rest, u0 = x1, u = exp(-nu t) x1")
        } else {
            ("stationary_sphere", "unit sphere at rest, u0 = x1, u = exp(-2 nu t) x1")
        };
        let mut info = info(name, dim, &[-2.0; 3], &[2.0; 3], params, desc);
        let area = if dim == 2 { T::lit(2.0) * T::PI() } else { T::lit(4.0) * T::PI() };
        info.cf_over_area_max = Some(T::from_usize_lossy(dim - 1) / area);
        StationarySphere { info }
    }
}

impl<T: Real> LevelSetField<T> for StationarySphere<T> {
    fn phi(&self, x: &Vec3<T>, _t: T) -> T {
        norm(x) - T::one()
    }
    fn grad_phi(&self, x: &Vec3<T>, _t: T) -> Vec3<T> {
        radial_unit(x)
    }
}

impl<T: Real> ProblemDefinition<T> for StationarySphere<T> {
    fn info(&self) -> &ProblemInfo<T> {
        &self.info
    }
    fn dphi_dt(&self, _x: &Vec3<T>, _t: T) -> T {
        T::zero()
    }
    fn wind_jacobian(&self, _x: &Vec3<T>, _t: T) -> Option<[[T; 3]; 3]> {
        Some([[T::zero(); 3]; 3])
    }
    fn initial(&self, x: &Vec3<T>) -> T {
        x[0]
    }
    fn exact(&self, x: &Vec3<T>, t: T) -> Option<T> {
        let k = T::from_usize_lossy(self.info.dim - 1);
        Some((-k * self.info.nu * t).exp() * x[0])
    }
    fn exact_gradient(&self, _x: &Vec3<T>, t: T) -> Option<Vec3<T>> {
        let k = T::from_usize_lossy(self.info.dim - 1);
        Some([(-k * self.info.nu * t).exp(), T::zero(), T::zero()])
    }
    fn poincare_constant(&self, _t: T) -> Option<T> {
        Some(T::from_usize_lossy(self.info.dim - 1))
    }
    fn surface_area(&self, _t: T) -> Option<T> {
        Some(if self.info.dim == 2 { T::lit(2.0) * T::PI() } else { T::lit(4.0) * T::PI() })
    }
}

/// Circle of radius `r(t) = 1 - t/4` with manufactured solution
/// `u = exp(-t) x_1 x_2 / |x|^2`.
#[derive(Clone, Debug)]
pub struct ShrinkingCircle<T> {
    info: ProblemInfo<T>,
}

impl<T: Real> ShrinkingCircle<T> {
    pub fn new(params: &ProblemParams<T>) -> Self {
        let mut info = info(
            "shrinking_circle",
            2,
            &[-2.0; 3],
            &[2.0; 3],
            params,
            "circle of radius 1 - t/4, manufactured u = exp(-t) x1 x2 / |x|^2",
        );
        // c_F / |Gamma| = 1 / (2 pi r^3), largest at the final (smallest) radius
        let r = T::one() - info.t_final / T::lit(4.0);
        info.cf_over_area_max = Some(T::one() / (T::lit(2.0) * T::PI() * r * r * r));
        ShrinkingCircle { info }
    }

    pub fn radius(&self, t: T) -> T {
        T::one() - t / T::lit(4.0)
    }

    fn radius_rate(&self) -> T {
        -T::lit(0.25)
    }
}

impl<T: Real> LevelSetField<T> for ShrinkingCircle<T> {
    fn phi(&self, x: &Vec3<T>, t: T) -> T {
        norm(x) - self.radius(t)
    }
    fn grad_phi(&self, x: &Vec3<T>, _t: T) -> Vec3<T> {
        radial_unit(x)
    }
}

impl<T: Real> ProblemDefinition<T> for ShrinkingCircle<T> {
    fn info(&self) -> &ProblemInfo<T> {
        &self.info
    }
    fn dphi_dt(&self, _x: &Vec3<T>, _t: T) -> T {
        -self.radius_rate()
    }
    fn wind_jacobian(&self, x: &Vec3<T>, _t: T) -> Option<[[T; 3]; 3]> {
        // w = r' x / |x|
        let r = norm(x);
        let n = radial_unit(x);
        let mut j = [[T::zero(); 3]; 3];
        for a in 0..2 {
            for b in 0..2 {
                let delta = if a == b { T::one() } else { T::zero() };
                j[a][b] = self.radius_rate() * (delta - n[a] * n[b]) / r;
            }
        }
        Some(j)
    }
    fn source(&self, x: &Vec3<T>, t: T) -> T {
        let r = self.radius(t);
        let u = self.exact(x, t).unwrap_or_else(T::zero);
        u * (-T::one() + self.radius_rate() / r + T::lit(4.0) * self.info.nu / (r * r))
    }
    fn has_source(&self) -> bool {
        true
    }
    fn initial(&self, x: &Vec3<T>) -> T {
        self.exact(x, T::zero()).unwrap_or_else(T::zero)
    }
    fn exact(&self, x: &Vec3<T>, t: T) -> Option<T> {
        let r2 = x[0] * x[0] + x[1] * x[1];
        Some((-t).exp() * x[0] * x[1] / r2)
    }
    fn exact_gradient(&self, x: &Vec3<T>, t: T) -> Option<Vec3<T>> {
        let r2 = x[0] * x[0] + x[1] * x[1];
        let e = (-t).exp();
        let two = T::lit(2.0);
        Some([
            e * x[1] * (x[1] * x[1] - x[0] * x[0]) / (r2 * r2),
            e * x[0] * (x[0] * x[0] - x[1] * x[1]) / (r2 * r2),
            T::zero() * two,
        ])
    }
    fn poincare_constant(&self, t: T) -> Option<T> {
        let r = self.radius(t);
        Some(T::one() / (r * r))
    }
    fn surface_area(&self, t: T) -> Option<T> {
        Some(T::lit(2.0) * T::PI() * self.radius(t))
    }
}

/// Two droplets merging: `phi = 1 - |x - c_+|^{-p} - |x - c_-|^{-p}` with
/// `c_(+/-)(t) = +/- 3/2 (t - 1, 0, 0)`; `p = 3` in 3D and `p = 2` in 2D.
#[derive(Clone, Debug)]
pub struct CollidingDroplets<T> {
    info: ProblemInfo<T>,
    exponent: i32,
}

impl<T: Real> CollidingDroplets<T> {
    pub fn new(dim: usize, params: &ProblemParams<T>) -> Self {
        let (name, desc) = if dim == 3 {
            ("colliding_spheres", "two spheres merging into one, u0 = 3 - x1 on x1 >= 0")
        } else {
            ("colliding_circles", "two circles merging into one, u0 = 3 - x1 on x1 >= 0")
        };
        let mut info = info(name, dim, &[-3.0, -2.0, -2.0], &[3.0, 2.0, 2.0], params, desc);
        let exponent = dim as i32;
        let touch = T::one() - T::lit(2.0 / 3.0) * T::lit(2.0).powf(T::one() / T::from_usize_lossy(dim));
        info.singular_times = vec![touch];
        // c_F(t) has no closed form through the collision
        info.sigma_hint = Some(T::one());
        CollidingDroplets { info, exponent }
    }

    /// Time at which the two components touch at the origin.
    pub fn touch_time(&self) -> T {
        self.info.singular_times[0]
    }

    fn centers(&self, t: T) -> [T; 2] {
        let c = T::lit(1.5) * (t - T::one());
        [c, -c]
    }
}

impl<T: Real> LevelSetField<T> for CollidingDroplets<T> {
    fn phi(&self, x: &Vec3<T>, t: T) -> T {
        let mut v = T::one();
        for c in self.centers(t) {
            let r = [x[0] - c, x[1], x[2]];
            v -= norm(&r).powi(-self.exponent);
        }
        v
    }
    fn grad_phi(&self, x: &Vec3<T>, t: T) -> Vec3<T> {
        let p = T::from_i32(self.exponent).unwrap_or_else(T::one);
        let mut g = [T::zero(); 3];
        for c in self.centers(t) {
            let r = [x[0] - c, x[1], x[2]];
            let f = p * norm(&r).powi(-self.exponent - 2);
            for i in 0..3 {
                g[i] += f * r[i];
            }
        }
        g
    }
}

impl<T: Real> ProblemDefinition<T> for CollidingDroplets<T> {
    fn info(&self) -> &ProblemInfo<T> {
        &self.info
    }
    fn dphi_dt(&self, x: &Vec3<T>, t: T) -> T {
        let p = T::from_i32(self.exponent).unwrap_or_else(T::one);
        let rate = [T::lit(1.5), -T::lit(1.5)];
        let mut v = T::zero();
        for (c, cdot) in self.centers(t).into_iter().zip(rate) {
            let r = [x[0] - c, x[1], x[2]];
            v -= p * norm(&r).powi(-self.exponent - 2) * r[0] * cdot;
        }
        v
    }
    fn initial(&self, x: &Vec3<T>) -> T {
        if x[0] >= T::zero() {
            T::lit(3.0) - x[0]
        } else {
            T::zero()
        }
    }
}

/// Stationary straight interface `x_2 = 0.3` carrying `u = 1 + x_2`, which
/// the discrete space reproduces exactly.
#[derive(Clone, Debug)]
pub struct StationaryLine<T> {
    info: ProblemInfo<T>,
    offset: T,
}

impl<T: Real> StationaryLine<T> {
    pub fn new(params: &ProblemParams<T>) -> Self {
        let info = info(
            "stationary_line",
            2,
            &[-2.0; 3],
            &[2.0; 3],
            params,
            "straight line x2 = 0.3 at rest, u = 1 + x2 (reproduced exactly)",
        );
        StationaryLine { info, offset: T::lit(0.3) }
    }
}

impl<T: Real> LevelSetField<T> for StationaryLine<T> {
    fn phi(&self, x: &Vec3<T>, _t: T) -> T {
        x[1] - self.offset
    }
    fn grad_phi(&self, _x: &Vec3<T>, _t: T) -> Vec3<T> {
        [T::zero(), T::one(), T::zero()]
    }
}

impl<T: Real> ProblemDefinition<T> for StationaryLine<T> {
    fn info(&self) -> &ProblemInfo<T> {
        &self.info
    }
    fn dphi_dt(&self, _x: &Vec3<T>, _t: T) -> T {
        T::zero()
    }
    fn wind_jacobian(&self, _x: &Vec3<T>, _t: T) -> Option<[[T; 3]; 3]> {
        Some([[T::zero(); 3]; 3])
    }
    fn initial(&self, x: &Vec3<T>) -> T {
        T::one() + x[1]
    }
    fn exact(&self, x: &Vec3<T>, _t: T) -> Option<T> {
        Some(T::one() + x[1])
    }
    fn exact_gradient(&self, _x: &Vec3<T>, _t: T) -> Option<Vec3<T>> {
        Some([T::zero(), T::one(), T::zero()])
    }
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: &[&str] = &[
    "stationary_circle",
    "stationary_sphere",
    "shrinking_circle",
    "colliding_spheres",
    "colliding_circles",
    "stationary_line",
];

/// Looks up a catalog problem by name.
pub fn builtin<T: Real>(name: &str, params: &ProblemParams<T>) -> Result<Box<dyn ProblemDefinition<T>>> {
    Ok(match name {
        "stationary_circle" => Box::new(StationarySphere::new(2, params)),
        "stationary_sphere" => Box::new(StationarySphere::new(3, params)),
        "shrinking_circle" => Box::new(ShrinkingCircle::new(params)),
        "colliding_spheres" => Box::new(CollidingDroplets::new(3, params)),
        "colliding_circles" => Box::new(CollidingDroplets::new(2, params)),
        "stationary_line" => Box::new(StationaryLine::new(params)),
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown problem '{other}' (known: {})",
                BUILTIN_NAMES.join(", ")
            )))
        }
    })
}

/// The whole catalog with default parameters.
pub fn builtin_problems<T: Real>() -> Vec<Box<dyn ProblemDefinition<T>>> {
    let params = ProblemParams::default();
    BUILTIN_NAMES.iter().map(|n| builtin(n, &params).expect("catalog name")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p<T: Real>(name: &str) -> Box<dyn ProblemDefinition<T>> {
        builtin(name, &ProblemParams::default()).unwrap()
    }

    #[test]
    fn wind_of_stationary_level_set_is_zero() {
        let prob = p::<f64>("stationary_circle");
        let w = prob.wind(&[0.6, 0.8, 0.0], 0.3).unwrap();
        assert_eq!(w, [0.0; 3]);
    }

    #[test]
    fn wind_of_shrinking_circle_is_radial() {
        let prob = p::<f64>("shrinking_circle");
        let x = [0.3, -0.4, 0.0];
        let w = prob.wind(&x, 0.5).unwrap();
        // r' x / |x| with r' = -1/4
        assert!((w[0] + 0.25 * 0.6).abs() < 1e-15);
        assert!((w[1] - 0.25 * 0.8).abs() < 1e-15);
    }

    #[test]
    fn vanishing_gradient_is_reported() {
        let r = wind_from_levelset(&[0.0f64; 3], 1.0, &[0.0; 3], 0.5);
        assert!(matches!(r, Err(Error::SingularGeometry { .. })));
        // the merging droplets have a critical point at the origin
        let prob = p::<f64>("colliding_spheres");
        assert!(prob.wind(&[0.0; 3], 0.1).is_err());
    }

    #[test]
    fn surface_divergence_of_shrinking_circle() {
        let prob = p::<f64>("shrinking_circle");
        for &t in &[0.0, 0.4, 1.0] {
            let r = 1.0 - t / 4.0;
            let x = [r * 0.6, r * 0.8, 0.0];
            let div = surface_divergence_wind(prob.as_ref(), &x, t).unwrap();
            assert!((div - (-0.25 / r)).abs() < 1e-12);
            let jac = wind_jacobian_fd(prob.as_ref(), &x, t).unwrap();
            let n = unit_normal(prob.as_ref(), &x, t).unwrap();
            let mut s = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    s += (if i == j { 1.0 } else { 0.0 } - n[i] * n[j]) * jac[i][j];
                }
            }
            assert!((s - (-0.25 / r)).abs() < 1e-6);
        }
    }

    #[test]
    fn sigma_from_theorem_bound() {
        let circle = p::<f64>("stationary_circle");
        let s = default_sigma(circle.as_ref()).unwrap();
        assert!((s - 1.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-15);
        let sphere = p::<f64>("stationary_sphere");
        let s = default_sigma(sphere.as_ref()).unwrap();
        assert!((s - 1.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-15);
        let still = builtin::<f64>("stationary_circle", &ProblemParams { nu: Some(0.0), t_final: None }).unwrap();
        assert_eq!(default_sigma(still.as_ref()), Some(0.0));
        assert!(default_sigma(p::<f64>("colliding_spheres").as_ref()).is_none());
        // shrinking circle: analytic max agrees with sampling c_F / |Gamma|
        let shrink = p::<f64>("shrinking_circle");
        let r: f64 = 0.75;
        let s = default_sigma(shrink.as_ref()).unwrap();
        assert!((s - 0.5 / (2.0 * std::f64::consts::PI * r.powi(3))).abs() < 1e-14);
    }

    #[test]
    fn touch_times() {
        let s = CollidingDroplets::<f64>::new(3, &ProblemParams::default());
        let t = s.touch_time();
        assert!((t - (1.0 - 2.0 / 3.0 * 2f64.cbrt())).abs() < 1e-15);
        assert!((t - 0.160).abs() < 5e-4);
        assert!(s.phi(&[0.0; 3], t).abs() < 1e-14);
        // final configuration is the sphere of radius 2^(1/3)
        let r = 2f64.cbrt();
        assert!(s.phi(&[r, 0.0, 0.0], 1.0).abs() < 1e-14);
        assert!(s.phi(&[0.0, 0.0, r], 1.0).abs() < 1e-14);
    }

    #[test]
    fn unknown_problem_is_rejected() {
        assert!(builtin::<f64>("nope", &ProblemParams::default()).is_err());
        assert_eq!(builtin_problems::<f64>().len(), BUILTIN_NAMES.len());
    }
}
