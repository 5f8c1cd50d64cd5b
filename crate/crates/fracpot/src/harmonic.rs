//! Constructions of s-harmonic functions and mean-value identity checks:
//! Poisson extensions on balls, mollified kernel approximants, and the
//! mean-value residual including the exact-inradius case.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::kernels::{FracParams, MuMeasure};
use crate::quadrature::{
    integrate_ball_support, integrate_exterior_weighted, integrate_mu, integrate_mu_ball_local,
    ExteriorQuadScheme, MuRegion, QuadResult,
};
use crate::vecn;
use crate::wos::{ExteriorField, WosConfig, WosEstimate};

// ---------------------------------------------------------------------------
// Exterior data
// ---------------------------------------------------------------------------

/// One term of a parameterized exterior datum.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataTerm {
    /// Smooth bump supported in `B_radius(center)`, peak value `height`.
    Bump {
        center: Vec<f64>,
        radius: f64,
        height: f64,
    },
    /// Smoothed indicator of the annulus `radius ≤ |y - center| ≤ 2 radius`,
    /// plateau value `height`.
    Shell {
        center: Vec<f64>,
        radius: f64,
        height: f64,
    },
    Constant { height: f64 },
}

/// C^∞ step: 0 for t ≤ 0, 1 for t ≥ 1.
fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

impl DataTerm {
    pub fn eval(&self, y: &[f64]) -> f64 {
        match self {
            DataTerm::Bump {
                center,
                radius,
                height,
            } => {
                let u_sq = vecn::dist_sq(y, center) / (radius * radius);
                if u_sq >= 1.0 {
                    0.0
                } else {
                    height * (1.0 - 1.0 / (1.0 - u_sq)).exp()
                }
            }
            DataTerm::Shell {
                center,
                radius,
                height,
            } => {
                let d = vecn::dist(y, center);
                let rise = smooth_step((d - radius) / (0.1 * radius));
                let fall = smooth_step((2.0 * radius - d) / (0.1 * radius));
                height * rise * fall
            }
            DataTerm::Constant { height } => *height,
        }
    }

    /// Radii (from the origin) bounding the support shells of this term.
    fn breakpoints(&self) -> Vec<f64> {
        match self {
            DataTerm::Bump { center, radius, .. } => {
                let d = vecn::norm(center);
                vec![(d - radius).abs(), d + radius]
            }
            DataTerm::Shell { center, radius, .. } => {
                let d = vecn::norm(center);
                vec![
                    (d - 2.0 * radius).abs(),
                    (d - radius).abs(),
                    d + radius,
                    d + 2.0 * radius,
                ]
            }
            DataTerm::Constant { .. } => Vec::new(),
        }
    }
}

/// Bounded exterior Dirichlet datum `g(y) = Σ terms`, defined on the
/// complement of a domain. Bounded compactly-perturbed-constant data always
/// satisfy the `∫ |g| / (1+|y|^{n+2s}) dy < ∞` integrability condition.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ExteriorData {
    pub terms: Vec<DataTerm>,
}

impl ExteriorData {
    pub fn single_bump(center: Vec<f64>, radius: f64, height: f64) -> Self {
        ExteriorData {
            terms: vec![DataTerm::Bump {
                center,
                radius,
                height,
            }],
        }
    }

    pub fn shell(center: Vec<f64>, radius: f64, height: f64) -> Self {
        ExteriorData {
            terms: vec![DataTerm::Shell {
                center,
                radius,
                height,
            }],
        }
    }

    pub fn constant(height: f64) -> Self {
        ExteriorData {
            terms: vec![DataTerm::Constant { height }],
        }
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(y)).sum()
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.terms.iter().flat_map(|t| t.breakpoints()).collect();
        v.retain(|x| *x > 0.0);
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        v
    }
}

impl ExteriorField for ExteriorData {
    fn eval(&self, y: &[f64]) -> f64 {
        ExteriorData::eval(self, y)
    }
}

// ---------------------------------------------------------------------------
// Mollifier
// ---------------------------------------------------------------------------

/// Normalization of the unit bump profile per dimension.
fn bump_profile_norm(dim: usize) -> f64 {
    static CACHE: OnceLock<Mutex<HashMap<usize, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&a) = cache.lock().unwrap().get(&dim) {
        return a;
    }
    // ∫_{B_1} e^{-1/(1-|x|²)} dx by a radial Gauss rule; the integrand
    // vanishes to all orders at the sphere.
    let gl = crate::quadrature::gl_cached(64);
    let radial: f64 = gl
        .0
        .iter()
        .zip(&gl.1)
        .map(|(&t, &w)| {
            let rho = 0.5 * (t + 1.0);
            let wr = 0.5 * w;
            let v = (-1.0 / (1.0 - rho * rho)).exp();
            wr * v * rho.powi(dim as i32 - 1)
        })
        .sum();
    let a = 1.0 / (vecn::sphere_surface_area(dim) * radial);
    cache.lock().unwrap().insert(dim, a);
    a
}

/// Unit-mass mollifier `φ_{k,p}(x) = k^n ψ(k (x - p))` with the fixed smooth
/// even bump profile `ψ` supported in the unit ball.
#[derive(Debug, Clone)]
pub struct Mollifier {
    center: Vec<f64>,
    sharpness: u32,
    amp: f64,
}

impl Mollifier {
    pub fn new(center: Vec<f64>, sharpness: u32) -> Result<Self> {
        if sharpness < 1 {
            return Err(Error::input("mollifier sharpness k must be >= 1"));
        }
        if center.is_empty() {
            return Err(Error::input("mollifier needs a nonempty center"));
        }
        let dim = center.len();
        let amp = bump_profile_norm(dim) * (sharpness as f64).powi(dim as i32);
        Ok(Mollifier {
            center,
            sharpness,
            amp,
        })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn sharpness(&self) -> u32 {
        self.sharpness
    }

    /// Support radius `1/k`.
    pub fn support_radius(&self) -> f64 {
        1.0 / self.sharpness as f64
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        let k = self.sharpness as f64;
        let u_sq = vecn::dist_sq(y, &self.center) * k * k;
        if u_sq >= 1.0 {
            0.0
        } else {
            self.amp * (-1.0 / (1.0 - u_sq)).exp()
        }
    }
}

impl ExteriorField for Mollifier {
    fn eval(&self, y: &[f64]) -> f64 {
        Mollifier::eval(self, y)
    }
}

// ---------------------------------------------------------------------------
// Poisson extension
// ---------------------------------------------------------------------------

/// Evaluate the Poisson extension `u(x) = ∫_{C B_R} g(y) P_{B_R}(0; x, y) dy`
/// of exterior data `g` at an interior point `x`. The resulting function of
/// `x` is s-harmonic in `B_R` with exterior values `g`.
///
/// Bump terms whose support is separated from the sphere are integrated on
/// support-local grids; everything else goes through the global
/// radial-angular machinery with breakpoints at the data shells.
pub fn poisson_extend(
    params: &FracParams,
    big_r: f64,
    g: &ExteriorData,
    x: &[f64],
    scheme: &ExteriorQuadScheme,
) -> Result<QuadResult> {
    let x_sq = vecn::norm_sq(x);
    if x_sq >= big_r * big_r {
        return Err(Error::domain("poisson_extend: x must be interior to the ball"));
    }
    let s = params.s;
    let nf = params.n as f64;
    let front = params.c() * (big_r * big_r - x_sq).powf(s);
    let origin = vec![0.0; params.n];

    let mut value = 0.0;
    let mut err = 0.0;
    let mut analytic = 0.0;
    for term in &g.terms {
        // The kernel has unit exterior mass (the mean value of u ≡ 1), so a
        // constant datum contributes exactly its height; the normalization
        // identity itself is quadrature-verified in the kernel tests.
        if let DataTerm::Constant { height } = term {
            analytic += height;
            continue;
        }
        let local = match term {
            DataTerm::Bump { center, radius, .. } => {
                let sep = vecn::norm(center) - radius;
                (sep > big_r * (1.0 + 0.05)).then_some((center.clone(), *radius))
            }
            _ => None,
        };
        let contribution = if let Some((c0, rad)) = local {
            let r_sq = big_r * big_r;
            let integrand = |y: &[f64]| {
                let v = term.eval(y);
                if v == 0.0 {
                    return 0.0;
                }
                let dy_sq = vecn::norm_sq(y);
                v * (-s * (dy_sq - r_sq).ln() - nf * vecn::dist(x, y).ln()).exp()
            };
            integrate_ball_support(&c0, rad, &integrand, scheme)
        } else {
            let smooth = |y: &[f64]| {
                let v = term.eval(y);
                if v == 0.0 {
                    return 0.0;
                }
                v * (-nf * vecn::dist(x, y).ln()).exp()
            };
            let sch = scheme
                .clone()
                .with_breakpoints(term.breakpoints());
            integrate_exterior_weighted(&origin, big_r, s, &smooth, &sch)
        };
        value += contribution.value;
        err += contribution.err;
    }
    Ok(QuadResult {
        value: front * value + analytic,
        err: front * err,
    })
}

/// An s-harmonic function on a ball realized as a Poisson extension;
/// evaluable on all of R^n (interior by quadrature, exterior by the data).
#[derive(Debug, Clone)]
pub struct PoissonExtension {
    pub params: FracParams,
    pub radius: f64,
    pub data: ExteriorData,
    pub scheme: ExteriorQuadScheme,
}

impl PoissonExtension {
    pub fn new(params: FracParams, radius: f64, data: ExteriorData) -> Self {
        PoissonExtension {
            params,
            radius,
            data,
            scheme: ExteriorQuadScheme::default(),
        }
    }

    /// Value at any point: quadrature inside the harmonicity ball, the datum
    /// outside (the extension of continuous data is continuous up to the
    /// sphere, so either branch is consistent on it).
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if vecn::norm(x) < self.radius {
            Ok(poisson_extend(&self.params, self.radius, &self.data, x, &self.scheme)?.value)
        } else {
            Ok(self.data.eval(x))
        }
    }
}

// ---------------------------------------------------------------------------
// Mean value property check
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct MvpCheck {
    /// `|u(0) - ∫_{C B_r} u dμ_r|`
    pub residual: f64,
    /// Quadrature error bound for the comparison.
    pub quad_err: f64,
    pub u_at_origin: f64,
    pub exterior_average: f64,
}

/// Verify the mean-value identity at radius `r` for a Poisson extension on
/// `B_R`. Requires `r ≤ R`; equality is the boundary case where the ball is
/// contained but not compactly contained in the harmonicity domain, allowed
/// because the extension of continuous data is continuous. At `r = R` the
/// exterior integral is carried entirely by the data.
pub fn verify_mvp(
    params: &FracParams,
    u: &PoissonExtension,
    r: f64,
    scheme: &ExteriorQuadScheme,
) -> Result<MvpCheck> {
    if !(r > 0.0) {
        return Err(Error::input("mean value radius must be positive"));
    }
    let big_r = u.radius;
    if r > big_r * (1.0 + 1e-12) {
        return Err(Error::domain(format!(
            "radius {r} exceeds the harmonicity inradius {big_r}"
        )));
    }
    let m = MuMeasure::new(*params, r);
    let origin = vec![0.0; params.n];
    let u0 = poisson_extend(params, big_r, &u.data, &origin, scheme)?;

    let mut integral = 0.0;
    let mut err = u0.err;

    // Annulus r < |y| < R: interior values of the extension.
    if big_r > r * (1.0 + 1e-12) {
        let ann = |y: &[f64]| {
            if vecn::norm(y) < big_r {
                poisson_extend(params, big_r, &u.data, y, &u.scheme)
                    .map(|q| q.value)
                    .unwrap_or(0.0)
            } else {
                0.0
            }
        };
        let sch = scheme.clone().with_breakpoints(vec![big_r]);
        let part = integrate_mu(&m, &MuRegion::FullComplement, &ann, &sch)?;
        integral += part.value;
        err += part.err;
    }

    // Exterior |y| > R: the datum itself, term by term.
    for term in &u.data.terms {
        let local = match term {
            DataTerm::Bump { center, radius, .. } => {
                let sep = vecn::norm(center) - radius;
                (sep > big_r * (1.0 + 0.05)).then_some((center.clone(), *radius))
            }
            _ => None,
        };
        let part = if let Some((c0, rad)) = local {
            integrate_mu_ball_local(
                &m,
                &MuRegion::FullComplement,
                &c0,
                rad,
                &|y: &[f64]| term.eval(y),
                scheme,
            )?
        } else {
            let f = |y: &[f64]| {
                if vecn::norm(y) > big_r {
                    term.eval(y)
                } else {
                    0.0
                }
            };
            let mut bps = term.breakpoints();
            bps.push(big_r);
            let sch = scheme.clone().with_breakpoints(bps);
            integrate_mu(&m, &MuRegion::FullComplement, &f, &sch)?
        };
        integral += part.value;
        err += part.err;
    }

    Ok(MvpCheck {
        residual: (u0.value - integral).abs(),
        quad_err: err,
        u_at_origin: u0.value,
        exterior_average: integral,
    })
}

// ---------------------------------------------------------------------------
// Mollified Poisson approximant
// ---------------------------------------------------------------------------

/// Walk-on-spheres estimate of `u_{k,p}(x) = ∫ φ_{k,p}(y) P_ϖ(x,y) dy`, the
/// s-harmonic function with mollifier exterior data. As `k → ∞` the values
/// converge pointwise to the Poisson kernel `P_ϖ(x, p)`; no convergence rate
/// is asserted, only measured.
pub fn mollified_poisson(
    params: &FracParams,
    varpi: &Domain,
    moll: &Mollifier,
    x: &[f64],
    cfg: &WosConfig,
) -> Result<WosEstimate> {
    let clearance = varpi.signed_dist(moll.center());
    if clearance < moll.support_radius() {
        return Err(Error::domain(
            "mollifier support must lie outside the closure of the domain",
        ));
    }
    crate::wos::exit_density(params, varpi, x, moll, cfg)
}

/// Residual of the approximation-of-the-identity average:
/// `|∫_{CΩ} φ_{k,p}(y) ((|y|²-r²)^s |y|^n)^{-1} dy - ((|p|²-r²)^s |p|^n)^{-1}|`
/// with `r` the inradius of Ω from the origin. Tends to 0 as `k → ∞`.
pub fn averaged_identity_check(
    params: &FracParams,
    dom: &Domain,
    moll: &Mollifier,
    scheme: &ExteriorQuadScheme,
) -> Result<f64> {
    let r = dom.inradius_from_origin()?;
    let p = moll.center();
    let p_norm = vecn::norm(p);
    if p_norm <= r {
        return Err(Error::domain(
            "mollifier mass point must lie outside B_r",
        ));
    }
    if dom.signed_dist(p) <= 0.0 {
        return Err(Error::domain("mollifier mass point must be exterior to the domain"));
    }
    if p_norm - moll.support_radius() <= r {
        return Err(Error::input(
            "mollifier support reaches the singular sphere; increase k",
        ));
    }
    let s = params.s;
    let nf = params.n as f64;
    let r_sq = r * r;
    let integrand = |y: &[f64]| {
        if dom.signed_dist(y) <= 0.0 {
            return 0.0;
        }
        let v = moll.eval(y);
        if v == 0.0 {
            return 0.0;
        }
        let y_sq = vecn::norm_sq(y);
        v * (-s * (y_sq - r_sq).ln() - 0.5 * nf * y_sq.ln()).exp()
    };
    let lhs = integrate_ball_support(p, moll.support_radius(), &integrand, scheme);
    let rhs = (-s * (p_norm * p_norm - r_sq).ln() - nf * p_norm.ln()).exp();
    Ok((lhs.value - rhs).abs())
}
