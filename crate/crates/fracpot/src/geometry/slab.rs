//! Smoothed slab-complement domain.
//!
//! The rough set is `(B_r ∪ {|x_n| ≥ 2δ}) ∩ B_{1/δ}`: a ball with two
//! half-space "arms" attached, clipped to a large ball. The smoothed version
//! built here places the slab faces at `|x_n| = 1.5δ`, the outer cutoff at
//! `|x| = 1.5/δ`, and rounds both circular corners with a fillet of radius
//! `δ/4` (configurable), so the result is C^{1,1} and sits strictly between
//! the two bracketing sets
//!
//! ```text
//! (B_r ∪ {|x_n| ≥ 2δ}) ∩ B_{1/δ}  ⊆  Ω  ⊆  (B_r ∪ {|x_n| ≥ δ}) ∩ B_{2/δ}.
//! ```
//!
//! The domain is a solid of revolution about the `x_n` axis (and symmetric in
//! `x_n`), so all queries reduce to exact 2-D computations in the folded
//! cross-section plane `(ρ, z) = (|x_⊥|, |x_n|)`.

use crate::error::{Error, Result};

/// A point in the folded cross-section plane.
type P2 = [f64; 2];

fn sub2(a: P2, b: P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn norm2(a: P2) -> f64 {
    a[0].hypot(a[1])
}

/// Distance from `p` to the segment `a`-`b`.
fn dist_segment(p: P2, a: P2, b: P2) -> f64 {
    let ab = sub2(b, a);
    let ap = sub2(p, a);
    let len_sq = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len_sq > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len_sq).clamp(0.0, 1.0)
    } else {
        0.0
    };
    norm2([ap[0] - t * ab[0], ap[1] - t * ab[1]])
}

/// A circular arc, parameterized by angles `[a_lo, a_hi]` (radians, measured
/// from the +ρ axis, with `a_hi - a_lo < 2π`).
#[derive(Debug, Clone, Copy)]
struct Arc {
    center: P2,
    radius: f64,
    a_lo: f64,
    a_hi: f64,
}

impl Arc {
    fn dist(&self, p: P2) -> f64 {
        let d = sub2(p, self.center);
        let ang = d[1].atan2(d[0]);
        // normalize into [a_lo, a_lo + 2π)
        let mut a = ang;
        while a < self.a_lo {
            a += 2.0 * std::f64::consts::PI;
        }
        if a <= self.a_hi {
            (norm2(d) - self.radius).abs()
        } else {
            let e0 = [
                self.center[0] + self.radius * self.a_lo.cos(),
                self.center[1] + self.radius * self.a_lo.sin(),
            ];
            let e1 = [
                self.center[0] + self.radius * self.a_hi.cos(),
                self.center[1] + self.radius * self.a_hi.sin(),
            ];
            norm2(sub2(p, e0)).min(norm2(sub2(p, e1)))
        }
    }
}

/// Smoothed slab-complement geometry. Constructed once; queries are pure.
#[derive(Debug, Clone)]
pub struct SlabComplement {
    dim: usize,
    ball_radius: f64,
    delta: f64,
    fillet: f64,
    /// Slab face height `|x_n| = h`.
    h: f64,
    /// Outer cutoff radius.
    outer_radius: f64,
    // Inner (concave) fillet data: center circle point in the cross-section,
    // tangency on the ball sphere and on the slab plane.
    c1: P2,
    t1: P2,
    t2: P2,
    // Outer (convex) fillet data.
    c2: P2,
    t3: P2,
    t4: P2,
}

impl SlabComplement {
    /// Build with the default fillet radius `δ/4`.
    pub fn new(dim: usize, ball_radius: f64, delta: f64) -> Result<Self> {
        Self::with_fillet(dim, ball_radius, delta, delta / 4.0)
    }

    pub fn with_fillet(dim: usize, ball_radius: f64, delta: f64, fillet: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::geometry(
                "slab_complement needs dimension >= 2 (the slab is normal to the last axis)",
            ));
        }
        let r = ball_radius;
        if !(r > 0.0) {
            return Err(Error::geometry("slab_complement: ball radius must be positive"));
        }
        if !(delta > 0.0 && delta < 0.5) {
            return Err(Error::geometry("slab_complement: delta must lie in (0, 0.5)"));
        }
        if delta >= r {
            return Err(Error::geometry(
                "slab_complement: delta must be smaller than the ball radius",
            ));
        }
        // The fillet must keep the smoothed set inside the outer bracketing
        // set: the sphere tangency height (h - f) r / (r + f) may not drop
        // below delta.
        let max_fillet = 0.5 * delta * r / (r + delta);
        if !(fillet > 0.0 && fillet <= max_fillet + 1e-12) {
            return Err(Error::geometry(format!(
                "slab_complement: fillet must lie in (0, {max_fillet:.6}]"
            )));
        }
        let h = 1.5 * delta;
        let outer_radius = 1.5 / delta;
        let f = fillet;

        let b1 = ((r + f).powi(2) - (h - f).powi(2)).sqrt();
        let c1 = [b1, h - f];
        let t1 = [c1[0] * r / (r + f), c1[1] * r / (r + f)];
        let t2 = [b1, h];

        let ro = outer_radius;
        let b2 = ((ro - f).powi(2) - (h + f).powi(2)).sqrt();
        let c2 = [b2, h + f];
        let t3 = [b2, h];
        let t4 = [c2[0] * ro / (ro - f), c2[1] * ro / (ro - f)];

        Ok(SlabComplement {
            dim,
            ball_radius,
            delta,
            fillet,
            h,
            outer_radius,
            c1,
            t1,
            t2,
            c2,
            t3,
            t4,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ball_radius(&self) -> f64 {
        self.ball_radius
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn fillet(&self) -> f64 {
        self.fillet
    }

    pub fn outer_radius(&self) -> f64 {
        self.outer_radius
    }

    /// Fold an n-dimensional point into the cross-section quarter-plane.
    fn fold(&self, x: &[f64]) -> P2 {
        debug_assert_eq!(x.len(), self.dim);
        let z = x[self.dim - 1].abs();
        let rho_sq: f64 = x[..self.dim - 1].iter().map(|v| v * v).sum();
        [rho_sq.sqrt(), z]
    }

    fn inside_folded(&self, p: P2) -> bool {
        let r = self.ball_radius;
        let mag = norm2(p);
        let raw = mag < r || (p[1] > self.h && mag < self.outer_radius);
        // Material added by the concave fillet between ball and slab face.
        let added = mag >= r
            && p[1] <= self.h
            && p[0] <= self.c1[0]
            && p[1] * r >= self.t1[1] * mag
            && norm2(sub2(p, self.c1)) >= self.fillet;
        // Material trimmed off the convex corner between slab face and cutoff.
        let removed = p[1] >= self.h
            && mag <= self.outer_radius
            && p[0] >= self.c2[0]
            && p[1] * self.outer_radius <= self.t4[1] * mag
            && norm2(sub2(p, self.c2)) >= self.fillet;
        (raw || added) && !removed
    }

    /// Boundary pieces of the folded cross-section.
    fn pieces(&self) -> ([Arc; 4], [P2; 2]) {
        let ang = |v: P2, c: P2| -> f64 {
            let d = sub2(v, c);
            d[1].atan2(d[0])
        };
        let origin = [0.0, 0.0];
        // Ball cap, from the equator (angle 0) up to the fillet tangency.
        let cap = Arc {
            center: origin,
            radius: self.ball_radius,
            a_lo: 0.0,
            a_hi: ang(self.t1, origin),
        };
        // Concave fillet arc (runs from the plane tangency at angle π/2 around
        // to the sphere tangency just past π).
        let fil1 = Arc {
            center: self.c1,
            radius: self.fillet,
            a_lo: std::f64::consts::FRAC_PI_2,
            a_hi: ang(self.t1, self.c1) + if ang(self.t1, self.c1) < 0.0 {
                2.0 * std::f64::consts::PI
            } else {
                0.0
            },
        };
        // Convex fillet arc, from below (angle -π/2) to the outer tangency.
        let fil2 = Arc {
            center: self.c2,
            radius: self.fillet,
            a_lo: -std::f64::consts::FRAC_PI_2,
            a_hi: ang(self.t4, self.c2),
        };
        // Outer sphere arc, from the fillet tangency up to the pole.
        let outer = Arc {
            center: origin,
            radius: self.outer_radius,
            a_lo: ang(self.t4, origin),
            a_hi: std::f64::consts::FRAC_PI_2,
        };
        ([cap, fil1, fil2, outer], [self.t2, self.t3])
    }

    /// Exact signed distance (negative inside).
    pub fn signed_dist(&self, x: &[f64]) -> f64 {
        let p = self.fold(x);
        let (arcs, seg) = self.pieces();
        let mut d = f64::INFINITY;
        for a in &arcs {
            d = d.min(a.dist(p));
        }
        d = d.min(dist_segment(p, seg[0], seg[1]));
        if self.inside_folded(p) {
            -d
        } else {
            d
        }
    }

    /// Outward unit normal at a boundary point, from the nearest piece.
    pub fn outward_normal(&self, x: &[f64]) -> Vec<f64> {
        let p = self.fold(x);
        let (arcs, seg) = self.pieces();
        let dists = [
            arcs[0].dist(p),
            arcs[1].dist(p),
            arcs[2].dist(p),
            arcs[3].dist(p),
            dist_segment(p, seg[0], seg[1]),
        ];
        let (best, _) = dists
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        let n2: P2 = match best {
            // Ball cap and outer sphere: radial.
            0 | 3 => {
                let m = norm2(p).max(1e-300);
                [p[0] / m, p[1] / m]
            }
            // Concave fillet: exterior lies toward the fillet center.
            1 => {
                let d = sub2(self.c1, p);
                let m = norm2(d).max(1e-300);
                [d[0] / m, d[1] / m]
            }
            // Convex fillet: exterior lies away from the fillet center.
            2 => {
                let d = sub2(p, self.c2);
                let m = norm2(d).max(1e-300);
                [d[0] / m, d[1] / m]
            }
            // Slab face: exterior is below the plane.
            _ => [0.0, -1.0],
        };
        self.unfold_dir(x, n2)
    }

    /// Lift a folded cross-section direction back to R^n at the point `x`.
    fn unfold_dir(&self, x: &[f64], dir: P2) -> Vec<f64> {
        let nlast = self.dim - 1;
        let rho_sq: f64 = x[..nlast].iter().map(|v| v * v).sum();
        let rho = rho_sq.sqrt();
        let mut out = vec![0.0; self.dim];
        if rho > 1e-14 {
            for i in 0..nlast {
                out[i] = dir[0] * x[i] / rho;
            }
        } else if dir[0].abs() > 0.0 {
            // On the axis every perpendicular direction is equivalent.
            out[0] = dir[0];
        }
        out[nlast] = dir[1] * x[nlast].signum();
        if x[nlast] == 0.0 {
            out[nlast] = dir[1];
        }
        out
    }

    /// Membership in the inner bracketing set `(B_r ∪ {|x_n| ≥ 2δ}) ∩ B_{1/δ}`.
    pub fn in_inner_bracket(&self, x: &[f64]) -> bool {
        let p = self.fold(x);
        let mag = norm2(p);
        (mag < self.ball_radius || p[1] >= 2.0 * self.delta) && mag <= 1.0 / self.delta
    }

    /// Membership in the outer bracketing set `(B_r ∪ {|x_n| ≥ δ}) ∩ B_{2/δ}`.
    pub fn in_outer_bracket(&self, x: &[f64]) -> bool {
        let p = self.fold(x);
        let mag = norm2(p);
        (mag < self.ball_radius || p[1] >= self.delta) && mag <= 2.0 / self.delta
    }

    /// Radii at which integrands restricted to this domain may lose
    /// smoothness along rays from the origin.
    pub fn radial_breakpoints(&self) -> Vec<f64> {
        let mut v = vec![
            self.ball_radius,
            self.h,
            norm2(self.t2),
            norm2(self.t3),
            self.outer_radius - self.fillet,
            self.outer_radius,
        ];
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v.dedup();
        v
    }
}
