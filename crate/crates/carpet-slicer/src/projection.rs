//! Skew projections `pi_k(x,y) = y + k x`: certified enclosures, the critical
//! slope bound `c0`, and the line/cylinder intersection predicate.
//!
//! A line `l_{u,t}` meets a set `X` iff `t` lies in `pi_{-u}(X)`. For
//! `|k| <= c0` the projection `pi_k(F)` is a full interval, so membership
//! reduces to comparing `t` against a certified interval enclosure.

use std::cmp::Ordering;
use std::fmt;

use num::{BigRational, Zero};
use thiserror::Error;

use crate::carpet::{Carpet, Line, Word};
use crate::util::{abs, pow_frac, rat, rint};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProjectionError {
    #[error("refinement depth must be >= 1")]
    DepthZero,
    #[error("slope magnitude {0} exceeds the interval bound c0 = {1}")]
    SlopeTooLarge(String, String),
}

/// Three-valued certified verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tri {
    Yes,
    No,
    Unknown,
}

/// Certified bracket of a projection image: the image is contained in the
/// outer interval, and (when `valid`) contains the inner interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalEnclosure {
    pub outer_lo: BigRational,
    pub outer_hi: BigRational,
    pub inner_lo: BigRational,
    pub inner_hi: BigRational,
    pub valid: bool,
}

impl IntervalEnclosure {
    /// Affine image x -> s*x + o (s > 0).
    pub fn scale_shift(&self, s: &BigRational, o: &BigRational) -> IntervalEnclosure {
        IntervalEnclosure {
            outer_lo: s * &self.outer_lo + o,
            outer_hi: s * &self.outer_hi + o,
            inner_lo: s * &self.inner_lo + o,
            inner_hi: s * &self.inner_hi + o,
            valid: self.valid,
        }
    }

    pub fn classify(&self, t: &BigRational) -> Tri {
        if t < &self.outer_lo || t > &self.outer_hi {
            Tri::No
        } else if self.valid && t >= &self.inner_lo && t <= &self.inner_hi {
            Tri::Yes
        } else {
            Tri::Unknown
        }
    }

    pub fn outer_width(&self) -> BigRational {
        &self.outer_hi - &self.outer_lo
    }
}

/// Largest admissible slope magnitude, or unbounded when every digit shares
/// the full column (no overlap constraint arises).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SlopeBound {
    Finite(BigRational),
    Unbounded,
}

impl SlopeBound {
    pub fn admits(&self, u: &BigRational) -> bool {
        match self {
            SlopeBound::Finite(c) => &abs(u) <= c,
            SlopeBound::Unbounded => true,
        }
    }

    pub fn as_finite(&self) -> Option<&BigRational> {
        match self {
            SlopeBound::Finite(c) => Some(c),
            SlopeBound::Unbounded => None,
        }
    }
}

impl fmt::Display for SlopeBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlopeBound::Finite(c) => write!(f, "{}", crate::carpet::rational_str(c)),
            SlopeBound::Unbounded => write!(f, "unbounded"),
        }
    }
}

/// `pi_k(p) = y + k x`, exactly.
pub fn project_point(kappa: &BigRational, p: &(BigRational, BigRational)) -> BigRational {
    &p.1 + kappa * &p.0
}

/// Largest c such that for all |kappa| <= c and every digit, the projected
/// digit image of the full-column segment L = {x0} x [0,1] overlaps pi_k(L).
///
/// For digit (i,j) the two projected segments are `kappa*x0 + [0,1]` and
/// `kappa*(x0+i)/m + j/n + [0,1/n]`; overlap fails across a single linear
/// threshold in kappa per digit and sign.
pub fn compute_c0(c: &Carpet) -> SlopeBound {
    let mut best: Option<BigRational> = None;
    let i0 = c.full_column() as i64;
    let n = c.n() as i64;
    for &(i, j) in c.digits() {
        let coeff = rat(i as i64 - i0, c.m() as i64);
        if coeff.is_zero() {
            continue;
        }
        let ca = abs(&coeff);
        // Overlap holds iff  -(j+1)/n <= coeff*kappa <= (n-j)/n.
        let pos = rat(n - j as i64, n) / &ca;
        let neg = rat(j as i64 + 1, n) / &ca;
        for bound in [pos, neg] {
            best = Some(match best {
                None => bound,
                Some(b) => {
                    if bound < b {
                        bound
                    } else {
                        b
                    }
                }
            });
        }
    }
    match best {
        Some(b) => SlopeBound::Finite(b),
        None => SlopeBound::Unbounded,
    }
}

/// Whether all level-one overlaps of the c0 criterion hold at this kappa.
pub fn overlaps_at(c: &Carpet, kappa: &BigRational) -> bool {
    let x0 = c.full_column_x();
    let n = rint(c.n() as i64);
    let a_lo = kappa * &x0;
    let a_hi = &a_lo + rint(1);
    for &(i, j) in c.digits() {
        let b_lo = kappa * ((&x0 + rint(i as i64)) / rint(c.m() as i64)) + rat(j as i64, c.n() as i64);
        let b_hi = &b_lo + rint(1) / &n;
        if b_lo > a_hi || b_hi < a_lo {
            return false;
        }
    }
    true
}

/// Encloses `[min pi_k(F), max pi_k(F)]` by unrolling the exact recursion
/// `M(k) = min_d [ j/n + k i/m + M(k n/m)/n ]` for `q` levels, with the box
/// projection `pi_k([0,1]^2)` as base case. Outer width <= (1+|k|) n^-q.
///
/// When `|k| <= c0` the image is exactly the interval `[min, max]`, and the
/// returned inner interval `[min_hi, max_lo]` is certified inside it.
pub fn projection_extent(
    c: &Carpet,
    kappa: &BigRational,
    q: u32,
) -> Result<IntervalEnclosure, ProjectionError> {
    if q == 0 {
        return Err(ProjectionError::DepthZero);
    }
    let n = rint(c.n() as i64);
    // Base case at depth q: outer bounds from pi over the unit square,
    // attained inner witnesses from the full column {x0} x [0,1] in F.
    let kq = kappa * pow_frac(c.n(), c.m(), q);
    let zero = BigRational::zero();
    let witness = &kq * c.full_column_x();
    let mut min_lo = if kq < zero { kq.clone() } else { zero.clone() };
    let mut min_hi = witness.clone();
    let mut max_hi = rint(1) + if kq > zero { kq } else { zero.clone() };
    let mut max_lo = rint(1) + witness;
    for r in (0..q).rev() {
        let kr = kappa * pow_frac(c.n(), c.m(), r);
        let mut dmin: Option<BigRational> = None;
        let mut dmax: Option<BigRational> = None;
        for &(i, j) in c.digits() {
            let v = rat(j as i64, c.n() as i64) + &kr * rat(i as i64, c.m() as i64);
            dmin = Some(match dmin {
                None => v.clone(),
                Some(b) => {
                    if v < b {
                        v.clone()
                    } else {
                        b
                    }
                }
            });
            dmax = Some(match dmax {
                None => v,
                Some(b) => {
                    if v > b {
                        v
                    } else {
                        b
                    }
                }
            });
        }
        let (dmin, dmax) = (dmin.unwrap(), dmax.unwrap());
        min_lo = &dmin + min_lo / &n;
        min_hi = &dmin + min_hi / &n;
        max_lo = &dmax + max_lo / &n;
        max_hi = &dmax + max_hi / &n;
    }
    let valid = compute_c0(c).admits(kappa) && min_hi <= max_lo;
    Ok(IntervalEnclosure {
        outer_lo: min_lo,
        outer_hi: max_hi,
        inner_lo: min_hi,
        inner_hi: max_lo,
        valid,
    })
}

/// Enclosure of `{ t : l_{u,t} meets the cylinder of w }`, i.e. of
/// `pi_{-u}(phi_w(F)) = pi_{-u(n/m)^k}(F)/n^k + (b - u a)`.
pub fn intercept_interval(
    c: &Carpet,
    u: &BigRational,
    w: &Word,
    q: u32,
) -> Result<IntervalEnclosure, ProjectionError> {
    let c0 = compute_c0(c);
    if !c0.admits(u) {
        return Err(ProjectionError::SlopeTooLarge(u.to_string(), c0.to_string()));
    }
    let k = w.len() as u32;
    let kappa = -u * pow_frac(c.n(), c.m(), k);
    let ext = projection_extent(c, &kappa, q)?;
    let cyl = crate::carpet::cylinder_map(c, w);
    let offset = &cyl.translate_y - u * &cyl.translate_x;
    Ok(ext.scale_shift(&cyl.scale_y, &offset))
}

/// Certified three-valued test of `l ∩ phi_w(F) != empty`.
pub fn line_meets_cylinder(
    c: &Carpet,
    ln: &Line,
    w: &Word,
    q: u32,
) -> Result<Tri, ProjectionError> {
    let enc = intercept_interval(c, &ln.slope, w, q)?;
    Ok(enc.classify(&ln.intercept))
}

/// Precomputed per-depth enclosures of `pi_{-u (n/m)^d}(F)` together with the
/// pulled-back slopes, used by the covering-number search.
pub(crate) struct EnclosureTable {
    /// slopes[d] = u (n/m)^d
    pub slopes: Vec<BigRational>,
    pub rows: Vec<IntervalEnclosure>,
}

impl EnclosureTable {
    pub fn build(c: &Carpet, u: &BigRational, max_depth: u32, refine: u32) -> Self {
        let step = rat(c.n() as i64, c.m() as i64);
        let mut slopes = Vec::with_capacity(max_depth as usize + 1);
        let mut rows = Vec::with_capacity(max_depth as usize + 1);
        let mut ud = u.clone();
        for _ in 0..=max_depth {
            rows.push(projection_extent(c, &(-&ud), refine).expect("refine >= 1"));
            slopes.push(ud.clone());
            ud *= &step;
        }
        EnclosureTable { slopes, rows }
    }

    pub fn verdict(&self, d: u32, t: &BigRational) -> Tri {
        self.rows[d as usize].classify(t)
    }
}

pub(crate) fn rat_min(a: BigRational, b: BigRational) -> BigRational {
    match a.cmp(&b) {
        Ordering::Greater => b,
        _ => a,
    }
}

pub(crate) fn rat_max(a: BigRational, b: BigRational) -> BigRational {
    match a.cmp(&b) {
        Ordering::Less => b,
        _ => a,
    }
}
