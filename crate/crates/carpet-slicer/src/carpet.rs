//! Carpets, cylinder words, affine cylinder maps and line transport.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::{BigInt, BigRational, One, Zero};
use thiserror::Error;

use crate::util::{big_pow, rint};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CarpetError {
    #[error("base order violated: m = {m} must exceed n = {n} (both >= 2)")]
    BaseOrder { m: u32, n: u32 },
    #[error("digit ({i},{j}) out of range for bases ({m},{n})")]
    DigitRange { i: u32, j: u32, m: u32, n: u32 },
    #[error("digit set is empty")]
    EmptyDigits,
    #[error("no full column: no i0 has all rows 0..n-1 present")]
    NoFullColumn,
    #[error("digit ({i},{j}) not in the carpet's digit set")]
    InvalidDigit { i: u32, j: u32 },
}

/// Raw, unvalidated carpet description.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CarpetSpec {
    pub m: u32,
    pub n: u32,
    pub digits: Vec<(u32, u32)>,
}

/// Validated Bedford-McMullen carpet with a full column of digits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Carpet {
    m: u32,
    n: u32,
    digits: BTreeSet<(u32, u32)>,
    rows: BTreeMap<u32, BTreeSet<u32>>,
    full_column: u32,
}

/// Exact symbolic star dimension `1 + log(count)/log(base)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarDimension {
    pub count: u64,
    pub base: u32,
}

impl StarDimension {
    pub fn value(&self) -> f64 {
        1.0 + (self.count as f64).ln() / (self.base as f64).ln()
    }
}

impl fmt::Display for StarDimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "1+log({})/log({})", self.count, self.base)
    }
}

/// Optimal horizontal fiber: the row maximizing the digit count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fiber {
    pub row: u32,
    pub intercept: BigRational,
    pub digits: BTreeSet<u32>,
}

/// Line y = u x + t.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Line {
    pub slope: BigRational,
    pub intercept: BigRational,
}

impl Line {
    pub fn new(slope: BigRational, intercept: BigRational) -> Self {
        Line { slope, intercept }
    }

    pub fn y_at(&self, x: &BigRational) -> BigRational {
        &self.slope * x + &self.intercept
    }
}

/// Finite digit word, most significant digit first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word(Vec<(u32, u32)>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn new(c: &Carpet, digits: &[(u32, u32)]) -> Result<Self, CarpetError> {
        for &(i, j) in digits {
            if !c.digits.contains(&(i, j)) {
                return Err(CarpetError::InvalidDigit { i, j });
            }
        }
        Ok(Word(digits.to_vec()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn digits(&self) -> &[(u32, u32)] {
        &self.0
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }
}

/// Exact affine map of a cylinder word: scale by (m^-k, n^-k), then translate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineCylinder {
    pub scale_x: BigRational,
    pub scale_y: BigRational,
    pub translate_x: BigRational,
    pub translate_y: BigRational,
    pub generation: u32,
}

impl AffineCylinder {
    pub fn apply(&self, p: &(BigRational, BigRational)) -> (BigRational, BigRational) {
        (
            &self.scale_x * &p.0 + &self.translate_x,
            &self.scale_y * &p.1 + &self.translate_y,
        )
    }

    /// Image box of [0,1]^2 as (x_lo, x_hi, y_lo, y_hi).
    pub fn image_box(&self) -> (BigRational, BigRational, BigRational, BigRational) {
        (
            self.translate_x.clone(),
            &self.translate_x + &self.scale_x,
            self.translate_y.clone(),
            &self.translate_y + &self.scale_y,
        )
    }
}

/// Validates a raw description into a [`Carpet`].
pub fn validate_carpet(spec: &CarpetSpec) -> Result<Carpet, CarpetError> {
    let (m, n) = (spec.m, spec.n);
    if m <= n || n < 2 {
        return Err(CarpetError::BaseOrder { m, n });
    }
    if spec.digits.is_empty() {
        return Err(CarpetError::EmptyDigits);
    }
    let mut digits = BTreeSet::new();
    for &(i, j) in &spec.digits {
        if i >= m || j >= n {
            return Err(CarpetError::DigitRange { i, j, m, n });
        }
        digits.insert((i, j));
    }
    let mut rows: BTreeMap<u32, BTreeSet<u32>> = (0..n).map(|j| (j, BTreeSet::new())).collect();
    let mut cols: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
    for &(i, j) in &digits {
        rows.get_mut(&j).unwrap().insert(i);
        cols.entry(i).or_default().insert(j);
    }
    let full_column = cols
        .iter()
        .find(|(_, js)| js.len() == n as usize)
        .map(|(&i, _)| i)
        .ok_or(CarpetError::NoFullColumn)?;
    Ok(Carpet {
        m,
        n,
        digits,
        rows,
        full_column,
    })
}

impl Carpet {
    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn digits(&self) -> &BTreeSet<(u32, u32)> {
        &self.digits
    }

    pub fn row(&self, j: u32) -> &BTreeSet<u32> {
        &self.rows[&j]
    }

    pub fn full_column(&self) -> u32 {
        self.full_column
    }

    /// x0 = i0/(m-1): the vertical segment {x0} x [0,1] lies in the carpet.
    pub fn full_column_x(&self) -> BigRational {
        BigRational::new(BigInt::from(self.full_column), BigInt::from(self.m - 1))
    }

    pub fn max_row_size(&self) -> u64 {
        self.rows.values().map(|r| r.len() as u64).max().unwrap()
    }

    pub fn spec(&self) -> CarpetSpec {
        CarpetSpec {
            m: self.m,
            n: self.n,
            digits: self.digits.iter().cloned().collect(),
        }
    }
}

/// Star (= Assouad) dimension, `1 + log(max_j |D_j|)/log m`.
pub fn star_dimension(c: &Carpet) -> StarDimension {
    StarDimension {
        count: c.max_row_size(),
        base: c.m,
    }
}

/// The row with the most digits (smallest index on ties) and its fiber line.
pub fn optimal_fiber(c: &Carpet) -> Fiber {
    let best = c
        .rows
        .iter()
        .max_by(|(j1, r1), (j2, r2)| r1.len().cmp(&r2.len()).then(j2.cmp(j1)))
        .map(|(&j, _)| j)
        .unwrap();
    Fiber {
        row: best,
        intercept: BigRational::new(BigInt::from(best), BigInt::from(c.n - 1)),
        digits: c.rows[&best].clone(),
    }
}

/// Exact composition of the maps along a word.
pub fn cylinder_map(c: &Carpet, w: &Word) -> AffineCylinder {
    let k = w.len() as u32;
    let mut tx = BigRational::zero();
    let mut ty = BigRational::zero();
    let m = rint(c.m as i64);
    let n = rint(c.n as i64);
    // Compose right to left: the first digit is the outermost map.
    for &(i, j) in w.digits().iter().rev() {
        tx = (tx + rint(i as i64)) / &m;
        ty = (ty + rint(j as i64)) / &n;
    }
    AffineCylinder {
        scale_x: BigRational::new(BigInt::one(), big_pow(c.m, k)),
        scale_y: BigRational::new(BigInt::one(), big_pow(c.n, k)),
        translate_x: tx,
        translate_y: ty,
        generation: k,
    }
}

/// Unique fixed point (i/(m-1), j/(n-1)) of the digit map.
pub fn fixed_point(c: &Carpet, d: (u32, u32)) -> Result<(BigRational, BigRational), CarpetError> {
    if !c.digits.contains(&d) {
        return Err(CarpetError::InvalidDigit { i: d.0, j: d.1 });
    }
    Ok((
        BigRational::new(BigInt::from(d.0), BigInt::from(c.m - 1)),
        BigRational::new(BigInt::from(d.1), BigInt::from(c.n - 1)),
    ))
}

/// Image of a line under the cylinder map of `w`.
///
/// The image has slope `u (m/n)^k` and intercept `t/n^k + b - u' a` where
/// `(a, b)` is the cylinder translation.
pub fn push_line(c: &Carpet, w: &Word, ln: &Line) -> Line {
    let cyl = cylinder_map(c, w);
    let k = w.len() as u32;
    let ratio = BigRational::new(big_pow(c.m, k), big_pow(c.n, k));
    let slope = &ln.slope * &ratio;
    let intercept =
        &ln.intercept * &cyl.scale_y + &cyl.translate_y - &slope * &cyl.translate_x;
    Line { slope, intercept }
}

/// 12-digit fixed decimal rendering of a rational (used by reports and CSV).
pub fn decimal12(x: &BigRational) -> String {
    let scaled = x * BigRational::from_integer(num::pow::pow(BigInt::from(10u32), 12));
    let rounded = (scaled + crate::util::rat(1, 2)).floor().to_integer();
    let neg = rounded < BigInt::zero();
    let abs = if neg { -rounded } else { rounded };
    let s = abs.to_string();
    let s = if s.len() <= 12 {
        format!("0.{}{}", "0".repeat(12 - s.len()), s)
    } else {
        let (int, frac) = s.split_at(s.len() - 12);
        format!("{int}.{frac}")
    };
    if neg {
        format!("-{s}")
    } else {
        s
    }
}

/// 12-digit fixed decimal rendering of a float.
pub fn decimal12_f64(x: f64) -> String {
    format!("{x:.12}")
}

pub fn rational_str(x: &BigRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}
