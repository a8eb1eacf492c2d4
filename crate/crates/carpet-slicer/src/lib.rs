//! Certified computation on Bedford-McMullen carpets.
//!
//! A carpet is the attractor of the maps `(x,y) -> ((x+i)/m, (y+j)/n)` over an
//! allowed digit set `D`, with `m > n` and at least one full column of digits.
//! This crate computes, in exact rational arithmetic:
//!
//! * the star (Assouad) dimension and the critical slope bound `c0`
//!   ([`carpet`], [`projection`]),
//! * certified interval enclosures of skew projections and the three-valued
//!   line/cylinder intersection predicate ([`projection`]),
//! * two-sided covering-number bounds for line slices and exact fiber counts
//!   over m-adic grids, plus a finite-scale Furstenberg dimension estimator
//!   ([`grid`]),
//! * sharp-slice constructions: lines of small nonzero slope whose slices
//!   carry per-stage certified covering counts growing like `m^{(dim* - 1) i}`,
//!   with machine-checkable certificates ([`slice`]),
//! * a text record format and a command-line driver ([`record`], [`cli`]).
//!
//! Runnable walkthroughs live in `examples/`:
//!
//! * `carpet_info` - validation, star dimension, optimal fiber, `c0`
//! * `projections` - projection enclosures and line/cylinder verdicts
//! * `fiber_counts` - exact fiber covering numbers and their exponents
//! * `covering_bounds` - certified two-sided slice covering bounds
//! * `build_slice` - a full sharp-slice construction with certificates
//! * `verify_record` - record round-trip and independent re-verification

pub mod carpet;
pub mod cli;
pub mod grid;
pub mod projection;
pub mod record;
pub mod slice;

pub use carpet::{AffineCylinder, Carpet, CarpetError, CarpetSpec, Fiber, Line, Word};
pub use grid::{Cell, CoverBounds, FurstenbergEstimate, GridError};
pub use projection::{IntervalEnclosure, ProjectionError, SlopeBound, Tri};
pub use slice::{GoodNeighborhood, SliceConstruction, SliceError, StageCertificate};

pub(crate) mod util {
    use num::{BigInt, BigRational, Signed};

    pub fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    pub fn rint(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    pub fn big_pow(b: u32, e: u32) -> BigInt {
        num::pow::pow(BigInt::from(b), e as usize)
    }

    /// (num/den)^e as an exact rational.
    pub fn pow_frac(num: u32, den: u32, e: u32) -> BigRational {
        BigRational::new(big_pow(num, e), big_pow(den, e))
    }

    pub fn floor_int(x: &BigRational) -> BigInt {
        x.floor().to_integer()
    }

    /// Smallest k with n^k > m^p.
    pub fn min_k_finer(n: u32, m: u32, p: u32) -> u32 {
        let target = big_pow(m, p);
        let mut k = 0u32;
        let mut acc = BigInt::from(1u32);
        let n = BigInt::from(n);
        while acc <= target {
            acc *= &n;
            k += 1;
        }
        k
    }

    pub fn abs(x: &BigRational) -> BigRational {
        if x.is_negative() {
            -x.clone()
        } else {
            x.clone()
        }
    }
}
