//! Two-sided covering-number bounds for a line slice, sharpening with depth.

use carpet_slicer::carpet::{validate_carpet, CarpetSpec, Line};
use carpet_slicer::grid::{covering_number_bounds, Cell};
use num::{BigInt, BigRational};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn main() {
    let c = validate_carpet(&CarpetSpec {
        m: 3,
        n: 2,
        digits: vec![(0, 0), (0, 1), (2, 0)],
    })
    .unwrap();
    // Count level-2 grid cells met by the slice inside the unit square.
    let ln = Line::new(rat(1, 10), rat(1, 20));
    let cell = Cell::square(0, 0, 0);
    println!("slice of y = x/10 + 1/20, cells of the level-2 grid");
    println!("depth,lower,upper");
    for q in [4u32, 6, 8, 10, 12] {
        let b = covering_number_bounds(&c, &ln, &cell, 2, q).unwrap();
        println!("{q},{},{}", b.lower, b.upper);
    }
}
