//! Certified projection enclosures and line/cylinder verdicts.

use carpet_slicer::carpet::{validate_carpet, CarpetSpec, Line, Word};
use carpet_slicer::projection::{line_meets_cylinder, projection_extent};
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

    // pi_kappa(F) enclosures tighten as the recursion is unrolled deeper.
    let kappa = rat(1, 2);
    for q in [2u32, 4, 8, 16] {
        let enc = projection_extent(&c, &kappa, q).unwrap();
        println!(
            "kappa 1/2 depth {q:2}: outer [{}, {}] width {}",
            enc.outer_lo,
            enc.outer_hi,
            enc.outer_width()
        );
    }

    // Three-valued intersection tests against the cylinder of a short word.
    let w = Word::new(&c, &[(2, 0), (0, 1)]).unwrap();
    for (num, den) in [(1i64, 18), (1, 8), (1, 4), (1, 2)] {
        let ln = Line::new(rat(1, 4), rat(num, den));
        let verdict = line_meets_cylinder(&c, &ln, &w, 12).unwrap();
        println!("line y = x/4 + {num}/{den} vs cylinder(20,01): {verdict:?}");
    }
}
