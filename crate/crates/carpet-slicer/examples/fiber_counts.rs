//! Exact fiber covering numbers and their exponents.

use carpet_slicer::carpet::{optimal_fiber, star_dimension, validate_carpet, CarpetSpec};
use carpet_slicer::grid::fiber_covering_number;

fn main() {
    let c = validate_carpet(&CarpetSpec {
        m: 3,
        n: 2,
        digits: vec![(0, 0), (0, 1), (2, 0)],
    })
    .unwrap();
    let fiber = optimal_fiber(&c);
    let target = star_dimension(&c).value() - 1.0;
    println!("optimal fiber row {} digits {:?}", fiber.row, fiber.digits);
    println!("level,count,exponent (target {target:.4})");
    for p in 1..=12u32 {
        let count = fiber_covering_number(&c, &fiber, p);
        let exponent = (count as f64).ln() / (p as f64 * (c.m() as f64).ln());
        println!("{p},{count},{exponent:.6}");
    }
}
