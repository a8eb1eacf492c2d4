//! Validation and exact constants for two reference carpets.

use carpet_slicer::carpet::{
    decimal12_f64, optimal_fiber, star_dimension, validate_carpet, CarpetSpec,
};
use carpet_slicer::projection::compute_c0;

fn main() {
    let specs = [
        ("E1", CarpetSpec {
            m: 3,
            n: 2,
            digits: vec![(0, 0), (0, 1), (2, 0)],
        }),
        ("E3", CarpetSpec {
            m: 5,
            n: 2,
            digits: vec![(0, 0), (0, 1), (1, 0), (2, 0), (4, 0)],
        }),
    ];
    for (name, spec) in specs {
        let c = validate_carpet(&spec).expect("valid carpet");
        let sd = star_dimension(&c);
        let fiber = optimal_fiber(&c);
        println!("{name}: m {} n {} |D| {}", c.m(), c.n(), c.digits().len());
        println!("  full column at i0 = {}", c.full_column());
        println!("  dim* = {} = {}", sd, decimal12_f64(sd.value()));
        println!(
            "  optimal fiber: row {} with {} digits {:?}",
            fiber.row,
            fiber.digits.len(),
            fiber.digits
        );
        println!("  critical slope bound c0 = {}", compute_c0(&c));
    }
}
