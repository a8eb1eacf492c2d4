//! A staged sharp-slice construction with per-stage certificates.
//!
//! Pass a stage count as the first argument (default 3; 5 takes a few
//! minutes of exact arithmetic).

use carpet_slicer::carpet::{rational_str, validate_carpet, CarpetSpec};
use carpet_slicer::slice::{build_sharp_slice, limit_intercept, stage_target};
use num::{BigInt, BigRational};

fn main() {
    let stages: u32 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(3);
    let c = validate_carpet(&CarpetSpec {
        m: 5,
        n: 2,
        digits: vec![(0, 0), (0, 1), (1, 0), (2, 0), (4, 0)],
    })
    .unwrap();
    let u = BigRational::new(BigInt::from(1), BigInt::from(100));
    let sc = build_sharp_slice(&c, &u, stages).expect("construction");
    println!("slope {} C' {}", rational_str(&sc.slope), rational_str(&sc.c_prime));
    println!("stage,k,cell,certLower,certUpper,target,side,delta");
    for st in &sc.stages {
        let cell_row = st.cell.row.clone().unwrap();
        println!(
            "{},{},{}:{}:{},{},{},{},{},{}",
            st.stage,
            st.base_level,
            st.cell.level,
            st.cell.col,
            cell_row,
            st.cert_lower,
            st.cert_upper,
            stage_target(&c, &sc.c_prime, st.stage),
            st.neighborhood.side.letter(),
            rational_str(&st.neighborhood.delta),
        );
    }
    let (lo, hi) = limit_intercept(&sc);
    println!("limit intercept in [{}, {}]", rational_str(&lo), rational_str(&hi));
}
