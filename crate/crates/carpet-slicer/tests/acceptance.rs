//! Release gate: quantitative end-to-end checks on the two reference
//! carpets. Each test prints exactly one pass/fail line; tolerances and
//! runtime budgets are pinned here, not configurable.

use std::collections::BTreeSet;
use std::sync::OnceLock;
use std::time::Instant;

use num::{BigInt, BigRational, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use carpet_slicer::carpet::{
    fixed_point, optimal_fiber, star_dimension, validate_carpet, Carpet, CarpetSpec, Line, Word,
};
use carpet_slicer::grid::{
    carpet_cover_bounds, covering_number_bounds, fiber_covering_number, furstenberg_estimate,
    lemma0_check, slice_boxes, Cell, CountEntry,
};
use carpet_slicer::projection::{
    compute_c0, intercept_interval, line_meets_cylinder, overlaps_at, Tri,
};
use carpet_slicer::slice::{
    build_sharp_slice, limit_intercept, stage_target, verify_certificates, SliceConstruction,
};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Smallest k with n^k > m^p.
fn mkf(n: u32, m: u32, p: u32) -> u32 {
    let target = num::pow::pow(BigInt::from(m), p as usize);
    let mut k = 0u32;
    let mut acc = BigInt::from(1u32);
    while acc <= target {
        acc *= n;
        k += 1;
    }
    k
}

fn e1() -> Carpet {
    validate_carpet(&CarpetSpec {
        m: 3,
        n: 2,
        digits: vec![(0, 0), (0, 1), (2, 0)],
    })
    .unwrap()
}

fn e3() -> Carpet {
    validate_carpet(&CarpetSpec {
        m: 5,
        n: 2,
        digits: vec![(0, 0), (0, 1), (1, 0), (2, 0), (4, 0)],
    })
    .unwrap()
}

fn check(id: u32, ok: bool, detail: String) {
    println!(
        "criterion {id}: {} - {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {id} failed: {detail}");
}

#[test]
fn criterion_1_exact_constants() {
    let t0 = Instant::now();
    let c = e1();
    let sd = star_dimension(&c);
    let sd_ok = sd.count == 2
        && sd.base == 3
        && (sd.value() - 1.630929753571).abs() <= 1e-9
        && carpet_slicer::carpet::decimal12_f64(sd.value()) == "1.630929753571";
    let c0 = compute_c0(&c);
    let c0_ok = c0.as_finite() == Some(&rat(3, 4));
    // Dense scan: overlap must hold on |kappa| <= 3/4 and first fail
    // within one step beyond it.
    let mut min_fail: Option<i64> = None;
    for i in 0..=10_000i64 {
        for sign in [1i64, -1] {
            let kappa = rat(sign * i, 10_000);
            if !overlaps_at(&c, &kappa) && min_fail.map_or(true, |f| i < f) {
                min_fail = Some(i);
            }
        }
    }
    let scan_ok = min_fail == Some(7501);
    let secs = t0.elapsed().as_secs_f64();
    check(
        1,
        sd_ok && c0_ok && scan_ok && secs < 1.0,
        format!(
            "dim* {} = {}, c0 {}, first overlap failure at |kappa| = {:?}/10^4, {:.2}s",
            sd,
            carpet_slicer::carpet::decimal12_f64(sd.value()),
            c0,
            min_fail,
            secs
        ),
    );
}

#[test]
fn criterion_2_fiber_counts() {
    let t0 = Instant::now();
    let c = e1();
    let f = optimal_fiber(&c);
    let digs: Vec<u128> = f.digits.iter().map(|&d| d as u128).collect();
    let mut ok = true;
    let mut detail = String::new();
    for p in 1..=10u32 {
        let count = fiber_covering_number(&c, &f, p);
        let formula_ok = count == 1u128 << (p + 1);
        // Oracle: enumerate all depth-(p+6) digit strings; each value V
        // reaches cells floor(V/3^6) and (top digit present) floor((V+1)/3^6)
        // of the level-p grid.
        let depth = p + 6;
        let div = 3u128.pow(6);
        let mut cells: BTreeSet<u128> = BTreeSet::new();
        let mut idx = vec![0usize; depth as usize];
        loop {
            let mut v = 0u128;
            for &i in &idx {
                v = v * 3 + digs[i];
            }
            cells.insert(v / div);
            cells.insert((v + 1) / div);
            let mut pos = idx.len();
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < digs.len() {
                    break;
                }
                idx[pos] = 0;
                if pos == 0 {
                    pos = usize::MAX;
                    break;
                }
            }
            if pos == usize::MAX {
                break;
            }
        }
        let oracle_ok = cells.len() as u128 == count;
        let exponent = (count as f64).ln() / (p as f64 * 3f64.ln());
        // Within (log 2)/(p log 3) of dim* - 1 = 0.6309...
        let center = 2f64.ln() / 3f64.ln();
        let tol = 2f64.ln() / (p as f64 * 3f64.ln()) + 1e-12;
        let exp_ok = (exponent - center).abs() <= tol;
        if !(formula_ok && oracle_ok && exp_ok) {
            ok = false;
            detail = format!(
                "p {p}: count {count}, oracle {}, exponent {exponent:.4}",
                cells.len()
            );
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    check(
        2,
        ok && secs < 10.0,
        if ok {
            format!("counts 2^(p+1) for p = 1..=10, oracle match, {secs:.2}s")
        } else {
            detail
        },
    );
}

#[test]
fn criterion_3_furstenberg_window() {
    let t0 = Instant::now();
    let c = e1();
    let window = 8u32;
    let digits: Vec<(i64, i64)> = c.digits().iter().map(|&(i, j)| (i as i64, j as i64)).collect();
    let mut entries: Vec<CountEntry> = Vec::new();
    for k in 0..=2u32 {
        let q = mkf(c.n(), c.m(), k + window);
        // Candidate cells: level-k grid cells whose closure meets a level-k
        // cylinder box (edge-only cells cannot carry the maximum).
        let m_k = 3i64.pow(k);
        let n_k = 2i64.pow(k);
        let mut cand: BTreeSet<(i64, i64)> = BTreeSet::new();
        let mut idx = vec![0usize; k as usize];
        loop {
            let (mut ax, mut ay) = (0i64, 0i64);
            for &i in &idx {
                ax = ax * 3 + digits[i].0;
                ay = ay * 2 + digits[i].1;
            }
            let r0 = (ay * m_k) / n_k;
            let r1 = (((ay + 1) * m_k) / n_k).min(m_k - 1);
            for row in r0..=r1 {
                cand.insert((ax, row));
            }
            let mut pos = idx.len();
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < digits.len() {
                    break;
                }
                idx[pos] = 0;
                if pos == 0 {
                    pos = usize::MAX;
                    break;
                }
            }
            if pos == usize::MAX || k == 0 {
                break;
            }
        }
        for (col, row) in cand {
            let cell = Cell::square(k, col, row);
            let bounds = carpet_cover_bounds(&c, &cell, window, q).unwrap();
            entries.push(CountEntry {
                base_level: k,
                cell,
                window,
                lower: bounds.lower,
            });
        }
    }
    let est = furstenberg_estimate(3, &entries).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    check(
        3,
        (est.value - 1.6309).abs() <= 0.12 && secs < 120.0,
        format!(
            "best value {:.4} at level {} cell ({},{}), target 1.6309 +- 0.12, {} cells, {:.0}s",
            est.value,
            est.base_level,
            est.cell.col,
            est.cell.row.clone().unwrap(),
            entries.len(),
            secs
        ),
    );
}

struct BuildOutcome {
    sc: Result<SliceConstruction, String>,
    secs: f64,
}

static BUILD: OnceLock<BuildOutcome> = OnceLock::new();

fn e3_build() -> &'static BuildOutcome {
    BUILD.get_or_init(|| {
        let t0 = Instant::now();
        let sc = build_sharp_slice(&e3(), &rat(1, 100), 5).map_err(|e| e.to_string());
        BuildOutcome {
            sc,
            secs: t0.elapsed().as_secs_f64(),
        }
    })
}

#[test]
fn criterion_4_sharp_slice_build() {
    let b = e3_build();
    let sc = match &b.sc {
        Ok(sc) => sc,
        Err(e) => {
            check(4, false, format!("build failed: {e}"));
            return;
        }
    };
    let c = &sc.carpet;
    let mut ok = true;
    let mut notes = Vec::new();
    for st in &sc.stages {
        let target = stage_target(c, &sc.c_prime, st.stage).max(BigInt::zero());
        if BigInt::from(st.cert_lower) < target {
            ok = false;
            notes.push(format!("stage {} lower {} < {target}", st.stage, st.cert_lower));
        }
    }
    for w in sc.stages.windows(2) {
        if w[1].stage >= 2 && w[1].cert_lower < 2 * w[0].cert_lower {
            ok = false;
            notes.push(format!(
                "ratio {}/{} < 2 at stage {}",
                w[1].cert_lower, w[0].cert_lower, w[1].stage
            ));
        }
    }
    let t0 = Instant::now();
    let verify = verify_certificates(sc, 6);
    let vsecs = t0.elapsed().as_secs_f64();
    if let Err(e) = &verify {
        ok = false;
        notes.push(format!("verify: {e}"));
    }
    let total = b.secs + vsecs;
    let lows: Vec<u64> = sc.stages.iter().map(|s| s.cert_lower).collect();
    check(
        4,
        ok && total < 600.0,
        format!(
            "certLower {lows:?}, verify at q+6 {}, build {:.0}s + verify {:.0}s{}",
            if verify.is_ok() { "ok" } else { "failed" },
            b.secs,
            vsecs,
            if notes.is_empty() {
                String::new()
            } else {
                format!("; {}", notes.join("; "))
            }
        ),
    );
}

#[test]
fn criterion_5_upper_bound_sanity() {
    let b = e3_build();
    let sc = match &b.sc {
        Ok(sc) => sc,
        Err(e) => {
            check(5, false, format!("build failed: {e}"));
            return;
        }
    };
    let allowance = (star_dimension(&sc.carpet).value() - 1.0) + 0.35;
    let m = sc.carpet.m() as f64;
    let mut worst = 0f64;
    for st in &sc.stages {
        let e = (st.cert_upper as f64).ln() / (st.stage as f64 * m.ln());
        worst = worst.max(e);
    }
    check(
        5,
        worst <= allowance,
        format!("max log certUpper / (i log 5) = {worst:.4} <= {allowance:.4}"),
    );
}

#[test]
fn criterion_6_nine_to_one_covering() {
    let b = e3_build();
    let sc = match &b.sc {
        Ok(sc) => sc,
        Err(e) => {
            check(6, false, format!("build failed: {e}"));
            return;
        }
    };
    let c = &sc.carpet;
    let (lo, hi) = limit_intercept(sc);
    let t_star = (lo + hi) / rat(2, 1);
    let depth = 8u32;
    let xs: Vec<_> = sc
        .stages
        .iter()
        .map(|st| slice_boxes(c, &Line::new(sc.slope.clone(), st.intercept.clone()), depth).unwrap())
        .collect();
    let x = slice_boxes(c, &Line::new(sc.slope.clone(), t_star), depth).unwrap();
    let mut ok = true;
    let mut notes = Vec::new();
    for p in [3u32, 4] {
        match lemma0_check(&xs, &x, c.m(), p) {
            Ok(rep) => {
                let holds = rep.checks.iter().all(|ck| ck.inequality_holds);
                if !holds {
                    ok = false;
                }
                notes.push(format!(
                    "p {p}: threshold k {} checks {}",
                    rep.threshold_index + 1,
                    if holds { "hold" } else { "violated" }
                ));
            }
            Err(e) => {
                ok = false;
                notes.push(format!("p {p}: {e}"));
            }
        }
    }
    check(6, ok, notes.join(", "));
}

fn random_carpet(rng: &mut impl Rng) -> Carpet {
    loop {
        let m = rng.gen_range(3u32..=5);
        let n = 2u32;
        let i0 = rng.gen_range(0..m);
        let mut digits: BTreeSet<(u32, u32)> = (0..n).map(|j| (i0, j)).collect();
        for i in 0..m {
            for j in 0..n {
                if rng.gen_bool(0.35) {
                    digits.insert((i, j));
                }
            }
        }
        if let Ok(c) = validate_carpet(&CarpetSpec {
            m,
            n,
            digits: digits.into_iter().collect(),
        }) {
            return c;
        }
    }
}

fn random_slope(rng: &mut impl Rng, c: &Carpet) -> BigRational {
    let base = match compute_c0(c).as_finite() {
        Some(b) => b.clone(),
        None => rat(2, 1),
    };
    let num = rng.gen_range(0i64..=8);
    let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
    base * rat(sign * num, 8)
}

fn random_word(rng: &mut impl Rng, c: &Carpet, max_len: usize) -> Word {
    let digits: Vec<(u32, u32)> = c.digits().iter().cloned().collect();
    let len = rng.gen_range(0..=max_len);
    let picked: Vec<(u32, u32)> = (0..len)
        .map(|_| digits[rng.gen_range(0..digits.len())])
        .collect();
    Word::new(c, &picked).unwrap()
}

/// Exhaustive depth extension of a cylinder, no enclosure pruning:
/// whether the line geometrically meets any leaf box, plus the hull of
/// projected carpet witness points (cylinder images of digit fixed points).
fn oracle_line_scan(
    c: &Carpet,
    u: &BigRational,
    t: &BigRational,
    w: &Word,
    extra: u32,
) -> (bool, BigRational, BigRational) {
    let fps: Vec<(BigRational, BigRational)> = c
        .digits()
        .iter()
        .map(|&d| fixed_point(c, d).unwrap())
        .collect();
    let digits: Vec<(u32, u32)> = c.digits().iter().cloned().collect();
    let (mut ax0, mut ay0) = (BigInt::zero(), BigInt::zero());
    for &(i, j) in w.digits() {
        ax0 = ax0 * c.m() + i;
        ay0 = ay0 * c.n() + j;
    }
    let total = w.len() as u32 + extra;
    let m_tot = BigRational::from_integer(num::pow::pow(BigInt::from(c.m()), total as usize));
    let n_tot = BigRational::from_integer(num::pow::pow(BigInt::from(c.n()), total as usize));
    let mut hit = false;
    let mut wit_lo: Option<BigRational> = None;
    let mut wit_hi: Option<BigRational> = None;
    let mut stack = vec![(ax0, ay0, w.len() as u32)];
    while let Some((ax, ay, d)) = stack.pop() {
        if d < total {
            for &(i, j) in &digits {
                stack.push((&ax * c.m() + i, &ay * c.n() + j, d + 1));
            }
            continue;
        }
        let bx0 = BigRational::from_integer(ax.clone()) / &m_tot;
        let bx1 = &bx0 + BigRational::from_integer(BigInt::from(1)) / &m_tot;
        let by0 = BigRational::from_integer(ay.clone()) / &n_tot;
        let by1 = &by0 + BigRational::from_integer(BigInt::from(1)) / &n_tot;
        if !hit {
            let (ua, ub) = (u * &bx0, u * &bx1);
            let (ulo, uhi) = if ua <= ub { (ua, ub) } else { (ub, ua) };
            let t_lo = &by0 - &uhi;
            let t_hi = &by1 - &ulo;
            if t >= &t_lo && t <= &t_hi {
                hit = true;
            }
        }
        for (fx, fy) in &fps {
            let px = (BigRational::from_integer(ax.clone()) + fx) / &m_tot;
            let py = (BigRational::from_integer(ay.clone()) + fy) / &n_tot;
            let wit = &py - u * &px;
            wit_lo = Some(match wit_lo {
                None => wit.clone(),
                Some(b) => b.min(wit.clone()),
            });
            wit_hi = Some(match wit_hi {
                None => wit,
                Some(b) => b.max(wit),
            });
        }
    }
    (hit, wit_lo.unwrap(), wit_hi.unwrap())
}

/// Independent two-sided covering oracle by exhaustive depth-`depth`
/// cylinder enumeration with purely geometric tests.
fn oracle_cover(
    c: &Carpet,
    ln: &Line,
    cell: &Cell,
    b: u32,
    depth: u32,
) -> (u64, u64) {
    let fps: Vec<(BigRational, BigRational)> = c
        .digits()
        .iter()
        .map(|&d| fixed_point(c, d).unwrap())
        .collect();
    let digits: Vec<(u32, u32)> = c.digits().iter().cloned().collect();
    let row = cell.row.clone().unwrap();
    let mk = BigRational::from_integer(num::pow::pow(BigInt::from(c.m()), cell.level as usize));
    let qx0 = BigRational::from_integer(cell.col.clone()) / &mk;
    let qx1 = BigRational::from_integer(&cell.col + 1) / &mk;
    let qy0 = BigRational::from_integer(row.clone()) / &mk;
    let qy1 = BigRational::from_integer(&row + 1) / &mk;
    let mb = num::pow::pow(BigInt::from(c.m()), b as usize);
    let crange: (BigInt, BigInt) = (&cell.col * &mb, (&cell.col + 1) * &mb);
    let rrange: (BigInt, BigInt) = (&row * &mb, (&row + 1) * &mb);
    let m_target = BigRational::from_integer(num::pow::pow(
        BigInt::from(c.m()),
        (cell.level + b) as usize,
    ));
    let m_d = BigRational::from_integer(num::pow::pow(BigInt::from(c.m()), depth as usize));
    let n_d = BigRational::from_integer(num::pow::pow(BigInt::from(c.n()), depth as usize));
    let mut lower: BTreeSet<(BigInt, BigInt)> = BTreeSet::new();
    let mut upper: BTreeSet<(BigInt, BigInt)> = BTreeSet::new();
    let mut stack = vec![(BigInt::zero(), BigInt::zero(), 0u32)];
    while let Some((ax, ay, d)) = stack.pop() {
        if d < depth {
            for &(i, j) in &digits {
                stack.push((&ax * c.m() + i, &ay * c.n() + j, d + 1));
            }
            continue;
        }
        let bx0 = BigRational::from_integer(ax.clone()) / &m_d;
        let bx1 = &bx0 + BigRational::from_integer(BigInt::from(1)) / &m_d;
        let by0 = BigRational::from_integer(ay.clone()) / &n_d;
        let by1 = &by0 + BigRational::from_integer(BigInt::from(1)) / &n_d;
        // Clip the closed box to closure(Q).
        let ix0 = bx0.clone().max(qx0.clone());
        let ix1 = bx1.clone().min(qx1.clone());
        let iy0 = by0.clone().max(qy0.clone());
        let iy1 = by1.clone().min(qy1.clone());
        if ix0 > ix1 || iy0 > iy1 {
            continue;
        }
        // Line segment inside the clipped box.
        let (sx0, sx1) = if ln.slope.is_zero() {
            if &ln.intercept < &iy0 || &ln.intercept > &iy1 {
                continue;
            }
            (ix0.clone(), ix1.clone())
        } else {
            let xa = (&iy0 - &ln.intercept) / &ln.slope;
            let xb = (&iy1 - &ln.intercept) / &ln.slope;
            let (xen, xex) = if ln.slope.is_positive() {
                (xa, xb)
            } else {
                (xb, xa)
            };
            let s0 = ix0.clone().max(xen);
            let s1 = ix1.clone().min(xex);
            if s0 > s1 {
                continue;
            }
            (s0, s1)
        };
        let ya = &ln.slope * &sx0 + &ln.intercept;
        let yb = &ln.slope * &sx1 + &ln.intercept;
        let (sy0, sy1) = if ya <= yb { (ya, yb) } else { (yb, ya) };
        let c0 = (&sx0 * &m_target).floor().to_integer();
        let c1 = (&sx1 * &m_target).floor().to_integer();
        let r0 = (&sy0 * &m_target).floor().to_integer();
        let r1 = (&sy1 * &m_target).floor().to_integer();
        let cc0 = c0.clone().max(crange.0.clone());
        let cc1 = c1.clone().min(crange.1.clone());
        let rr0 = r0.clone().max(rrange.0.clone());
        let rr1 = r1.clone().min(rrange.1.clone());
        if cc0 > cc1 || rr0 > rr1 {
            continue;
        }
        let mut col = cc0.clone();
        while col <= cc1 {
            let mut rw = rr0.clone();
            while rw <= rr1 {
                upper.insert((col.clone(), rw.clone()));
                rw += 1;
            }
            col += 1;
        }
        // Certified hit pinned to one cell: box inside closure(Q), single
        // target cell, intercept inside the witness hull of this cylinder.
        if bx0 >= qx0 && bx1 <= qx1 && by0 >= qy0 && by1 <= qy1 && c0 == c1 && r0 == r1 {
            let mut wlo: Option<BigRational> = None;
            let mut whi: Option<BigRational> = None;
            for (fx, fy) in &fps {
                let px = (BigRational::from_integer(ax.clone()) + fx) / &m_d;
                let py = (BigRational::from_integer(ay.clone()) + fy) / &n_d;
                let wit = &py - &ln.slope * &px;
                wlo = Some(match wlo {
                    None => wit.clone(),
                    Some(v) => v.min(wit.clone()),
                });
                whi = Some(match whi {
                    None => wit,
                    Some(v) => v.max(wit),
                });
            }
            if &ln.intercept >= &wlo.unwrap() && &ln.intercept <= &whi.unwrap() {
                lower.insert((c0, r0));
            }
        }
    }
    (lower.len() as u64, upper.len() as u64)
}

#[test]
fn criterion_7_soundness_fuzzing() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_cafe);
    let mut ok = true;
    let mut detail = String::new();
    for case in 0..200 {
        let c = random_carpet(&mut rng);
        let u = random_slope(&mut rng, &c);
        let w = random_word(&mut rng, &c, 4);
        let enc = intercept_interval(&c, &u, &w, 10).unwrap();
        let span = &enc.outer_hi - &enc.outer_lo;
        let margin = &span / rat(4, 1) + rat(1, 100);
        let pos = rat(rng.gen_range(0i64..=64), 64);
        let t = &enc.outer_lo - &margin + (&span + rat(2, 1) * &margin) * &pos;
        let ln = Line::new(u.clone(), t.clone());
        let verdict = line_meets_cylinder(&c, &ln, &w, 12).unwrap();
        let mut extra = 1u32;
        while (c.digits().len() as u64).pow(extra + 1) <= 4000 {
            extra += 1;
        }
        let (hit, wlo, whi) = oracle_line_scan(&c, &u, &t, &w, extra);
        let consistent = match verdict {
            Tri::Yes => hit,
            Tri::No => !(t >= wlo && t <= whi),
            Tri::Unknown => true,
        };
        if !consistent {
            ok = false;
            detail = format!("line case {case}: verdict {verdict:?} contradicted");
            break;
        }
    }
    for case in 0..100 {
        if !ok {
            break;
        }
        let c = random_carpet(&mut rng);
        let u = random_slope(&mut rng, &c);
        let k = rng.gen_range(0u32..=1);
        let b = rng.gen_range(1u32..=2);
        let col = rng.gen_range(0i64..3i64.pow(k).min(c.m() as i64));
        let row = rng.gen_range(0i64..3i64.pow(k).min(c.m() as i64));
        let cell = Cell::square(k, col, row);
        let t = rat(rng.gen_range(-8i64..=40), 32);
        let ln = Line::new(u, t);
        let required = mkf(c.n(), c.m(), k + b);
        let q = required + rng.gen_range(0u32..=1);
        let lib = covering_number_bounds(&c, &ln, &cell, b, q).unwrap();
        let mut depth = 1u32;
        while (c.digits().len() as u64).pow(depth + 1) <= 4000 && depth < required + 2 {
            depth += 1;
        }
        let (olo, ohi) = oracle_cover(&c, &ln, &cell, b, depth);
        if lib.lower > ohi || olo > lib.upper {
            ok = false;
            detail = format!(
                "cover case {case}: lib [{}, {}] vs oracle [{olo}, {ohi}]",
                lib.lower, lib.upper
            );
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    check(
        7,
        ok && secs < 300.0,
        if ok {
            format!("200 line verdicts + 100 covering sandwiches consistent, {secs:.0}s")
        } else {
            detail
        },
    );
}

#[test]
fn criterion_8_determinism() {
    let bin = env!("CARGO_BIN_EXE_carpet-slicer");
    let dir = std::env::temp_dir().join("carpet-slicer-acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    let carpet_path = dir.join("e3.carpet");
    std::fs::write(&carpet_path, carpet_slicer::record::emit_carpet_file(&e3())).unwrap();
    let mut records = Vec::new();
    let mut ok = true;
    let mut detail = String::new();
    for threads in ["1", "8"] {
        let out = dir.join(format!("e3-t{threads}.rec"));
        let status = std::process::Command::new(bin)
            .args([
                "build",
                carpet_path.to_str().unwrap(),
                "--slope",
                "1/100",
                "--stages",
                "5",
                "--out",
                out.to_str().unwrap(),
            ])
            .env("CARPET_SLICER_THREADS", threads)
            .output()
            .unwrap();
        if !status.status.success() {
            ok = false;
            detail = format!(
                "build with {threads} threads failed: {}",
                String::from_utf8_lossy(&status.stderr)
            );
            break;
        }
        records.push(std::fs::read(&out).unwrap());
    }
    if ok {
        ok = records[0] == records[1];
        detail = if ok {
            format!("byte-identical records ({} bytes)", records[0].len())
        } else {
            "records differ between 1 and 8 threads".into()
        };
    }
    check(8, ok, detail);
}
