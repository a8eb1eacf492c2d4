//! Text artifact formats: carpet description files and versioned
//! construction records. Both are line-oriented, diffable, and round-trip
//! losslessly; rationals are printed in lowest terms as `p/q`.

use std::fmt::Write as _;

use num::{BigInt, BigRational};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::carpet::{rational_str, validate_carpet, Carpet, CarpetError, CarpetSpec};
use crate::grid::Cell;
use crate::slice::{GoodNeighborhood, Side, SliceConstruction, StageCertificate};

pub const RECORD_VERSION: &str = "carpetslice v1";

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Carpet(#[from] CarpetError),
    #[error("carpet hash mismatch: record {expected}, carpet {actual}")]
    HashMismatch { expected: String, actual: String },
}

fn err(line: usize, msg: impl Into<String>) -> RecordError {
    RecordError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Parses the line-oriented carpet file format: `m <int>`, `n <int>`,
/// `digit <i> <j>` entries, `#` comments, order-insensitive.
pub fn parse_carpet_file(text: &str) -> Result<Carpet, RecordError> {
    let mut m: Option<u32> = None;
    let mut n: Option<u32> = None;
    let mut digits: Vec<(u32, u32)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap();
        match key {
            "m" | "n" => {
                let v: u32 = parts
                    .next()
                    .ok_or_else(|| err(line_no, format!("`{key}` needs a value")))?
                    .parse()
                    .map_err(|_| err(line_no, format!("`{key}` value is not an integer")))?;
                let slot = if key == "m" { &mut m } else { &mut n };
                if slot.replace(v).is_some() {
                    return Err(err(line_no, format!("duplicate `{key}` line")));
                }
            }
            "digit" => {
                let i: u32 = parts
                    .next()
                    .ok_or_else(|| err(line_no, "`digit` needs two values"))?
                    .parse()
                    .map_err(|_| err(line_no, "digit i is not an integer"))?;
                let j: u32 = parts
                    .next()
                    .ok_or_else(|| err(line_no, "`digit` needs two values"))?
                    .parse()
                    .map_err(|_| err(line_no, "digit j is not an integer"))?;
                digits.push((i, j));
            }
            other => return Err(err(line_no, format!("unknown key `{other}`"))),
        }
        if parts.next().is_some() {
            return Err(err(line_no, "trailing tokens"));
        }
    }
    let m = m.ok_or_else(|| err(text.lines().count() + 1, "missing `m` line"))?;
    let n = n.ok_or_else(|| err(text.lines().count() + 1, "missing `n` line"))?;
    Ok(validate_carpet(&CarpetSpec { m, n, digits })?)
}

/// Canonical serialization of a carpet, used for file emission and hashing.
pub fn emit_carpet_file(c: &Carpet) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "m {}", c.m());
    let _ = writeln!(out, "n {}", c.n());
    for (i, j) in c.digits() {
        let _ = writeln!(out, "digit {i} {j}");
    }
    out
}

/// Hex SHA-256 of the canonical carpet serialization; binds records to inputs.
pub fn carpet_hash(c: &Carpet) -> String {
    let mut hasher = Sha256::new();
    hasher.update(emit_carpet_file(c).as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        let _ = write!(out, "{byte:02x}");
    }
    out
}

fn cell_str(cell: &Cell) -> String {
    match &cell.row {
        Some(r) => format!("{}:{}:{}", cell.level, cell.col, r),
        None => format!("{}:{}", cell.level, cell.col),
    }
}

fn parse_cell(s: &str, line: usize) -> Result<Cell, RecordError> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 2 && parts.len() != 3 {
        return Err(err(line, "cell must be level:col[:row]"));
    }
    let level: u32 = parts[0]
        .parse()
        .map_err(|_| err(line, "cell level is not an integer"))?;
    let col: BigInt = parts[1]
        .parse()
        .map_err(|_| err(line, "cell col is not an integer"))?;
    let row = if parts.len() == 3 {
        Some(
            parts[2]
                .parse()
                .map_err(|_| err(line, "cell row is not an integer"))?,
        )
    } else {
        None
    };
    Ok(Cell { level, col, row })
}

fn parse_rat(s: &str, line: usize) -> Result<BigRational, RecordError> {
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a, b),
        None => (s, "1"),
    };
    let num: BigInt = num
        .parse()
        .map_err(|_| err(line, format!("bad rational `{s}`")))?;
    let den: BigInt = den
        .parse()
        .map_err(|_| err(line, format!("bad rational `{s}`")))?;
    if den <= BigInt::from(0) {
        return Err(err(line, format!("bad rational `{s}`: denominator not positive")));
    }
    Ok(BigRational::new(num, den))
}

/// Emits the versioned construction record. Deterministic: identical
/// constructions serialize to byte-identical text.
pub fn emit_record(sc: &SliceConstruction) -> String {
    let c = &sc.carpet;
    let mut out = String::new();
    let _ = writeln!(out, "{RECORD_VERSION}");
    let _ = writeln!(out, "hash {}", carpet_hash(c));
    out.push_str(&emit_carpet_file(c));
    let _ = writeln!(out, "slope {}", rational_str(&sc.slope));
    let _ = writeln!(out, "stages {}", sc.stages.len());
    for st in &sc.stages {
        let _ = writeln!(
            out,
            "stage {} t {} k {} cell {} lower {} upper {} depth {} side {} delta {} retained {}",
            st.stage,
            rational_str(&st.intercept),
            st.base_level,
            cell_str(&st.cell),
            st.cert_lower,
            st.cert_upper,
            st.depth,
            st.neighborhood.side.letter(),
            rational_str(&st.neighborhood.delta),
            st.neighborhood.retained_lower,
        );
    }
    let (lo, hi) = crate::slice::limit_intercept(sc);
    let _ = writeln!(out, "limit {} {}", rational_str(&lo), rational_str(&hi));
    let _ = writeln!(out, "cprime {}", rational_str(&sc.c_prime));
    out
}

/// Parses a construction record, revalidating the embedded carpet and its
/// hash binding.
pub fn parse_record(text: &str) -> Result<SliceConstruction, RecordError> {
    let mut lines = text.lines().enumerate().peekable();
    let (ln, first) = lines.next().ok_or_else(|| err(1, "empty record"))?;
    if first.trim() != RECORD_VERSION {
        return Err(err(ln + 1, format!("expected header `{RECORD_VERSION}`")));
    }
    let mut hash: Option<String> = None;
    let mut m: Option<u32> = None;
    let mut n: Option<u32> = None;
    let mut digits: Vec<(u32, u32)> = Vec::new();
    let mut slope: Option<BigRational> = None;
    let mut stage_count: Option<usize> = None;
    let mut stages: Vec<StageCertificate> = Vec::new();
    let mut cprime: Option<BigRational> = None;
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks[0] {
            "hash" if toks.len() == 2 => hash = Some(toks[1].to_string()),
            "m" if toks.len() == 2 => {
                m = Some(
                    toks[1]
                        .parse()
                        .map_err(|_| err(line_no, "bad `m` value"))?,
                )
            }
            "n" if toks.len() == 2 => {
                n = Some(
                    toks[1]
                        .parse()
                        .map_err(|_| err(line_no, "bad `n` value"))?,
                )
            }
            "digit" if toks.len() == 3 => {
                let i = toks[1]
                    .parse()
                    .map_err(|_| err(line_no, "bad digit"))?;
                let j = toks[2]
                    .parse()
                    .map_err(|_| err(line_no, "bad digit"))?;
                digits.push((i, j));
            }
            "slope" if toks.len() == 2 => slope = Some(parse_rat(toks[1], line_no)?),
            "stages" if toks.len() == 2 => {
                stage_count = Some(
                    toks[1]
                        .parse()
                        .map_err(|_| err(line_no, "bad stage count"))?,
                )
            }
            "stage" if toks.len() == 20 => {
                let expect = |pos: usize, kw: &str| -> Result<(), RecordError> {
                    if toks[pos] != kw {
                        Err(err(line_no, format!("expected `{kw}` at token {pos}")))
                    } else {
                        Ok(())
                    }
                };
                expect(2, "t")?;
                expect(4, "k")?;
                expect(6, "cell")?;
                expect(8, "lower")?;
                expect(10, "upper")?;
                expect(12, "depth")?;
                expect(14, "side")?;
                expect(16, "delta")?;
                expect(18, "retained")?;
                let stage: u32 = toks[1]
                    .parse()
                    .map_err(|_| err(line_no, "bad stage index"))?;
                let intercept = parse_rat(toks[3], line_no)?;
                let base_level: u32 = toks[5]
                    .parse()
                    .map_err(|_| err(line_no, "bad k"))?;
                let cell = parse_cell(toks[7], line_no)?;
                let cert_lower: u64 = toks[9]
                    .parse()
                    .map_err(|_| err(line_no, "bad lower"))?;
                let cert_upper: u64 = toks[11]
                    .parse()
                    .map_err(|_| err(line_no, "bad upper"))?;
                let depth: u32 = toks[13]
                    .parse()
                    .map_err(|_| err(line_no, "bad depth"))?;
                let side = Side::from_letter(
                    toks[15]
                        .chars()
                        .next()
                        .ok_or_else(|| err(line_no, "bad side"))?,
                )
                .ok_or_else(|| err(line_no, "side must be L or R"))?;
                let delta = parse_rat(toks[17], line_no)?;
                let retained: u64 = toks[19]
                    .parse()
                    .map_err(|_| err(line_no, "bad retained"))?;
                stages.push(StageCertificate {
                    stage,
                    intercept: intercept.clone(),
                    base_level,
                    cell,
                    cert_lower,
                    cert_upper,
                    depth,
                    neighborhood: GoodNeighborhood {
                        base: intercept,
                        side,
                        delta,
                        retained_lower: retained,
                    },
                });
            }
            "limit" if toks.len() == 3 => {
                parse_rat(toks[1], line_no)?;
                parse_rat(toks[2], line_no)?;
            }
            "cprime" if toks.len() == 2 => cprime = Some(parse_rat(toks[1], line_no)?),
            other => return Err(err(line_no, format!("unrecognized line `{other} ...`"))),
        }
    }
    let last = text.lines().count();
    let m = m.ok_or_else(|| err(last, "missing `m`"))?;
    let n = n.ok_or_else(|| err(last, "missing `n`"))?;
    let carpet = validate_carpet(&CarpetSpec { m, n, digits })?;
    if let Some(expected) = hash {
        let actual = carpet_hash(&carpet);
        if expected != actual {
            return Err(RecordError::HashMismatch { expected, actual });
        }
    } else {
        return Err(err(last, "missing `hash`"));
    }
    let slope = slope.ok_or_else(|| err(last, "missing `slope`"))?;
    let cprime = cprime.ok_or_else(|| err(last, "missing `cprime`"))?;
    if let Some(count) = stage_count {
        if count != stages.len() {
            return Err(err(
                last,
                format!("stage count {count} does not match {} stage lines", stages.len()),
            ));
        }
    }
    Ok(SliceConstruction {
        carpet,
        slope,
        stages,
        c_prime: cprime,
    })
}
