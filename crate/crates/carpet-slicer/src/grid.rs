//! m-adic grids, certified covering-number bounds, exact fiber counts, the
//! finite-scale Furstenberg estimator and the 9-to-1 covering harness.
//!
//! Covering bounds come from a branch-and-prune walk over cylinder words.
//! Children are cut when the line provably misses them or their box leaves
//! the target cell; a surviving word certifies a grid cell for the lower
//! bound when its line segment is pinned inside that single cell, or when an
//! exact segment endpoint is decided to lie in the carpet.

use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::carpet::{Carpet, Line};
use crate::projection::{compute_c0, EnclosureTable, ProjectionError, Tri};
use crate::util::{big_pow, floor_int, min_k_finer, rat, rint};

/// Hard cap on explored nodes per covering-search call.
pub const NODE_BUDGET: u64 = 5_000_000;

/// Default refinement depth for projection enclosures inside searches.
pub const DEFAULT_REFINE: u32 = 24;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GridError {
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error("cell is one-dimensional where a square cell is required")]
    InvalidCell,
    #[error("search depth {got} too shallow; need at least {required}")]
    DepthTooShallow { required: u32, got: u32 },
    #[error("search depth {0} too deep for the integer kernel")]
    DepthTooDeep(u32),
    #[error("node budget of {NODE_BUDGET} exceeded")]
    BudgetExceeded,
    #[error("empty input")]
    EmptyInput,
    #[error("count entries use differing windows")]
    WindowMismatch,
    #[error("grid level must be >= 3")]
    LevelTooCoarse,
    #[error("no tail of the sequence is within the Hausdorff threshold")]
    NotConverged,
}

/// Half-open grid cell `[col,col+1)/m^level x [row,row+1)/m^level`
/// (1-D when `row` is absent).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub level: u32,
    pub col: BigInt,
    pub row: Option<BigInt>,
}

impl Cell {
    pub fn square(level: u32, col: i64, row: i64) -> Self {
        Cell {
            level,
            col: BigInt::from(col),
            row: Some(BigInt::from(row)),
        }
    }

    pub fn x_range(&self, m: u32) -> (BigRational, BigRational) {
        let den = big_pow(m, self.level);
        (
            BigRational::new(self.col.clone(), den.clone()),
            BigRational::new(&self.col + 1, den),
        )
    }

    pub fn y_range(&self, m: u32) -> Option<(BigRational, BigRational)> {
        self.row.as_ref().map(|r| {
            let den = big_pow(m, self.level);
            (
                BigRational::new(r.clone(), den.clone()),
                BigRational::new(r + 1, den),
            )
        })
    }
}

/// Floor-based cell of a point in the level-p grid.
pub fn cell_of(pt: &(BigRational, BigRational), m: u32, p: u32) -> Cell {
    let scale = BigRational::from_integer(big_pow(m, p));
    Cell {
        level: p,
        col: floor_int(&(&pt.0 * &scale)),
        row: Some(floor_int(&(&pt.1 * &scale))),
    }
}

/// Floor-based 1-D cell of a coordinate.
pub fn cell_of_1d(x: &BigRational, m: u32, p: u32) -> Cell {
    let scale = BigRational::from_integer(big_pow(m, p));
    Cell {
        level: p,
        col: floor_int(&(x * &scale)),
        row: None,
    }
}

/// All cells whose closures meet this cell's closure, including itself:
/// 9 in 2-D, 3 in 1-D.
pub fn adjacent_cells(c: &Cell) -> Vec<Cell> {
    let mut out = Vec::new();
    for dc in -1i64..=1 {
        match &c.row {
            Some(r) => {
                for dr in -1i64..=1 {
                    out.push(Cell {
                        level: c.level,
                        col: &c.col + dc,
                        row: Some(r + dr),
                    });
                }
            }
            None => out.push(Cell {
                level: c.level,
                col: &c.col + dc,
                row: None,
            }),
        }
    }
    out
}

/// Two-sided certified bracket of a covering number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverBounds {
    pub lower: u64,
    pub upper: u64,
    pub depth: u32,
}

/// A word finalized with a certified Yes verdict pinned to a single cell.
#[derive(Debug, Clone)]
pub(crate) struct YesLeaf {
    pub ax: BigInt,
    pub ay: BigInt,
    pub depth: u32,
    pub col: BigInt,
    pub row: BigInt,
}

pub(crate) struct SearchResult {
    pub bounds: CoverBounds,
    pub leaves: Vec<YesLeaf>,
}

struct Node {
    ax: BigInt,
    ay: BigInt,
    d: u32,
    t: BigRational,
}

struct Out {
    leaves: Vec<YesLeaf>,
    pending: Vec<Node>,
}

impl Out {
    fn new() -> Self {
        Out {
            leaves: Vec::new(),
            pending: Vec::new(),
        }
    }
}

/// Certified cells, shared across the whole search. A branch whose entire
/// touched-cell range is already in `lower` can contribute nothing new to
/// either bound and is cut; the final sets are traversal-order independent.
#[derive(Default)]
struct CellSets {
    lower: HashSet<(BigInt, BigInt)>,
    upper: HashSet<(BigInt, BigInt)>,
}

struct LineSearch<'a> {
    carpet: &'a Carpet,
    u: BigRational,
    t: BigRational,
    table: EnclosureTable,
    digits: Vec<(u32, u32)>,
    /// i/m per digit, aligned with `digits`.
    dig_x: Vec<BigRational>,
    q: u32,
    m_target: BigRational,
    /// Closure of Q as rationals.
    qx: (BigRational, BigRational),
    qy: (BigRational, BigRational),
    /// Inclusive target-index range of cells meeting closure(Q).
    crange: (BigInt, BigInt),
    rrange: (BigInt, BigInt),
    /// m^-d and n^-d for d = 0..=q.
    inv_m: Vec<BigRational>,
    inv_n: Vec<BigRational>,
    collect_leaves: bool,
    budget: AtomicU64,
    sets: RwLock<CellSets>,
}

impl<'a> LineSearch<'a> {
    fn segment(
        &self,
        bx0: &BigRational,
        bx1: &BigRational,
        by0: &BigRational,
        by1: &BigRational,
    ) -> Option<(BigRational, BigRational)> {
        use crate::projection::{rat_max, rat_min};
        if self.u.is_zero() {
            if &self.t < by0 || &self.t > by1 {
                return None;
            }
            return Some((bx0.clone(), bx1.clone()));
        }
        let xa = (by0 - &self.t) / &self.u;
        let xb = (by1 - &self.t) / &self.u;
        let (xen, xex) = if self.u.is_positive() {
            (xa, xb)
        } else {
            (xb, xa)
        };
        let s0 = rat_max(bx0.clone(), xen);
        let s1 = rat_min(bx1.clone(), xex);
        if s0 > s1 {
            None
        } else {
            Some((s0, s1))
        }
    }

    /// True when every target cell the box can touch already holds a
    /// certified lower witness: descending can add nothing to either bound.
    fn range_certified(&self, cc0: &BigInt, cc1: &BigInt, rr0: &BigInt, rr1: &BigInt) -> bool {
        if (cc1 - cc0) > BigInt::from(8) || (rr1 - rr0) > BigInt::from(8) {
            return false;
        }
        let sets = self.sets.read().unwrap();
        let mut col = cc0.clone();
        while &col <= cc1 {
            let mut row = rr0.clone();
            while &row <= rr1 {
                if !sets.lower.contains(&(col.clone(), row.clone())) {
                    return false;
                }
                row += 1;
            }
            col += 1;
        }
        true
    }

    fn visit(&self, node: &Node, out: &mut Out, hand_off: Option<u32>) -> Result<(), GridError> {
        if self.budget.fetch_add(1, Ordering::Relaxed) >= NODE_BUDGET {
            return Err(GridError::BudgetExceeded);
        }
        let d = node.d;
        let bx0 = BigRational::from_integer(node.ax.clone()) * &self.inv_m[d as usize];
        let bx1 = &bx0 + &self.inv_m[d as usize];
        let by0 = BigRational::from_integer(node.ay.clone()) * &self.inv_n[d as usize];
        let by1 = &by0 + &self.inv_n[d as usize];
        if bx1 < self.qx.0 || bx0 > self.qx.1 || by1 < self.qy.0 || by0 > self.qy.1 {
            return Ok(());
        }
        let verdict = self.table.verdict(d, &node.t);
        if verdict == Tri::No {
            return Ok(());
        }
        let (sx0, sx1) = match self.segment(&bx0, &bx1, &by0, &by1) {
            Some(s) => s,
            None => return Ok(()),
        };
        let ya = self.u.clone() * &sx0 + &self.t;
        let yb = self.u.clone() * &sx1 + &self.t;
        let (sy0, sy1) = if ya <= yb { (ya, yb) } else { (yb, ya) };
        let c0 = floor_int(&(&sx0 * &self.m_target));
        let c1 = floor_int(&(&sx1 * &self.m_target));
        let r0 = floor_int(&(&sy0 * &self.m_target));
        let r1 = floor_int(&(&sy1 * &self.m_target));
        let cc0 = c0.clone().max(self.crange.0.clone());
        let cc1 = c1.clone().min(self.crange.1.clone());
        let rr0 = r0.clone().max(self.rrange.0.clone());
        let rr1 = r1.clone().min(self.rrange.1.clone());
        if cc0 > cc1 || rr0 > rr1 {
            return Ok(());
        }
        if self.range_certified(&cc0, &cc1, &rr0, &rr1) {
            return Ok(());
        }
        let box_in_q =
            bx0 >= self.qx.0 && bx1 <= self.qx.1 && by0 >= self.qy.0 && by1 <= self.qy.1;
        if verdict == Tri::Yes && box_in_q && c0 == c1 && r0 == r1 {
            let mut sets = self.sets.write().unwrap();
            sets.lower.insert((c0.clone(), r0.clone()));
            sets.upper.insert((c0.clone(), r0.clone()));
            drop(sets);
            if self.collect_leaves {
                out.leaves.push(YesLeaf {
                    ax: node.ax.clone(),
                    ay: node.ay.clone(),
                    depth: d,
                    col: c0,
                    row: r0,
                });
            }
            return Ok(());
        }
        if d == self.q {
            for px in [sx0, sx1] {
                let py = self.u.clone() * &px + &self.t;
                if px < self.qx.0 || px > self.qx.1 || py < self.qy.0 || py > self.qy.1 {
                    continue;
                }
                let pc = floor_int(&(&px * &self.m_target));
                let pr = floor_int(&(&py * &self.m_target));
                if pc < self.crange.0
                    || pc > self.crange.1
                    || pr < self.rrange.0
                    || pr > self.rrange.1
                {
                    continue;
                }
                if point_in_carpet(self.carpet, &px, &py) {
                    let mut sets = self.sets.write().unwrap();
                    sets.lower.insert((pc.clone(), pr.clone()));
                    sets.upper.insert((pc, pr));
                }
            }
            let mut sets = self.sets.write().unwrap();
            let mut col = cc0.clone();
            while col <= cc1 {
                let mut row = rr0.clone();
                while row <= rr1 {
                    sets.upper.insert((col.clone(), row.clone()));
                    row += 1;
                }
                col += 1;
            }
            return Ok(());
        }
        if hand_off == Some(d) {
            out.pending.push(Node {
                ax: node.ax.clone(),
                ay: node.ay.clone(),
                d,
                t: node.t.clone(),
            });
            return Ok(());
        }
        let n = rint(self.carpet.n() as i64);
        let ud = &self.table.slopes[d as usize];
        for (idx, &(i, j)) in self.digits.iter().enumerate() {
            let child = Node {
                ax: &node.ax * self.carpet.m() + i,
                ay: &node.ay * self.carpet.n() + j,
                d: d + 1,
                t: (&node.t + ud * &self.dig_x[idx]) * &n - rint(j as i64),
            };
            self.visit(&child, out, hand_off)?;
        }
        Ok(())
    }
}

pub(crate) fn line_cover_search(
    c: &Carpet,
    ln: &Line,
    q_cell: &Cell,
    b: u32,
    q: u32,
    collect_leaves: bool,
) -> Result<SearchResult, GridError> {
    let row = q_cell.row.as_ref().ok_or(GridError::InvalidCell)?;
    let c0 = compute_c0(c);
    if !c0.admits(&ln.slope) {
        return Err(ProjectionError::SlopeTooLarge(ln.slope.to_string(), c0.to_string()).into());
    }
    let target = q_cell.level + b;
    // Exact fitting depth: cylinder boxes strictly inside target cells.
    let required = min_k_finer(c.n(), c.m(), target);
    if q < required {
        return Err(GridError::DepthTooShallow { required, got: q });
    }
    let mk = BigRational::from_integer(big_pow(c.m(), q_cell.level));
    let qx0 = BigRational::from_integer(q_cell.col.clone()) / &mk;
    let qx1 = BigRational::from_integer(&q_cell.col + 1) / &mk;
    let qy0 = BigRational::from_integer(row.clone()) / &mk;
    let qy1 = BigRational::from_integer(row + 1) / &mk;
    let mb = big_pow(c.m(), b);
    let crange = (&q_cell.col * &mb, (&q_cell.col + 1) * &mb);
    let rrange = (row * &mb, (row + 1) * &mb);
    let digits: Vec<(u32, u32)> = c.digits().iter().cloned().collect();
    let dig_x: Vec<BigRational> = digits
        .iter()
        .map(|&(i, _)| rat(i as i64, c.m() as i64))
        .collect();
    let mut inv_m = Vec::with_capacity(q as usize + 1);
    let mut inv_n = Vec::with_capacity(q as usize + 1);
    for d in 0..=q {
        inv_m.push(BigRational::new(BigInt::one(), big_pow(c.m(), d)));
        inv_n.push(BigRational::new(BigInt::one(), big_pow(c.n(), d)));
    }
    let search = LineSearch {
        carpet: c,
        u: ln.slope.clone(),
        t: ln.intercept.clone(),
        table: EnclosureTable::build(c, &ln.slope, q, DEFAULT_REFINE),
        digits,
        dig_x,
        q,
        m_target: BigRational::from_integer(big_pow(c.m(), target)),
        qx: (qx0, qx1),
        qy: (qy0, qy1),
        crange,
        rrange,
        inv_m,
        inv_n,
        collect_leaves,
        budget: AtomicU64::new(0),
        sets: RwLock::new(CellSets::default()),
    };
    let root = Node {
        ax: BigInt::zero(),
        ay: BigInt::zero(),
        d: 0,
        t: ln.intercept.clone(),
    };
    let hand_off = if !collect_leaves && rayon::current_num_threads() > 1 && q > 6 {
        Some(4.min(q - 1))
    } else {
        None
    };
    let mut out = Out::new();
    search.visit(&root, &mut out, hand_off)?;
    let pending = std::mem::take(&mut out.pending);
    if !pending.is_empty() {
        let parts: Result<Vec<Out>, GridError> = pending
            .par_iter()
            .map(|nd| {
                let mut part = Out::new();
                search.visit(nd, &mut part, None)?;
                Ok(part)
            })
            .collect();
        for part in parts? {
            out.leaves.extend(part.leaves);
        }
    }
    let sets = search.sets.into_inner().unwrap();
    debug_assert!(sets.lower.is_subset(&sets.upper));
    Ok(SearchResult {
        bounds: CoverBounds {
            lower: sets.lower.len() as u64,
            upper: sets.upper.len() as u64,
            depth: q,
        },
        leaves: out.leaves,
    })
}

/// Certified bracket of `N(l ∩ F ∩ closure(Q), D_{m^{k+b}})`.
///
/// Cells of the level-(k+b) grid meeting the closed cell Q are counted; the
/// lower bound only counts cells holding a certified intersection witness.
pub fn covering_number_bounds(
    c: &Carpet,
    ln: &Line,
    q_cell: &Cell,
    b: u32,
    q: u32,
) -> Result<CoverBounds, GridError> {
    Ok(line_cover_search(c, ln, q_cell, b, q, false)?.bounds)
}

/// Decides membership of an exact rational point in the carpet.
///
/// Expansion states `(x,y) -> (m x - i, n y - j)` form a finite graph for a
/// rational start; the point lies in F iff a cycle is reachable. Returns
/// `false` when the state graph exceeds an internal cap (sound for use in
/// lower bounds).
pub fn point_in_carpet(c: &Carpet, x: &BigRational, y: &BigRational) -> bool {
    const STATE_CAP: usize = 4096;
    let zero = BigRational::zero();
    let one = rint(1);
    if x < &zero || x > &one || y < &zero || y > &one {
        return false;
    }
    let start = (x.clone(), y.clone());
    let mut states: HashMap<(BigRational, BigRational), usize> = HashMap::new();
    let mut edges: Vec<Vec<usize>> = Vec::new();
    let mut queue: Vec<(BigRational, BigRational)> = vec![start.clone()];
    states.insert(start, 0);
    edges.push(Vec::new());
    let mut head = 0;
    while head < queue.len() {
        if states.len() > STATE_CAP {
            return false;
        }
        let (sx, sy) = queue[head].clone();
        let id = states[&(sx.clone(), sy.clone())];
        for &(i, j) in c.digits() {
            let nx = &sx * rint(c.m() as i64) - rint(i as i64);
            let ny = &sy * rint(c.n() as i64) - rint(j as i64);
            if nx < zero || nx > one || ny < zero || ny > one {
                continue;
            }
            let key = (nx, ny);
            let nid = match states.get(&key) {
                Some(&nid) => nid,
                None => {
                    let nid = edges.len();
                    states.insert(key.clone(), nid);
                    edges.push(Vec::new());
                    queue.push(key);
                    nid
                }
            };
            edges[id].push(nid);
        }
        head += 1;
    }
    // Peel nodes without outgoing edges; a nonempty remainder contains a
    // cycle, which (all states being reachable) yields an infinite expansion.
    let n_nodes = edges.len();
    let mut out_deg: Vec<usize> = edges.iter().map(|e| e.len()).collect();
    let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
    for (from, outs) in edges.iter().enumerate() {
        for &to in outs {
            rev[to].push(from);
        }
    }
    let mut stack: Vec<usize> = (0..n_nodes).filter(|&v| out_deg[v] == 0).collect();
    let mut removed = vec![false; n_nodes];
    let mut removed_count = 0;
    while let Some(v) = stack.pop() {
        if removed[v] {
            continue;
        }
        removed[v] = true;
        removed_count += 1;
        for &p in &rev[v] {
            if !removed[p] {
                out_deg[p] -= 1;
                if out_deg[p] == 0 {
                    stack.push(p);
                }
            }
        }
    }
    removed_count < n_nodes
}

// ---------------------------------------------------------------------------
// Line-free covering bounds for the carpet itself (integer kernel).

struct CarpetSearch<'a> {
    carpet: &'a Carpet,
    digits: Vec<(u32, u32)>,
    q: u32,
    big_m: i128,
    mp: Vec<i128>,
    np: Vec<i128>,
    /// closure(Q) column/row index at its own level.
    q_col: i128,
    q_row: i128,
    mk: i128,
    crange: (i128, i128),
    rrange: (i128, i128),
    /// Fixed points (i/(m-1), j/(n-1)) as numerators over (m-1), (n-1).
    witnesses: Vec<(u32, u32)>,
    budget: AtomicU64,
    sets: RwLock<CarpetSets>,
}

struct CarpetOut {
    pending: Vec<(i128, i128, u32)>,
}

/// Shared certified cells for the line-free search, with the same
/// covered-range prune as the line search.
#[derive(Default)]
struct CarpetSets {
    lower: HashSet<u64>,
    upper: HashSet<u64>,
}

impl<'a> CarpetSearch<'a> {
    fn cell_key(&self, col: i128, row: i128) -> u64 {
        ((col as u64) << 32) | (row as u64)
    }

    fn range_certified(&self, cc0: i128, cc1: i128, rr0: i128, rr1: i128) -> bool {
        if cc1 - cc0 > 8 || rr1 - rr0 > 8 {
            return false;
        }
        let sets = self.sets.read().unwrap();
        for col in cc0..=cc1 {
            for row in rr0..=rr1 {
                if !sets.lower.contains(&self.cell_key(col, row)) {
                    return false;
                }
            }
        }
        true
    }

    fn visit(
        &self,
        ax: i128,
        ay: i128,
        d: u32,
        out: &mut CarpetOut,
        hand_off: Option<u32>,
    ) -> Result<(), GridError> {
        if self.budget.fetch_add(1, Ordering::Relaxed) >= NODE_BUDGET * 40 {
            return Err(GridError::BudgetExceeded);
        }
        let mp = self.mp[d as usize];
        let np = self.np[d as usize];
        // Prune: closed box vs closure(Q), cross-multiplied.
        if ax * self.mk > (self.q_col + 1) * mp
            || (ax + 1) * self.mk < self.q_col * mp
            || ay * self.mk > (self.q_row + 1) * np
            || (ay + 1) * self.mk < self.q_row * np
        {
            return Ok(());
        }
        let col0 = ax * self.big_m / mp;
        let col1 = (ax + 1) * self.big_m / mp;
        let row0 = ay * self.big_m / np;
        let row1 = (ay + 1) * self.big_m / np;
        if self.range_certified(
            col0.max(self.crange.0),
            col1.min(self.crange.1),
            row0.max(self.rrange.0),
            row1.min(self.rrange.1),
        ) {
            return Ok(());
        }
        let box_in_q = ax * self.mk >= self.q_col * mp
            && (ax + 1) * self.mk <= (self.q_col + 1) * mp
            && ay * self.mk >= self.q_row * np
            && (ay + 1) * self.mk <= (self.q_row + 1) * np;
        if box_in_q && col0 == col1 && row0 == row1 {
            let key = self.cell_key(col0, row0);
            let mut sets = self.sets.write().unwrap();
            sets.lower.insert(key);
            sets.upper.insert(key);
            return Ok(());
        }
        if d == self.q {
            // Witness points phi_w(fixed point) certify cells exactly.
            let m1 = (self.carpet.m() - 1) as i128;
            let n1 = (self.carpet.n() - 1) as i128;
            for &(wi, wj) in &self.witnesses {
                let xn = ax * m1 + wi as i128; // x = xn / (mp * m1)
                let yn = ay * n1 + wj as i128;
                // Point in closure(Q)?
                if xn * self.mk < self.q_col * mp * m1
                    || xn * self.mk > (self.q_col + 1) * mp * m1
                    || yn * self.mk < self.q_row * np * n1
                    || yn * self.mk > (self.q_row + 1) * np * n1
                {
                    continue;
                }
                let pc = xn * self.big_m / (mp * m1);
                let pr = yn * self.big_m / (np * n1);
                if pc < self.crange.0
                    || pc > self.crange.1
                    || pr < self.rrange.0
                    || pr > self.rrange.1
                {
                    continue;
                }
                let key = self.cell_key(pc, pr);
                let mut sets = self.sets.write().unwrap();
                sets.lower.insert(key);
                sets.upper.insert(key);
            }
            let cc0 = col0.max(self.crange.0);
            let cc1 = col1.min(self.crange.1);
            let rr0 = row0.max(self.rrange.0);
            let rr1 = row1.min(self.rrange.1);
            let mut sets = self.sets.write().unwrap();
            for col in cc0..=cc1 {
                for row in rr0..=rr1 {
                    sets.upper.insert(self.cell_key(col, row));
                }
            }
            return Ok(());
        }
        if hand_off == Some(d) {
            out.pending.push((ax, ay, d));
            return Ok(());
        }
        for &(i, j) in &self.digits {
            self.visit(
                ax * self.carpet.m() as i128 + i as i128,
                ay * self.carpet.n() as i128 + j as i128,
                d + 1,
                out,
                hand_off,
            )?;
        }
        Ok(())
    }
}

/// Certified bracket of `N(F ∩ closure(Q), D_{m^{k+b}})`, no line involved.
///
/// Witness points are cylinder images of digit fixed points, so boundary
/// cells reached only through m-adic gridline points are still certified.
pub fn carpet_cover_bounds(
    c: &Carpet,
    q_cell: &Cell,
    b: u32,
    q: u32,
) -> Result<CoverBounds, GridError> {
    let row = q_cell.row.as_ref().ok_or(GridError::InvalidCell)?;
    let target = q_cell.level + b;
    // Exact fitting depth: cylinder boxes strictly inside target cells.
    let required = min_k_finer(c.n(), c.m(), target);
    if q < required {
        return Err(GridError::DepthTooShallow { required, got: q });
    }
    // Everything must fit comfortably in i128: m^(q + k + level slack).
    let bits = ((q + q_cell.level + 4) as f64) * (c.m() as f64).log2();
    if bits > 120.0 {
        return Err(GridError::DepthTooDeep(q));
    }
    let big_m: i128 = (c.m() as i128).pow(target);
    if big_m > u32::MAX as i128 {
        return Err(GridError::DepthTooDeep(target));
    }
    let mut mp = Vec::with_capacity(q as usize + 1);
    let mut np = Vec::with_capacity(q as usize + 1);
    for d in 0..=q {
        mp.push((c.m() as i128).pow(d));
        np.push((c.n() as i128).pow(d));
    }
    let mb = (c.m() as i128).pow(b);
    let q_col = q_cell.col.to_i128().ok_or(GridError::DepthTooDeep(q))?;
    let q_row = row.to_i128().ok_or(GridError::DepthTooDeep(q))?;
    let search = CarpetSearch {
        carpet: c,
        digits: c.digits().iter().cloned().collect(),
        q,
        big_m,
        mp,
        np,
        q_col,
        q_row,
        mk: (c.m() as i128).pow(q_cell.level),
        crange: (q_col * mb, (q_col + 1) * mb),
        rrange: (q_row * mb, (q_row + 1) * mb),
        witnesses: c.digits().iter().cloned().collect(),
        budget: AtomicU64::new(0),
        sets: RwLock::new(CarpetSets::default()),
    };
    let hand_off = if rayon::current_num_threads() > 1 && q > 6 {
        Some(4.min(q - 1))
    } else {
        None
    };
    let mut out = CarpetOut {
        pending: Vec::new(),
    };
    search.visit(0, 0, 0, &mut out, hand_off)?;
    let pending = std::mem::take(&mut out.pending);
    if !pending.is_empty() {
        let parts: Result<Vec<CarpetOut>, GridError> = pending
            .par_iter()
            .map(|&(ax, ay, d)| {
                let mut part = CarpetOut {
                    pending: Vec::new(),
                };
                search.visit(ax, ay, d, &mut part, None)?;
                Ok(part)
            })
            .collect();
        parts?;
    }
    let sets = search.sets.into_inner().unwrap();
    debug_assert!(sets.lower.is_subset(&sets.upper));
    Ok(CoverBounds {
        lower: sets.lower.len() as u64,
        upper: sets.upper.len() as u64,
        depth: q,
    })
}

// ---------------------------------------------------------------------------
// Fiber counts.

/// Exact count of level-p 1-D cells met by the fiber set
/// `{ sum x_k / m^k : x_k in D_j }`.
///
/// Prefix values give `|D_j|^p` cells; when `m-1 in D_j`, all-(m-1) tails
/// also reach the incremented indices, counted in closed form.
pub fn fiber_covering_number(c: &Carpet, f: &crate::carpet::Fiber, p: u32) -> u128 {
    let a = f.digits.len() as u128;
    let ap = a.pow(p);
    if !f.digits.contains(&(c.m() - 1)) {
        return ap;
    }
    let g = f
        .digits
        .iter()
        .filter(|&&x| f.digits.contains(&(x + 1)))
        .count() as u128;
    let has_zero = f.digits.contains(&0);
    let mut shared = 0u128;
    for r in 0..p {
        if r > 0 && !has_zero {
            continue;
        }
        shared += a.pow(p - 1 - r) * g;
    }
    2 * ap - shared
}

// ---------------------------------------------------------------------------
// Furstenberg estimator.

/// One certified covering count feeding the estimator.
#[derive(Debug, Clone)]
pub struct CountEntry {
    pub base_level: u32,
    pub cell: Cell,
    pub window: u32,
    pub lower: u64,
}

/// Finite-window value of Furstenberg's star-dimension formula.
#[derive(Debug, Clone)]
pub struct FurstenbergEstimate {
    pub window: u32,
    pub base_level: u32,
    pub cell: Cell,
    pub value: f64,
}

/// `max log N / (i log m)` over the supplied certified counts.
pub fn furstenberg_estimate(
    m: u32,
    entries: &[CountEntry],
) -> Result<FurstenbergEstimate, GridError> {
    if entries.is_empty() {
        return Err(GridError::EmptyInput);
    }
    let window = entries[0].window;
    if entries.iter().any(|e| e.window != window) {
        return Err(GridError::WindowMismatch);
    }
    let mut best: Option<(f64, &CountEntry)> = None;
    for e in entries {
        let value = (e.lower.max(1) as f64).ln() / (window as f64 * (m as f64).ln());
        match &best {
            Some((bv, _)) if value <= *bv => {}
            _ => best = Some((value, e)),
        }
    }
    let (value, e) = best.unwrap();
    Ok(FurstenbergEstimate {
        window,
        base_level: e.base_level,
        cell: e.cell.clone(),
        value,
    })
}

// ---------------------------------------------------------------------------
// Lemma 2.1 harness (9-to-1 covering inequality along a Hausdorff limit).

/// Finite union of closed axis-parallel boxes (x0, x1, y0, y1).
#[derive(Debug, Clone, Default)]
pub struct BoxUnion(pub Vec<(BigRational, BigRational, BigRational, BigRational)>);

impl BoxUnion {
    /// Exact count of level-p grid cells (base m) met by the union.
    pub fn cell_count(&self, m: u32, p: u32) -> u64 {
        let scale = BigRational::from_integer(big_pow(m, p));
        let mut cells: HashSet<(BigInt, BigInt)> = HashSet::new();
        for (x0, x1, y0, y1) in &self.0 {
            let c0 = floor_int(&(x0 * &scale));
            let c1 = floor_int(&(x1 * &scale));
            let r0 = floor_int(&(y0 * &scale));
            let r1 = floor_int(&(y1 * &scale));
            let mut col = c0.clone();
            while col <= c1 {
                let mut row = r0.clone();
                while row <= r1 {
                    cells.insert((col.clone(), row.clone()));
                    row += 1;
                }
                col += 1;
            }
        }
        cells.len() as u64
    }
}

/// Upper bound on sup over points of box `a` of squared distance to box `b`.
fn box_sup_dist_sq(
    a: &(BigRational, BigRational, BigRational, BigRational),
    b: &(BigRational, BigRational, BigRational, BigRational),
) -> BigRational {
    let zero = BigRational::zero();
    let dx = crate::projection::rat_max(
        crate::projection::rat_max(&b.0 - &a.0, &a.1 - &b.1),
        zero.clone(),
    );
    let dy = crate::projection::rat_max(
        crate::projection::rat_max(&b.2 - &a.2, &a.3 - &b.3),
        zero,
    );
    &dx * &dx + &dy * &dy
}

/// Whether every box of `a` is within sqrt(thr2) of some box of `b`.
///
/// Candidates are prefiltered by a padded f64 window on x-extents (an
/// x-gap beyond the threshold already exceeds the distance), then the
/// surviving pairs are confirmed exactly.
fn one_sided_within(a: &BoxUnion, b: &BoxUnion, thr2: &BigRational) -> bool {
    const PAD: f64 = 1e-9;
    let thr_f = thr2.to_f64().map_or(f64::INFINITY, |v| v.sqrt());
    let mut order: Vec<usize> = (0..b.0.len()).collect();
    let keys: Vec<f64> = b.0.iter().map(|bb| bb.0.to_f64().unwrap_or(0.0)).collect();
    order.sort_by(|&i, &j| keys[i].total_cmp(&keys[j]));
    let sorted: Vec<f64> = order.iter().map(|&i| keys[i]).collect();
    let width = b
        .0
        .iter()
        .map(|bb| (&bb.1 - &bb.0).to_f64().unwrap_or(0.0))
        .fold(0.0f64, f64::max);
    a.0.par_iter().all(|ba| {
        let a0 = ba.0.to_f64().unwrap_or(0.0);
        let a1 = ba.1.to_f64().unwrap_or(0.0);
        let lo = a0 - thr_f - width - PAD;
        let hi = a1 + thr_f + PAD;
        let start = sorted.partition_point(|&x| x < lo);
        let end = sorted.partition_point(|&x| x <= hi);
        order[start..end]
            .iter()
            .any(|&i| &box_sup_dist_sq(ba, &b.0[i]) <= thr2)
    })
}

#[derive(Debug, Clone)]
pub struct Lemma0Check {
    pub index: usize,
    pub within_threshold: bool,
    pub count_limit: u64,
    pub count_member: u64,
    pub inequality_holds: bool,
}

#[derive(Debug, Clone)]
pub struct Lemma0Report {
    /// First index from which every later member is within the threshold.
    pub threshold_index: usize,
    pub checks: Vec<Lemma0Check>,
}

/// Verifies the 9-to-1 covering inequality `N(X) >= N(X_k)/9` at level p for
/// every k past the first index where d_H(X_k, X) <= m^-2p holds onward.
pub fn lemma0_check(
    xs: &[BoxUnion],
    x: &BoxUnion,
    m: u32,
    p: u32,
) -> Result<Lemma0Report, GridError> {
    if p < 3 {
        return Err(GridError::LevelTooCoarse);
    }
    if xs.is_empty() {
        return Err(GridError::EmptyInput);
    }
    let thr = BigRational::new(BigInt::one(), big_pow(m, 2 * p));
    let thr2 = &thr * &thr;
    let within: Vec<bool> = xs
        .iter()
        .map(|xk| one_sided_within(xk, x, &thr2) && one_sided_within(x, xk, &thr2))
        .collect();
    let threshold_index = match within.iter().rposition(|w| !w) {
        Some(last_bad) if last_bad + 1 >= xs.len() => return Err(GridError::NotConverged),
        Some(last_bad) => last_bad + 1,
        None => 0,
    };
    let count_limit = x.cell_count(m, p);
    let mut checks = Vec::new();
    for (k, xk) in xs.iter().enumerate() {
        if k < threshold_index {
            continue;
        }
        let count_member = xk.cell_count(m, p);
        checks.push(Lemma0Check {
            index: k,
            within_threshold: within[k],
            count_limit,
            count_member,
            inequality_holds: 9 * count_limit >= count_member,
        });
    }
    Ok(Lemma0Report {
        threshold_index,
        checks,
    })
}

/// Boxes of all depth-`depth` cylinder words not certifiably missed by the
/// line: a finite representation of the slice for the Lemma 2.1 harness.
pub fn slice_boxes(c: &Carpet, ln: &Line, depth: u32) -> Result<BoxUnion, GridError> {
    let c0 = compute_c0(c);
    if !c0.admits(&ln.slope) {
        return Err(ProjectionError::SlopeTooLarge(ln.slope.to_string(), c0.to_string()).into());
    }
    let table = EnclosureTable::build(c, &ln.slope, depth, DEFAULT_REFINE);
    let digits: Vec<(u32, u32)> = c.digits().iter().cloned().collect();
    let n = rint(c.n() as i64);
    let budget = AtomicU64::new(0);
    let mut out = Vec::new();
    let mut stack: Vec<(BigInt, BigInt, u32, BigRational)> = vec![(
        BigInt::zero(),
        BigInt::zero(),
        0,
        ln.intercept.clone(),
    )];
    while let Some((ax, ay, d, t)) = stack.pop() {
        if budget.fetch_add(1, Ordering::Relaxed) >= NODE_BUDGET * 4 {
            return Err(GridError::BudgetExceeded);
        }
        if table.verdict(d, &t) == Tri::No {
            continue;
        }
        if d == depth {
            let mx = BigRational::from_integer(big_pow(c.m(), d));
            let nx = BigRational::from_integer(big_pow(c.n(), d));
            let x0 = BigRational::from_integer(ax.clone()) / &mx;
            let y0 = BigRational::from_integer(ay.clone()) / &nx;
            out.push((
                x0.clone(),
                x0 + BigRational::new(BigInt::one(), big_pow(c.m(), d)),
                y0.clone(),
                y0 + BigRational::new(BigInt::one(), big_pow(c.n(), d)),
            ));
            continue;
        }
        let ud = &table.slopes[d as usize];
        for &(i, j) in digits.iter().rev() {
            stack.push((
                &ax * c.m() + i,
                &ay * c.n() + j,
                d + 1,
                (&t + ud * rat(i as i64, c.m() as i64)) * &n - rint(j as i64),
            ));
        }
    }
    Ok(BoxUnion(out))
}
