//! Dense two-phase tableau simplex for small verification LPs.
//!
//! Variables are nonnegative unless declared free. Pricing is Dantzig's
//! rule, switching to Bland's rule after a run of degenerate pivots so the
//! method cannot cycle.

use thiserror::Error;

/// Entries at or below this magnitude are never used as pivots.
pub const PIVOT_TOL: f64 = 1e-10;
const MAX_PIVOTS: usize = 200_000;
const DEGENERATE_RUN: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    /// Sparse `(variable, coefficient)` terms.
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex pivot limit reached")]
    PivotLimit,
    #[error("variable {0} out of range")]
    BadVariable(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
}

/// `minimize c^T x` subject to linear constraints.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    objective: Vec<f64>,
    free: Vec<bool>,
    constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable with objective coefficient `cost`; returns its index.
    pub fn add_var(&mut self, cost: f64, free: bool) -> usize {
        self.objective.push(cost);
        self.free.push(free);
        self.objective.len() - 1
    }

    pub fn add_constraint(&mut self, terms: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint { terms, relation, rhs });
    }

    pub fn var_count(&self) -> usize {
        self.objective.len()
    }

    pub fn constraint_count(&self) -> usize {
        self.constraints.len()
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        let nv = self.var_count();
        for c in &self.constraints {
            if let Some(&(v, _)) = c.terms.iter().find(|(v, _)| *v >= nv) {
                return Err(LpError::BadVariable(v));
            }
        }
        // column layout: structural (free vars split in two), slacks, artificials
        let mut col_of = Vec::with_capacity(nv);
        let mut structural = 0;
        for &f in &self.free {
            col_of.push(structural);
            structural += if f { 2 } else { 1 };
        }
        let m = self.constraints.len();
        let mut rows: Vec<(Vec<f64>, Relation, f64)> = Vec::with_capacity(m);
        for c in &self.constraints {
            let mut row = vec![0.0; structural];
            for &(v, a) in &c.terms {
                row[col_of[v]] += a;
                if self.free[v] {
                    row[col_of[v] + 1] -= a;
                }
            }
            let (mut rel, mut rhs) = (c.relation, c.rhs);
            if rhs < 0.0 || (rhs == 0.0 && rel == Relation::Ge) {
                row.iter_mut().for_each(|a| *a = -*a);
                rhs = -rhs;
                rel = match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
            rows.push((row, rel, rhs));
        }
        let slacks = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let artificials = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let width = structural + slacks + artificials;
        let mut t = Tableau::new(m, width);
        let (mut next_slack, mut next_art) = (structural, structural + slacks);
        for (r, (row, rel, rhs)) in rows.into_iter().enumerate() {
            t.a[r * t.stride..r * t.stride + structural].copy_from_slice(&row);
            t.a[r * t.stride + width] = rhs;
            match rel {
                Relation::Le => {
                    t.set(r, next_slack, 1.0);
                    t.basis[r] = next_slack;
                    next_slack += 1;
                }
                Relation::Ge => {
                    t.set(r, next_slack, -1.0);
                    next_slack += 1;
                    t.set(r, next_art, 1.0);
                    t.basis[r] = next_art;
                    next_art += 1;
                }
                Relation::Eq => {
                    t.set(r, next_art, 1.0);
                    t.basis[r] = next_art;
                    next_art += 1;
                }
            }
        }
        let art_start = structural + slacks;

        // phase 1: minimize the sum of artificials
        if artificials > 0 {
            let mut cost = vec![0.0; width];
            cost[art_start..].iter_mut().for_each(|c| *c = 1.0);
            t.price(&cost);
            t.optimize(width)?;
            let scale = 1.0 + t.rhs_max();
            if -t.neg_objective() > 1e-9 * scale {
                return Err(LpError::Infeasible);
            }
            // drive zero-level artificials out of the basis
            let mut r = 0;
            while r < t.m {
                if t.basis[r] >= art_start {
                    match (0..art_start).find(|&c| t.get(r, c).abs() > PIVOT_TOL) {
                        Some(c) => t.pivot(r, c),
                        None => {
                            t.remove_row(r);
                            continue;
                        }
                    }
                }
                r += 1;
            }
        }

        // phase 2 over structural and slack columns only
        let mut cost = vec![0.0; width];
        for (v, &c) in self.objective.iter().enumerate() {
            cost[col_of[v]] = c;
            if self.free[v] {
                cost[col_of[v] + 1] = -c;
            }
        }
        t.price(&cost);
        t.optimize(art_start)?;

        let mut col_values = vec![0.0; width];
        for r in 0..t.m {
            col_values[t.basis[r]] = t.rhs(r);
        }
        let x: Vec<f64> = (0..nv)
            .map(|v| {
                let c = col_of[v];
                if self.free[v] {
                    col_values[c] - col_values[c + 1]
                } else {
                    col_values[c]
                }
            })
            .collect();
        let value = x.iter().zip(&self.objective).map(|(a, b)| a * b).sum();
        Ok(LpSolution { x, value })
    }
}

struct Tableau {
    m: usize,
    width: usize,
    /// Row stride is `width + 1`; the last entry of each row is the rhs.
    stride: usize,
    a: Vec<f64>,
    basis: Vec<usize>,
    /// Reduced costs, last entry holds the negated objective value.
    z: Vec<f64>,
}

impl Tableau {
    fn new(m: usize, width: usize) -> Self {
        Self {
            m,
            width,
            stride: width + 1,
            a: vec![0.0; m * (width + 1)],
            basis: vec![0; m],
            z: vec![0.0; width + 1],
        }
    }

    fn get(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.stride + c]
    }

    fn set(&mut self, r: usize, c: usize, v: f64) {
        self.a[r * self.stride + c] = v;
    }

    fn rhs(&self, r: usize) -> f64 {
        self.a[r * self.stride + self.width]
    }

    fn rhs_max(&self) -> f64 {
        (0..self.m).map(|r| self.rhs(r).abs()).fold(0.0, f64::max)
    }

    fn neg_objective(&self) -> f64 {
        self.z[self.width]
    }

    fn remove_row(&mut self, r: usize) {
        let s = self.stride;
        self.a.drain(r * s..(r + 1) * s);
        self.basis.remove(r);
        self.m -= 1;
    }

    /// Sets reduced costs for `cost` relative to the current basis.
    fn price(&mut self, cost: &[f64]) {
        self.z[..self.width].copy_from_slice(cost);
        self.z[self.width] = 0.0;
        for r in 0..self.m {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                let row = &self.a[r * self.stride..(r + 1) * self.stride];
                for (z, a) in self.z.iter_mut().zip(row) {
                    *z -= cb * a;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let s = self.stride;
        let p = self.a[r * s + c];
        for v in &mut self.a[r * s..(r + 1) * s] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.a[r * s..(r + 1) * s].to_vec();
        for rr in 0..self.m {
            if rr == r {
                continue;
            }
            let f = self.a[rr * s + c];
            if f != 0.0 {
                for (v, pv) in self.a[rr * s..(rr + 1) * s].iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                self.a[rr * s + c] = 0.0;
            }
        }
        let f = self.z[c];
        if f != 0.0 {
            for (v, pv) in self.z.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.z[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Runs primal simplex over entering columns `0..allowed`.
    fn optimize(&mut self, allowed: usize) -> Result<(), LpError> {
        let mut degenerate = 0;
        for _ in 0..MAX_PIVOTS {
            let bland = degenerate >= DEGENERATE_RUN;
            let entering = if bland {
                (0..allowed).find(|&c| self.z[c] < -PIVOT_TOL)
            } else {
                let mut best = None;
                let mut best_val = -PIVOT_TOL;
                for c in 0..allowed {
                    if self.z[c] < best_val {
                        best_val = self.z[c];
                        best = Some(c);
                    }
                }
                best
            };
            let Some(c) = entering else { return Ok(()) };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.m {
                let a = self.get(r, c);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(r) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lv)) => {
                            if ratio < lv - 1e-14 || (ratio <= lv + 1e-14 && self.basis[r] < self.basis[lr]) {
                                Some((r, ratio))
                            } else {
                                Some((lr, lv))
                            }
                        }
                    }
                }
            }
            let Some((r, ratio)) = leave else { return Err(LpError::Unbounded) };
            if ratio.abs() <= 1e-14 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, c);
        }
        Err(LpError::PivotLimit)
    }
}
