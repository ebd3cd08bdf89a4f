//! Exact rational simplex for small linear programs.
//!
//! Used to find minimum-`ℓ^1` solutions of underdetermined difference
//! decompositions. Dense tableau, two phases, Bland's rule (so degenerate
//! problems terminate).

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::scalar::Rational;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<Rational>,
    pub objective: Rational,
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> &Rational {
        &self.rows[i][self.width]
    }

    fn pivot(&mut self, obj: &mut [Rational], r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v /= &p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        if !obj[c].is_zero() {
            let f = obj[c].clone();
            for (v, pv) in obj.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes with reduced costs in `obj` (last entry is `-z`). Returns
    /// `false` if unbounded.
    fn optimize(&mut self, obj: &mut [Rational], allowed: impl Fn(usize) -> bool) -> bool {
        loop {
            let Some(c) = (0..self.width).find(|&j| allowed(j) && obj[j].is_negative()) else {
                return true;
            };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][c];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs(i) / a;
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                Some((r, _)) => self.pivot(obj, r, c),
                None => return false,
            }
        }
    }
}

/// Minimizes `cost · x` subject to `a x = b`, `x >= 0`.
///
/// Returns `Ok(None)` when infeasible and an error when unbounded.
pub fn simplex_min(a: &[Vec<Rational>], b: &[Rational], cost: &[Rational]) -> Result<Option<LpSolution>> {
    let m = a.len();
    let n = cost.len();
    if b.len() != m || a.iter().any(|r| r.len() != n) {
        return Err(Error::Precondition("inconsistent linear program dimensions".into()));
    }
    let width = n + m;
    let mut rows = Vec::with_capacity(m);
    for (i, (row, bi)) in a.iter().zip(b).enumerate() {
        let flip = bi.is_negative();
        let mut t: Vec<Rational> = row.iter().map(|v| if flip { -v } else { v.clone() }).collect();
        t.extend((0..m).map(|j| if i == j { Rational::from_integer(1.into()) } else { Rational::zero() }));
        t.push(if flip { -bi } else { bi.clone() });
        rows.push(t);
    }
    let mut tab = Tableau { rows, basis: (n..n + m).collect(), width };

    // Phase 1: minimize the sum of artificials.
    let mut obj = vec![Rational::zero(); width + 1];
    for row in &tab.rows {
        for j in 0..n {
            obj[j] -= &row[j];
        }
        obj[width] -= &row[width];
    }
    tab.optimize(&mut obj, |j| j < n);
    if !obj[width].is_zero() {
        return Ok(None);
    }

    // Drive zero-level artificials out of the basis; drop redundant rows.
    let mut i = 0;
    while i < tab.rows.len() {
        if tab.basis[i] >= n {
            match (0..n).find(|&j| !tab.rows[i][j].is_zero()) {
                Some(j) => tab.pivot(&mut obj, i, j),
                None => {
                    tab.rows.remove(i);
                    tab.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    // Phase 2.
    let mut obj = vec![Rational::zero(); width + 1];
    obj[..n].clone_from_slice(cost);
    for (i, row) in tab.rows.iter().enumerate() {
        let cb = &cost[tab.basis[i]];
        if cb.is_zero() {
            continue;
        }
        for j in 0..=width {
            obj[j] -= cb * &row[j];
        }
    }
    if !tab.optimize(&mut obj, |j| j < n) {
        return Err(Error::Precondition("linear program is unbounded".into()));
    }
    let mut x = vec![Rational::zero(); n];
    for (i, &bj) in tab.basis.iter().enumerate() {
        x[bj] = tab.rhs(i).clone();
    }
    let objective = cost.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(Some(LpSolution { x, objective }))
}

/// Minimum-`ℓ^1` solution of `a x = b` with `x` free; `None` if inconsistent.
///
/// The optimum is a basic solution, so it is also sparse.
pub fn min_l1_solution(a: &[Vec<Rational>], b: &[Rational]) -> Result<Option<LpSolution>> {
    let n = a.first().map_or(0, |r| r.len());
    let split: Vec<Vec<Rational>> =
        a.iter().map(|r| r.iter().cloned().chain(r.iter().map(|v| -v)).collect()).collect();
    let cost = vec![Rational::from_integer(1.into()); 2 * n];
    Ok(simplex_min(&split, b, &cost)?.map(|s| {
        let x = (0..n).map(|j| &s.x[j] - &s.x[n + j]).collect();
        LpSolution { x, objective: s.objective }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rat_int};

    fn q(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| rat_int(x)).collect()
    }

    #[test]
    fn small_program() {
        // min -x - y  s.t. x + s1 = 2, y + s2 = 3
        let a = vec![q(&[1, 0, 1, 0]), q(&[0, 1, 0, 1])];
        let s = simplex_min(&a, &q(&[2, 3]), &q(&[-1, -1, 0, 0])).unwrap().unwrap();
        assert_eq!(s.objective, rat_int(-5));
        assert_eq!(s.x, q(&[2, 3, 0, 0]));
    }

    #[test]
    fn infeasible_and_unbounded() {
        let a = vec![q(&[1, 1])];
        assert!(simplex_min(&a, &q(&[-1]), &q(&[1, 1])).unwrap().is_none());
        let a = vec![q(&[1, -1])];
        assert!(simplex_min(&a, &q(&[1]), &q(&[-1, 0])).is_err());
    }

    #[test]
    fn min_l1_prefers_small_mass() {
        // x1 + x2 = 1, x2 + x3 = 1: optimum x2 = 1 with mass 1
        let a = vec![q(&[1, 1, 0]), q(&[0, 1, 1])];
        let s = min_l1_solution(&a, &q(&[1, 1])).unwrap().unwrap();
        assert_eq!(s.objective, rat_int(1));
        assert_eq!(s.x, q(&[0, 1, 0]));
        // inconsistent system
        let a = vec![q(&[1, 1]), q(&[1, 1])];
        assert!(min_l1_solution(&a, &q(&[1, 2])).unwrap().is_none());
    }

    #[test]
    fn redundant_rows_and_negative_rhs() {
        let a = vec![q(&[2, 0]), q(&[4, 0]), q(&[0, 1])];
        let s = min_l1_solution(&a, &[rat(-1, 2), rat_int(-1), rat(3, 4)]).unwrap().unwrap();
        assert_eq!(s.x, vec![rat(-1, 4), rat(3, 4)]);
        assert_eq!(s.objective, rat_int(1));
    }
}
