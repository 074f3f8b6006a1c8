//! Exact linear programming over `BigRational` via the simplex method with
//! Bland's rule. Used to decide cone membership and Hörmander-sum
//! feasibility with no rounding.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Rat = BigRational;

/// Feasibility of `A x = b`, `x >= 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feasibility {
    Feasible { x: Vec<Rat> },
    Infeasible,
}

/// Outcome of maximizing `c · x` subject to `A x = b`, `x >= 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal { value: Rat, x: Vec<Rat> },
    Unbounded,
    Infeasible,
}

struct Tableau {
    /// rows x (cols + 1); last column is the rhs
    a: Vec<Vec<Rat>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> &Rat {
        &self.a[r][self.cols]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.a[row][col].clone();
        for v in self.a[row].iter_mut() {
            *v /= &piv;
        }
        let pivot_row = self.a[row].clone();
        for (r, arow) in self.a.iter_mut().enumerate() {
            if r == row {
                continue;
            }
            let factor = arow[col].clone();
            if factor.is_zero() {
                continue;
            }
            for (v, p) in arow.iter_mut().zip(&pivot_row) {
                *v -= &factor * p;
            }
        }
        self.basis[row] = col;
    }

    /// Simplex iterations maximizing `obj · x` with Bland's rule.
    /// Returns None on unboundedness.
    fn optimize(&mut self, obj: &[Rat]) -> Option<()> {
        loop {
            // reduced costs: obj_j - obj_B · B^{-1} A_j
            let mut entering = None;
            for j in 0..self.cols {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut red = obj[j].clone();
                for (r, &b) in self.basis.iter().enumerate() {
                    red -= &obj[b] * &self.a[r][j];
                }
                if red.is_positive() {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else { return Some(()) };
            let mut leaving: Option<(usize, Rat)> = None;
            for r in 0..self.a.len() {
                if self.a[r][col].is_positive() {
                    let ratio = self.rhs(r) / &self.a[r][col];
                    let better = match &leaving {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < *lratio || (ratio == *lratio && self.basis[r] < self.basis[*lr])
                        }
                    };
                    if better {
                        leaving = Some((r, ratio));
                    }
                }
            }
            let (row, _) = leaving?;
            self.pivot(row, col);
        }
    }

    fn solution(&self) -> Vec<Rat> {
        let mut x = vec![Rat::zero(); self.cols];
        for (r, &b) in self.basis.iter().enumerate() {
            x[b] = self.rhs(r).clone();
        }
        x
    }
}

/// Phase-1 tableau for `A x = b, x >= 0` with artificial variables.
/// Returns a tableau whose basis is artificial-free when feasible.
fn phase1(a: &[Vec<Rat>], b: &[Rat]) -> Option<Tableau> {
    let m = a.len();
    let n = if m == 0 { 0 } else { a[0].len() };
    let cols = n + m;
    let mut rows = Vec::with_capacity(m);
    for (i, arow) in a.iter().enumerate() {
        let mut row: Vec<Rat> = Vec::with_capacity(cols + 1);
        let flip = b[i].is_negative();
        for v in arow {
            row.push(if flip { -v.clone() } else { v.clone() });
        }
        for j in 0..m {
            row.push(if j == i { Rat::one() } else { Rat::zero() });
        }
        row.push(if flip { -b[i].clone() } else { b[i].clone() });
        rows.push(row);
    }
    let mut t = Tableau {
        a: rows,
        basis: (n..n + m).collect(),
        cols,
    };
    // maximize -(sum of artificials)
    let mut obj = vec![Rat::zero(); cols];
    for o in obj.iter_mut().skip(n) {
        *o = -Rat::one();
    }
    t.optimize(&obj)
        .expect("phase-1 objective is bounded above by 0");
    let attained: Rat = t
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &b)| b >= n)
        .map(|(r, _)| t.rhs(r).clone())
        .sum();
    if !attained.is_zero() {
        return None;
    }
    // drive remaining artificials out of the basis (degenerate rows)
    for r in 0..t.basis.len() {
        if t.basis[r] >= n {
            if let Some(col) = (0..n).find(|&j| !t.a[r][j].is_zero()) {
                t.pivot(r, col);
            }
        }
    }
    // rows still basic in an artificial are identically zero; drop them
    let keep: Vec<usize> = (0..t.basis.len()).filter(|&r| t.basis[r] < n).collect();
    t.a = keep.iter().map(|&r| t.a[r].clone()).collect();
    t.basis = keep.iter().map(|&r| t.basis[r]).collect();
    // truncate artificial columns
    for row in t.a.iter_mut() {
        let rhs = row.pop().unwrap();
        row.truncate(n);
        row.push(rhs);
    }
    t.cols = n;
    Some(t)
}

/// Decide feasibility of `A x = b, x >= 0` exactly.
pub fn feasible(a: &[Vec<Rat>], b: &[Rat]) -> Feasibility {
    match phase1(a, b) {
        Some(t) => Feasibility::Feasible { x: t.solution() },
        None => Feasibility::Infeasible,
    }
}

/// Maximize `c · x` subject to `A x = b, x >= 0` exactly.
pub fn maximize(a: &[Vec<Rat>], b: &[Rat], c: &[Rat]) -> LpOutcome {
    let Some(mut t) = phase1(a, b) else {
        return LpOutcome::Infeasible;
    };
    match t.optimize(c) {
        Some(()) => {
            let x = t.solution();
            let value = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
            LpOutcome::Optimal { value, x }
        }
        None => LpOutcome::Unbounded,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn r(n: i64) -> Rat {
        Rat::from(BigInt::from(n))
    }

    fn rq(n: i64, d: i64) -> Rat {
        Rat::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn feasible_simple() {
        // x1 + x2 = 1
        let a = vec![vec![r(1), r(1)]];
        let b = vec![r(1)];
        match feasible(&a, &b) {
            Feasibility::Feasible { x } => {
                assert_eq!(&x[0] + &x[1], r(1));
                assert!(!x[0].is_negative() && !x[1].is_negative());
            }
            _ => panic!("should be feasible"),
        }
    }

    #[test]
    fn infeasible_simple() {
        // x1 + x2 = -1 with x >= 0
        let a = vec![vec![r(1), r(1)]];
        let b = vec![r(-1)];
        assert_eq!(feasible(&a, &b), Feasibility::Infeasible);
    }

    #[test]
    fn infeasible_contradictory_rows() {
        let a = vec![vec![r(1), r(1)], vec![r(1), r(1)]];
        let b = vec![r(1), r(2)];
        assert_eq!(feasible(&a, &b), Feasibility::Infeasible);
    }

    #[test]
    fn maximize_bounded() {
        // max x1 + 2 x2 s.t. x1 + x2 + s = 4, x2 + t = 3
        let a = vec![vec![r(1), r(1), r(1), r(0)], vec![r(0), r(1), r(0), r(1)]];
        let b = vec![r(4), r(3)];
        let c = vec![r(1), r(2), r(0), r(0)];
        match maximize(&a, &b, &c) {
            LpOutcome::Optimal { value, x } => {
                assert_eq!(value, r(7));
                assert_eq!(x[0], r(1));
                assert_eq!(x[1], r(3));
            }
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn maximize_unbounded() {
        // max x1 s.t. x1 - x2 = 0
        let a = vec![vec![r(1), r(-1)]];
        let b = vec![r(0)];
        let c = vec![r(1), r(0)];
        assert_eq!(maximize(&a, &b, &c), LpOutcome::Unbounded);
    }

    #[test]
    fn exactness_with_tiny_rationals() {
        // x = 1/10^30 forced by equality; float simplex would round to 0
        let eps = Rat::new(BigInt::from(1), BigInt::from(10).pow(30));
        let a = vec![vec![r(1)]];
        let b = vec![eps.clone()];
        match feasible(&a, &b) {
            Feasibility::Feasible { x } => assert_eq!(x[0], eps),
            _ => panic!(),
        }
    }

    #[test]
    fn degenerate_redundant_rows() {
        // duplicated constraint must not break phase 1
        let a = vec![
            vec![r(1), r(1)],
            vec![r(2), r(2)],
            vec![r(1), r(0)],
        ];
        let b = vec![r(2), r(4), rq(1, 2)];
        match feasible(&a, &b) {
            Feasibility::Feasible { x } => {
                assert_eq!(x[0], rq(1, 2));
                assert_eq!(x[1], rq(3, 2));
            }
            _ => panic!("should be feasible"),
        }
    }
}
