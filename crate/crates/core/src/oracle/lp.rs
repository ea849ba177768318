//! Phase-one simplex deciding whether `A f = b, f >= 0` has a solution.
//!
//! The solver is generic over [`Scalar`]: floating types pivot with a
//! tolerance, rational types pivot exactly.

use crate::scalar::Scalar;

/// Integer equality system `A f = b` over non-negative variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearSystem {
    pub rows: Vec<Vec<i64>>,
    pub rhs: Vec<i64>,
    pub vars: usize,
}

impl LinearSystem {
    pub fn new(vars: usize) -> Self {
        Self {
            rows: Vec::new(),
            rhs: Vec::new(),
            vars,
        }
    }

    pub fn push_row(&mut self, row: Vec<i64>, rhs: i64) {
        assert_eq!(row.len(), self.vars, "row width mismatch");
        self.rows.push(row);
        self.rhs.push(rhs);
    }

    /// Largest `|A f - b|` for a candidate solution, evaluated in `f64`.
    pub fn residual(&self, f: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(row, &b)| {
                let lhs: f64 = row.iter().zip(f).map(|(&a, &x)| a as f64 * x).sum();
                (lhs - b as f64).abs()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<T> {
    Feasible(Vec<T>),
    Infeasible,
    /// The solver could not reach a trustworthy answer.
    Degenerate(String),
}

impl<T> LpOutcome<T> {
    pub fn is_feasible(&self) -> bool {
        matches!(self, LpOutcome::Feasible(_))
    }
}

pub struct Simplex<T: Scalar> {
    m: usize,
    width: usize,
    tab: Vec<T>,
    cost: Vec<T>,
    basis: Vec<usize>,
}

impl<T: Scalar> Simplex<T> {
    /// Phase-one tableau with one artificial per row. Rows are flipped to a
    /// non-negative right-hand side, then scaled by their largest coefficient;
    /// the right-hand side is scaled globally. Neither scaling changes the
    /// feasible set's emptiness.
    fn new(sys: &LinearSystem) -> Self {
        let m = sys.rows.len();
        let n = sys.vars;
        let width = n + m + 1;
        let bmax = sys.rhs.iter().map(|b| b.abs()).max().unwrap_or(0).max(1);
        let bscale = T::from_i64(bmax);
        let mut tab = vec![T::zero(); m * width];
        let mut cost = vec![T::zero(); width];
        for (i, (row, &b)) in sys.rows.iter().zip(&sys.rhs).enumerate() {
            let sign = if b < 0 { -1 } else { 1 };
            let amax = row.iter().map(|a| a.abs()).max().unwrap_or(0).max(1);
            let scale = T::from_i64(amax);
            let r = &mut tab[i * width..(i + 1) * width];
            for (j, &a) in row.iter().enumerate() {
                if a != 0 {
                    r[j] = T::from_i64(sign * a) / scale.clone();
                }
            }
            r[n + i] = T::one();
            r[width - 1] = T::from_i64(sign * b) / scale.clone() / bscale.clone();
            for j in 0..n {
                cost[j] = cost[j].clone() - r[j].clone();
            }
            cost[width - 1] = cost[width - 1].clone() - r[width - 1].clone();
        }
        Self {
            m,
            width,
            tab,
            cost,
            basis: (n..n + m).collect(),
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.width;
        let p = self.tab[row * w + col].clone();
        for j in 0..w {
            let v = self.tab[row * w + j].clone();
            if !v.is_zero() {
                self.tab[row * w + j] = v / p.clone();
            }
        }
        let pivot_row: Vec<T> = self.tab[row * w..(row + 1) * w].to_vec();
        let nz: Vec<usize> = (0..w).filter(|&j| !pivot_row[j].is_zero()).collect();
        for i in 0..self.m {
            if i == row {
                continue;
            }
            let f = self.tab[i * w + col].clone();
            if f.is_zero() {
                continue;
            }
            for &j in &nz {
                let v = self.tab[i * w + j].clone() - f.clone() * pivot_row[j].clone();
                self.tab[i * w + j] = if !T::EXACT && v.near_zero() { T::zero() } else { v };
            }
        }
        let f = self.cost[col].clone();
        if !f.is_zero() {
            for &j in &nz {
                let v = self.cost[j].clone() - f.clone() * pivot_row[j].clone();
                self.cost[j] = if !T::EXACT && v.near_zero() { T::zero() } else { v };
            }
        }
        self.basis[row] = col;
    }

    fn entering(&self, bland: bool) -> Option<usize> {
        let cols = self.width - 1;
        if bland {
            return (0..cols).find(|&j| self.cost[j].definitely_negative());
        }
        let mut best: Option<usize> = None;
        for j in 0..cols {
            if self.cost[j].definitely_negative()
                && best.is_none_or(|b| self.cost[j] < self.cost[b])
            {
                best = Some(j);
            }
        }
        best
    }

    fn leaving(&self, col: usize) -> Option<usize> {
        let w = self.width;
        let mut best: Option<(usize, T)> = None;
        for i in 0..self.m {
            let a = &self.tab[i * w + col];
            if !a.definitely_positive() {
                continue;
            }
            let ratio = self.tab[i * w + w - 1].clone() / a.clone();
            let better = match &best {
                None => true,
                Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
            };
            if better {
                best = Some((i, ratio));
            }
        }
        best.map(|(i, _)| i)
    }

    /// Runs phase one on `sys`.
    pub fn solve(sys: &LinearSystem) -> LpOutcome<T> {
        let n = sys.vars;
        if sys.rows.is_empty() {
            return LpOutcome::Feasible(vec![T::zero(); n]);
        }
        let mut s = Self::new(sys);
        let limit = 50 * (s.width + s.m) + 1000;
        let bland_after = if T::EXACT { 0 } else { 5 * (s.width + s.m) };
        let mut iter = 0;
        while let Some(col) = s.entering(iter >= bland_after) {
            let Some(row) = s.leaving(col) else {
                // Phase-one objective is bounded below by zero.
                return LpOutcome::Degenerate("unbounded phase-one ray".into());
            };
            s.pivot(row, col);
            iter += 1;
            if iter > limit {
                return LpOutcome::Degenerate(format!("no convergence after {limit} pivots"));
            }
        }
        // -cost[rhs] is the remaining sum of artificials.
        let objective = -s.cost[s.width - 1].clone();
        if objective.definitely_positive() {
            return LpOutcome::Infeasible;
        }
        if objective.definitely_negative() {
            return LpOutcome::Degenerate("negative phase-one objective".into());
        }
        let mut f = vec![T::zero(); n];
        for (i, &b) in s.basis.iter().enumerate() {
            if b < n {
                f[b] = s.tab[i * s.width + s.width - 1].clone();
            }
        }
        // Undo the right-hand-side scaling.
        let bmax = sys.rhs.iter().map(|b| b.abs()).max().unwrap_or(0).max(1);
        let bscale = T::from_i64(bmax);
        for v in &mut f {
            *v = v.clone() * bscale.clone();
        }
        LpOutcome::Feasible(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn sys(rows: &[&[i64]], rhs: &[i64]) -> LinearSystem {
        let mut s = LinearSystem::new(rows[0].len());
        for (r, &b) in rows.iter().zip(rhs) {
            s.push_row(r.to_vec(), b);
        }
        s
    }

    #[test]
    fn simple_feasible() {
        let s = sys(&[&[1, 1], &[1, -1]], &[4, 2]);
        let LpOutcome::Feasible(f) = Simplex::<f64>::solve(&s) else {
            panic!("expected feasible");
        };
        assert!(s.residual(&f) < 1e-9);
        assert!((f[0] - 3.0).abs() < 1e-9 && (f[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn simple_infeasible() {
        // x + y = -1 with x, y >= 0.
        let s = sys(&[&[1, 1]], &[-1]);
        assert_eq!(Simplex::<f64>::solve(&s), LpOutcome::Infeasible);
        assert_eq!(Simplex::<BigRational>::solve(&s), LpOutcome::Infeasible);
        // Lever: forces at x = 0 and x = 2 cannot balance a load at x = 3.
        let s = sys(&[&[1, 1], &[0, 2]], &[1, 3]);
        assert_eq!(Simplex::<f64>::solve(&s), LpOutcome::Infeasible);
    }

    #[test]
    fn boundary_is_feasible_exactly() {
        // Load exactly over the edge support.
        let s = sys(&[&[1, 1], &[0, 2]], &[1, 2]);
        assert!(Simplex::<BigRational>::solve(&s).is_feasible());
        assert!(Simplex::<f64>::solve(&s).is_feasible());
    }

    proptest! {
        #[test]
        fn float_and_exact_agree(
            a in prop::collection::vec(prop::collection::vec(-4i64..5, 5), 1..4),
            b in prop::collection::vec(-6i64..7, 4),
        ) {
            let mut s = LinearSystem::new(5);
            for (row, &rhs) in a.iter().zip(&b) {
                s.push_row(row.clone(), rhs);
            }
            let exact = Simplex::<BigRational>::solve(&s);
            let float = Simplex::<f64>::solve(&s);
            prop_assert_eq!(exact.is_feasible(), float.is_feasible());
            if let LpOutcome::Feasible(f) = float {
                prop_assert!(s.residual(&f) < 1e-6);
                prop_assert!(f.iter().all(|&v| v >= -1e-9));
            }
        }
    }
}
