use super::{LinearProgram, LpError, LpOutcome, Relation, Sense, Solution};
use crate::scalar::Scalar;

/// Entering-variable rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PivotRule {
    /// Lowest-index improving column on every pivot.
    Bland,
    /// Most negative reduced cost; switches to Bland's rule after a run of
    /// degenerate pivots and back once the objective moves again.
    #[default]
    DantzigWithBlandFallback,
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub pivot_rule: PivotRule,
    pub max_iterations: usize,
    /// Consecutive degenerate pivots tolerated before falling back to Bland.
    pub degenerate_run: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            pivot_rule: PivotRule::default(),
            max_iterations: 200_000,
            degenerate_run: 25,
        }
    }
}

struct Tableau<S> {
    rows: usize,
    cols: usize,
    // (rows + 1) x (cols + 1); the last row holds reduced costs, the last
    // column the right-hand side.
    data: Vec<S>,
    basis: Vec<usize>,
    banned: Vec<bool>,
    iterations: usize,
}

enum Step {
    Optimal,
    Unbounded,
}

impl<S: Scalar> Tableau<S> {
    fn width(&self) -> usize {
        self.cols + 1
    }

    fn at(&self, r: usize, c: usize) -> &S {
        &self.data[r * self.width() + c]
    }

    fn rhs(&self, r: usize) -> &S {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width();
        let piv = self.data[r * w + c].clone();
        let mut nz = Vec::new();
        for k in 0..w {
            let v = &mut self.data[r * w + k];
            if !v.is_zero() {
                *v = (v.clone() / piv.clone()).flushed();
                if !v.is_zero() {
                    nz.push(k);
                }
            }
        }
        self.data[r * w + c] = S::one();
        for i in 0..=self.rows {
            if i == r {
                continue;
            }
            let f = self.data[i * w + c].clone();
            if f.is_zero() {
                continue;
            }
            for &k in &nz {
                let delta = f.clone() * self.data[r * w + k].clone();
                let v = &mut self.data[i * w + k];
                *v = (v.clone() - delta).flushed();
            }
            self.data[i * w + c] = S::zero();
        }
        self.basis[r] = c;
        self.iterations += 1;
    }

    fn entering(&self, bland: bool) -> Option<usize> {
        let eps = S::optimality_tolerance();
        let obj = self.rows;
        let mut best: Option<(usize, S)> = None;
        for j in 0..self.cols {
            if self.banned[j] {
                continue;
            }
            let d = self.at(obj, j);
            if *d < -eps.clone() {
                if bland {
                    return Some(j);
                }
                match &best {
                    Some((_, b)) if *d >= *b => {}
                    _ => best = Some((j, d.clone())),
                }
            }
        }
        best.map(|(j, _)| j)
    }

    fn leaving(&self, c: usize) -> Option<usize> {
        let tol = S::pivot_tolerance();
        let mut best: Option<(usize, S)> = None;
        for i in 0..self.rows {
            let a = self.at(i, c);
            if *a <= tol {
                continue;
            }
            let b = self.rhs(i);
            let b = if *b < S::zero() { S::zero() } else { b.clone() };
            let ratio = b / a.clone();
            match &best {
                Some((r, br)) => {
                    if ratio < *br || (ratio == *br && self.basis[i] < self.basis[*r]) {
                        best = Some((i, ratio));
                    }
                }
                None => best = Some((i, ratio)),
            }
        }
        best.map(|(i, _)| i)
    }

    fn run(&mut self, options: &SolverOptions) -> Result<Step, LpError> {
        let mut degenerate = 0usize;
        loop {
            if self.iterations >= options.max_iterations {
                return Err(LpError::IterationLimit(options.max_iterations));
            }
            let bland = match options.pivot_rule {
                PivotRule::Bland => true,
                PivotRule::DantzigWithBlandFallback => degenerate >= options.degenerate_run,
            };
            let Some(c) = self.entering(bland) else {
                return Ok(Step::Optimal);
            };
            let Some(r) = self.leaving(c) else {
                return Ok(Step::Unbounded);
            };
            if self.rhs(r).abs() <= S::feasibility_tolerance() {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, c);
        }
    }

    /// Rewrite the reduced-cost row for maximizing `costs · x` under the
    /// current basis.
    fn load_objective(&mut self, costs: &[S]) {
        let w = self.width();
        let obj = self.rows;
        for j in 0..w {
            self.data[obj * w + j] = if j < self.cols {
                -costs[j].clone()
            } else {
                S::zero()
            };
        }
        for i in 0..self.rows {
            let cb = costs[self.basis[i]].clone();
            if cb.is_zero() {
                continue;
            }
            for j in 0..w {
                let a = self.data[i * w + j].clone();
                if !a.is_zero() {
                    let v = &mut self.data[obj * w + j];
                    *v = (v.clone() + cb.clone() * a).flushed();
                }
            }
        }
    }
}

struct Row<S> {
    coeffs: Vec<S>,
    relation: Relation,
    rhs: S,
}

pub(super) fn solve<S: Scalar>(
    lp: &LinearProgram<S>,
    options: &SolverOptions,
) -> Result<LpOutcome<S>, LpError> {
    let vars = lp.variables();
    // Fixed variables are substituted; the rest are shifted to y = x - lower.
    let mut column_of = vec![None; vars.len()];
    let mut ny = 0;
    for (k, v) in vars.iter().enumerate() {
        let fixed = matches!(&v.upper, Some(u) if *u == v.lower);
        if !fixed {
            column_of[k] = Some(ny);
            ny += 1;
        }
    }

    let mut rows: Vec<Row<S>> = Vec::with_capacity(lp.constraints().len());
    for c in lp.constraints() {
        let mut coeffs = vec![S::zero(); ny];
        let mut rhs = c.rhs.clone();
        for (v, a) in &c.terms {
            rhs = rhs - a.clone() * vars[v.0].lower.clone();
            if let Some(j) = column_of[v.0] {
                coeffs[j] = coeffs[j].clone() + a.clone();
            }
        }
        rows.push(Row {
            coeffs,
            relation: c.relation,
            rhs,
        });
    }
    for (k, v) in vars.iter().enumerate() {
        if let (Some(j), Some(u)) = (column_of[k], &v.upper) {
            let mut coeffs = vec![S::zero(); ny];
            coeffs[j] = S::one();
            rows.push(Row {
                coeffs,
                relation: Relation::Le,
                rhs: u.clone() - v.lower.clone(),
            });
        }
    }
    for row in &mut rows {
        if row.rhs < S::zero() {
            row.rhs = -row.rhs.clone();
            for a in &mut row.coeffs {
                *a = -a.clone();
            }
            row.relation = match row.relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    let m = rows.len();
    let ns = rows.iter().filter(|r| r.relation != Relation::Eq).count();
    let na = rows.iter().filter(|r| r.relation != Relation::Le).count();
    let cols = ny + ns + na;
    let w = cols + 1;
    let mut t = Tableau {
        rows: m,
        cols,
        data: vec![S::zero(); (m + 1) * w],
        basis: vec![0; m],
        banned: vec![false; cols],
        iterations: 0,
    };
    let (mut next_slack, mut next_art) = (ny, ny + ns);
    for (i, row) in rows.into_iter().enumerate() {
        for (j, a) in row.coeffs.into_iter().enumerate() {
            t.data[i * w + j] = a;
        }
        t.data[i * w + cols] = row.rhs;
        match row.relation {
            Relation::Le => {
                t.data[i * w + next_slack] = S::one();
                t.basis[i] = next_slack;
                next_slack += 1;
            }
            Relation::Ge => {
                t.data[i * w + next_slack] = -S::one();
                next_slack += 1;
                t.data[i * w + next_art] = S::one();
                t.basis[i] = next_art;
                next_art += 1;
            }
            Relation::Eq => {
                t.data[i * w + next_art] = S::one();
                t.basis[i] = next_art;
                next_art += 1;
            }
        }
    }

    if na > 0 {
        let mut costs = vec![S::zero(); cols];
        for c in costs.iter_mut().skip(ny + ns) {
            *c = -S::one();
        }
        t.load_objective(&costs);
        t.run(options)?;
        // Objective cell holds -(sum of artificials).
        let infeasibility = -t.at(m, cols).clone();
        if infeasibility > S::feasibility_tolerance() {
            return Ok(LpOutcome::Infeasible);
        }
        for i in 0..m {
            if t.basis[i] < ny + ns {
                continue;
            }
            let tol = S::pivot_tolerance();
            if let Some(j) = (0..ny + ns).find(|&j| t.at(i, j).abs() > tol) {
                t.pivot(i, j);
            }
        }
        for b in t.banned.iter_mut().skip(ny + ns) {
            *b = true;
        }
    }

    let mut costs = vec![S::zero(); cols];
    for (k, v) in vars.iter().enumerate() {
        if let Some(j) = column_of[k] {
            costs[j] = match lp.sense() {
                Sense::Maximize => v.objective.clone(),
                Sense::Minimize => -v.objective.clone(),
            };
        }
    }
    t.load_objective(&costs);
    if let Step::Unbounded = t.run(options)? {
        return Ok(LpOutcome::Unbounded);
    }

    let mut y = vec![S::zero(); ny];
    for i in 0..m {
        let b = t.basis[i];
        if b < ny {
            y[b] = t.rhs(i).clone();
        }
    }
    let values: Vec<S> = vars
        .iter()
        .enumerate()
        .map(|(k, v)| match column_of[k] {
            Some(j) => v.lower.clone() + y[j].clone(),
            None => v.lower.clone(),
        })
        .collect();
    let objective = lp.objective_value(&values);
    Ok(LpOutcome::Optimal(Solution { values, objective }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{LinearProgram, Relation, Sense};

    #[test]
    fn equality_and_lower_bounds() {
        // min x + y  s.t.  x + y = 3, x >= 1, y >= 0.5
        let mut lp = LinearProgram::<f64>::new(Sense::Minimize);
        let x = lp.add_var("x", 1.0, None, 1.0).unwrap();
        let y = lp.add_var("y", 0.5, None, 1.0).unwrap();
        lp.add_constraint(vec![(x, 1.0), (y, 1.0)], Relation::Eq, 3.0)
            .unwrap();
        let sol = lp.solve().unwrap().optimal().unwrap();
        assert!((sol.objective - 3.0).abs() < 1e-12);
        assert!(lp.check_values(&sol.values, &1e-9).unwrap());
    }

    #[test]
    fn fixed_variables_are_substituted() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_var("x", 2.0, Some(2.0), 1.0).unwrap();
        let y = lp.add_nonneg("y", 1.0).unwrap();
        lp.add_constraint(vec![(x, 1.0), (y, 1.0)], Relation::Le, 5.0)
            .unwrap();
        let sol = lp.solve().unwrap().optimal().unwrap();
        assert_eq!(sol.values, vec![2.0, 3.0]);
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_nonneg("x", 1.0).unwrap();
        let y = lp.add_nonneg("y", 1.0).unwrap();
        lp.add_constraint(vec![(x, 1.0), (y, -1.0)], Relation::Eq, 0.0)
            .unwrap();
        lp.add_constraint(vec![(x, 2.0), (y, -2.0)], Relation::Eq, 0.0)
            .unwrap();
        lp.add_constraint(vec![(x, 1.0)], Relation::Le, 2.0)
            .unwrap();
        let sol = lp.solve().unwrap().optimal().unwrap();
        assert_eq!(sol.values, vec![2.0, 2.0]);
    }

    #[test]
    fn ge_rows_need_phase_one() {
        // max -x s.t. x >= 4 -> x = 4
        let mut lp = LinearProgram::new(Sense::Maximize);
        let x = lp.add_nonneg("x", -1.0).unwrap();
        lp.add_constraint(vec![(x, 1.0)], Relation::Ge, 4.0)
            .unwrap();
        let sol = lp.solve().unwrap().optimal().unwrap();
        assert_eq!(sol.values, vec![4.0]);
    }

    #[test]
    fn pure_bland_agrees_with_default_rule() {
        let mut lp = LinearProgram::<f64>::new(Sense::Maximize);
        let a = lp.add_nonneg("a", 3.0).unwrap();
        let b = lp.add_nonneg("b", 2.0).unwrap();
        let c = lp.add_nonneg("c", 4.0).unwrap();
        lp.add_constraint(vec![(a, 1.0), (b, 1.0), (c, 2.0)], Relation::Le, 4.0)
            .unwrap();
        lp.add_constraint(vec![(a, 2.0), (c, 3.0)], Relation::Le, 5.0)
            .unwrap();
        lp.add_constraint(vec![(a, 2.0), (b, 1.0), (c, 3.0)], Relation::Le, 7.0)
            .unwrap();
        let opts = SolverOptions {
            pivot_rule: PivotRule::Bland,
            ..SolverOptions::default()
        };
        let x = lp.solve().unwrap().optimal().unwrap();
        let y = lp.solve_with(&opts).unwrap().optimal().unwrap();
        assert!((x.objective - y.objective).abs() < 1e-9);
    }
}
