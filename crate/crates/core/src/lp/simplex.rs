//! Bounded-variable primal simplex on a dense dictionary.
//!
//! Every row `i` gets an activity variable `r_i = a_i.x` whose bounds encode
//! the row sense. The dictionary expresses the basic variables as linear
//! combinations of the nonbasic ones (the system is homogeneous, so there is
//! no constant column); nonbasic variables sit at one of their bounds.
//! Phase one minimises the sum of bound violations of the basic variables,
//! phase two maximises the objective. Pricing is Dantzig's rule with
//! smallest-index tie-breaking, switching to Bland's rule after a run of
//! degenerate pivots. At optimality the final basis is refactorized from the
//! original rows to recover accurate primal and dual values.

use super::{dot, Certificate, LpProblem, LpScalar, LpSolution, LpStatus, Sense};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Hard cap on simplex iterations; `None` picks a size-based default.
    pub max_iterations: Option<usize>,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iterations: None,
            bland_after: 50,
        }
    }
}

pub fn solve<T: LpScalar>(problem: &LpProblem<T>) -> Result<LpSolution<T>> {
    solve_with(problem, &SolverOptions::default())
}

pub fn solve_with<T: LpScalar>(problem: &LpProblem<T>, opts: &SolverOptions) -> Result<LpSolution<T>> {
    let mut dict = Dictionary::new(problem);
    let limit = opts
        .max_iterations
        .unwrap_or_else(|| 10_000usize.max(20 * (dict.m + dict.k)));
    let float = !T::pivot_tol().is_zero();
    if float {
        let exact_bounds = (dict.lower.clone(), dict.upper.clone());
        dict.perturb();
        dict.run(limit, opts.bland_after)?;
        dict.restore_bounds(exact_bounds);
        if dict.rebuild().is_err() {
            dict = Dictionary::new(problem);
        } else {
            dict.dual_cleanup(limit);
        }
    }
    let mut outcome = dict.run(limit, opts.bland_after)?;
    if float {
        // Confirm termination on a dictionary rebuilt from the original rows;
        // accumulated round-off can fake optimality or infeasibility.
        for _ in 0..MAX_REBUILDS {
            if dict.rebuild().is_err() {
                break;
            }
            let before = dict.iterations;
            dict.dual_cleanup(limit);
            outcome = dict.run(limit, opts.bland_after)?;
            if dict.iterations == before {
                break;
            }
        }
    }
    match outcome {
        Outcome::Optimal => dict.certified_optimum(problem),
        Outcome::Infeasible(raw) => dict.certified_infeasibility(problem, raw),
    }
}

/// Relative size of the row-bound relaxation used to break degeneracy.
const PERTURBATION: f64 = 1e-7;

/// Rebuilds of the dictionary allowed after the first termination.
const MAX_REBUILDS: usize = 8;

/// Iterations between rebuilds of a floating-point dictionary.
const REBUILD_EVERY: usize = 100;

enum Outcome<T> {
    Optimal,
    Infeasible(Vec<T>),
}

struct Dictionary<T> {
    m: usize,
    k: usize,
    /// Bounds per variable: structurals `0..k`, row activities `k..k+m`.
    lower: Vec<Option<T>>,
    upper: Vec<Option<T>>,
    basis: Vec<usize>,
    nonbasic: Vec<usize>,
    /// Row-major `m x k`: `x_basis[i] = sum_j tab[i][j] * x_nonbasic[j]`.
    tab: Vec<T>,
    /// Phase-two objective in terms of the nonbasic variables.
    obj: Vec<T>,
    bval: Vec<T>,
    nval: Vec<T>,
    /// Power-of-two row scales applied to the activities.
    scale: Vec<T>,
    rows: Vec<Vec<T>>,
    objective: Vec<T>,
    iterations: usize,
}

struct Step<T> {
    t: T,
    /// Row of the leaving variable and the bound it lands on; `None` is a
    /// bound flip of the entering variable.
    leave: Option<(usize, T)>,
}

impl<T: LpScalar> Dictionary<T> {
    fn new(p: &LpProblem<T>) -> Self {
        let (m, k) = (p.num_constraints(), p.num_vars());
        let mut lower = vec![Some(T::zero()); k];
        let mut upper = vec![Some(T::one()); k];
        let mut rows = Vec::with_capacity(m);
        let mut scale = Vec::with_capacity(m);
        let mut tab = Vec::with_capacity(m * k);
        for i in 0..m {
            let max_abs = p.row(i).iter().fold(T::zero(), |a, v| T::max(a, v.abs()));
            let s = T::row_scale(&max_abs);
            let row: Vec<T> = p.row(i).iter().map(|v| v.mul(&s)).collect();
            let b = p.rhs(i).mul(&s);
            match p.sense(i) {
                Sense::Le => {
                    lower.push(None);
                    upper.push(Some(b));
                }
                Sense::Ge => {
                    lower.push(Some(b));
                    upper.push(None);
                }
            }
            tab.extend(row.iter().cloned());
            rows.push(row);
            scale.push(s);
        }
        Dictionary {
            m,
            k,
            lower,
            upper,
            basis: (k..k + m).collect(),
            nonbasic: (0..k).collect(),
            tab,
            obj: p.objective().to_vec(),
            bval: vec![T::zero(); m],
            nval: vec![T::zero(); k],
            scale,
            rows,
            objective: p.objective().to_vec(),
            iterations: 0,
        }
    }

    /// Relaxes every row bound by a distinct small amount so that ties in
    /// the ratio test become rare. The offsets come from a fixed sequence,
    /// keeping solves deterministic.
    fn perturb(&mut self) {
        let mut state: u64 = 0x9e37_79b9_7f4a_7c15;
        for i in 0..self.m {
            state = state.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1_442_695_040_888_963_407);
            let u = (state >> 11) as f64 / (1u64 << 53) as f64;
            let var = self.k + i;
            if let Some(u_b) = &self.upper[var] {
                let shift = T::from_f64(PERTURBATION * (1.0 + u) * (1.0 + u_b.abs().to_f64()));
                self.upper[var] = Some(u_b.add(&shift));
            }
            if let Some(l_b) = &self.lower[var] {
                let shift = T::from_f64(PERTURBATION * (1.0 + u) * (1.0 + l_b.abs().to_f64()));
                self.lower[var] = Some(l_b.sub(&shift));
            }
        }
    }

    /// Puts back the given bounds and moves nonbasic row activities onto them.
    fn restore_bounds(&mut self, (lower, upper): (Vec<Option<T>>, Vec<Option<T>>)) {
        self.lower = lower;
        self.upper = upper;
        for (j, &var) in self.nonbasic.iter().enumerate() {
            if var >= self.k {
                if let Some(b) = self.upper[var].as_ref().or(self.lower[var].as_ref()) {
                    self.nval[j] = b.clone();
                }
            }
        }
    }

    fn row(&self, i: usize) -> &[T] {
        &self.tab[i * self.k..(i + 1) * self.k]
    }

    /// +1 below the lower bound, -1 above the upper bound, 0 if feasible.
    fn violation_sign(&self, i: usize) -> i8 {
        let v = &self.bval[i];
        let var = self.basis[i];
        let tol = T::primal_tol();
        if let Some(l) = &self.lower[var] {
            if *v < l.sub(&tol) {
                return 1;
            }
        }
        if let Some(u) = &self.upper[var] {
            if *v > u.add(&tol) {
                return -1;
            }
        }
        0
    }

    fn phase_one_costs(&self, signs: &[i8]) -> Vec<T> {
        let mut cost = vec![T::zero(); self.k];
        for (i, &s) in signs.iter().enumerate() {
            match s {
                1 => T::axpy(&mut cost, &T::one(), self.row(i)),
                -1 => T::axpy(&mut cost, &T::one().neg(), self.row(i)),
                _ => {}
            }
        }
        cost
    }

    fn can_increase(&self, j: usize) -> bool {
        match &self.upper[self.nonbasic[j]] {
            None => true,
            Some(u) => self.nval[j] < *u,
        }
    }

    fn can_decrease(&self, j: usize) -> bool {
        match &self.lower[self.nonbasic[j]] {
            None => true,
            Some(l) => self.nval[j] > *l,
        }
    }

    /// Entering column and direction (+1 increase, -1 decrease).
    fn price(&self, cost: &[T], bland: bool) -> Option<(usize, bool)> {
        let tol = T::dual_tol();
        let neg_tol = tol.neg();
        let mut best: Option<(usize, bool, T)> = None;
        for (j, d) in cost.iter().enumerate() {
            let dir = if *d > tol && self.can_increase(j) {
                true
            } else if *d < neg_tol && self.can_decrease(j) {
                false
            } else {
                continue;
            };
            let score = d.abs();
            let better = match &best {
                None => true,
                Some((bj, _, bs)) => {
                    if bland {
                        self.nonbasic[j] < self.nonbasic[*bj]
                    } else {
                        score > *bs || (score == *bs && self.nonbasic[j] < self.nonbasic[*bj])
                    }
                }
            };
            if better {
                best = Some((j, dir, score));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    /// Harris two-pass ratio test. The first pass finds the largest step
    /// that keeps every blocking variable within `primal_tol` of its bound;
    /// the second picks, among rows blocking no later than that, the largest
    /// pivot (or under Bland's rule the smallest index among large pivots).
    fn ratio_test(&self, j: usize, increase: bool, bland: bool) -> Option<Step<T>> {
        let ptol = T::pivot_tol();
        let ftol = T::primal_tol();
        // (row, exact step, bound, |rate|, relaxed step)
        let mut cands: Vec<(usize, T, T, T, T)> = Vec::new();
        for i in 0..self.m {
            let coef = &self.tab[i * self.k + j];
            if coef.abs() <= ptol || coef.is_zero() {
                continue;
            }
            let rate = if increase { coef.clone() } else { coef.neg() };
            let var = self.basis[i];
            let v = &self.bval[i];
            let lo = self.lower[var].as_ref();
            let hi = self.upper[var].as_ref();
            let below = lo.is_some_and(|l| *v < l.sub(&ftol));
            let above = hi.is_some_and(|u| *v > u.add(&ftol));
            let mag = rate.abs();
            let hit = if rate > T::zero() {
                if below {
                    lo.map(|l| (l.sub(v), l.clone()))
                } else if above {
                    None
                } else {
                    hi.map(|u| (u.sub(v), u.clone()))
                }
            } else if above {
                hi.map(|u| (v.sub(u), u.clone()))
            } else if below {
                None
            } else {
                lo.map(|l| (v.sub(l), l.clone()))
            };
            let Some((dist, bound)) = hit else { continue };
            let dist = T::max(dist, T::zero());
            let relaxed = dist.add(&ftol).div(&mag);
            cands.push((i, dist.div(&mag), bound, mag, relaxed));
        }
        let best = cands.iter().map(|c| c.4.clone()).reduce(|a, b| if b < a { b } else { a }).map(|tmax| {
            let within: Vec<&(usize, T, T, T, T)> = cands.iter().filter(|c| c.1 <= tmax).collect();
            let top = within.iter().fold(T::zero(), |a, c| T::max(a, c.3.clone()));
            let chosen = if bland {
                let floor = top.mul(&T::harris_share());
                within
                    .iter()
                    .filter(|c| c.3 >= floor)
                    .min_by_key(|c| self.basis[c.0])
                    .expect("largest pivot qualifies")
            } else {
                within
                    .iter()
                    .filter(|c| c.3 == top)
                    .min_by_key(|c| self.basis[c.0])
                    .expect("largest pivot qualifies")
            };
            (chosen.0, chosen.1.clone(), chosen.2.clone())
        });
        let var = self.nonbasic[j];
        let flip = match (&self.lower[var], &self.upper[var]) {
            (Some(l), Some(u)) => Some(u.sub(l)),
            _ => None,
        };
        match (best, flip) {
            (Some((i, t, bound)), Some(f)) => {
                if f <= t {
                    Some(Step { t: f, leave: None })
                } else {
                    Some(Step { t, leave: Some((i, bound)) })
                }
            }
            (Some((i, t, bound)), None) => Some(Step { t, leave: Some((i, bound)) }),
            (None, Some(f)) => Some(Step { t: f, leave: None }),
            (None, None) => None,
        }
    }

    fn apply(&mut self, j: usize, increase: bool, step: Step<T>) {
        let delta = if increase { step.t.clone() } else { step.t.neg() };
        for i in 0..self.m {
            let coef = &self.tab[i * self.k + j];
            if !coef.is_zero() {
                self.bval[i] = self.bval[i].add(&coef.mul(&delta));
            }
        }
        let entering_value = self.nval[j].add(&delta);
        match step.leave {
            None => {
                let var = self.nonbasic[j];
                self.nval[j] = if increase {
                    self.upper[var].clone().expect("flip needs both bounds")
                } else {
                    self.lower[var].clone().expect("flip needs both bounds")
                };
            }
            Some((r, bound)) => {
                self.pivot(r, j);
                self.bval[r] = entering_value;
                self.nval[j] = bound;
            }
        }
    }

    fn pivot(&mut self, r: usize, s: usize) {
        let k = self.k;
        let p = self.tab[r * k + s].clone();
        let inv = T::one().div(&p);
        let mut new_row: Vec<T> = self.row(r).iter().map(|v| v.neg().mul(&inv)).collect();
        new_row[s] = inv;
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = std::mem::replace(&mut self.tab[i * k + s], T::zero());
            if f.is_zero() {
                continue;
            }
            T::axpy(&mut self.tab[i * k..(i + 1) * k], &f, &new_row);
        }
        let f = std::mem::replace(&mut self.obj[s], T::zero());
        T::axpy(&mut self.obj, &f, &new_row);
        self.tab[r * k..(r + 1) * k].clone_from_slice(&new_row);
        std::mem::swap(&mut self.basis[r], &mut self.nonbasic[s]);
    }

    fn run(&mut self, limit: usize, bland_after: usize) -> Result<Outcome<T>> {
        let mut degenerate_run = 0usize;
        loop {
            let signs: Vec<i8> = (0..self.m).map(|i| self.violation_sign(i)).collect();
            let phase_one = signs.iter().any(|&s| s != 0);
            let phase_costs;
            let cost: &[T] = if phase_one {
                phase_costs = self.phase_one_costs(&signs);
                &phase_costs
            } else {
                &self.obj
            };
            let bland = degenerate_run >= bland_after;
            let Some((j, increase)) = self.price(cost, bland) else {
                if phase_one {
                    return Ok(Outcome::Infeasible(self.farkas_raw(cost, &signs)));
                }
                return Ok(Outcome::Optimal);
            };
            if self.iterations >= limit {
                return Err(Error::SolverFailure(format!(
                    "iteration limit {limit} exceeded ({} rows, {} columns)",
                    self.m, self.k
                )));
            }
            self.iterations += 1;
            if self.iterations % REBUILD_EVERY == 0 && !T::pivot_tol().is_zero() && self.rebuild().is_ok() {
                continue;
            }
            let step = self.ratio_test(j, increase, bland).ok_or_else(|| {
                Error::SolverFailure("unbounded ray in a box-constrained problem".into())
            })?;
            if step.t <= T::pivot_tol() {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.apply(j, increase, step);
        }
    }

    /// Dual simplex passes from a dual feasible basis: repeatedly moves the
    /// most violated basic variable onto its bound while keeping every
    /// reduced cost sign-feasible. Stops when primal feasible, when the basis
    /// is not dual feasible, or when no pivot keeps it so; the primal
    /// simplex then takes over.
    fn dual_cleanup(&mut self, limit: usize) {
        let dtol = T::dual_tol();
        let ptol = T::pivot_tol();
        let dual_feasible = (0..self.k).all(|j| {
            let d = &self.obj[j];
            !((*d > dtol && self.can_increase(j)) || (*d < dtol.neg() && self.can_decrease(j)))
        });
        if !dual_feasible {
            return;
        }
        let budget = self.iterations + self.m.max(self.k) * 4;
        while self.iterations < limit.min(budget) {
            let mut leave: Option<(usize, T)> = None;
            for i in 0..self.m {
                let sign = self.violation_sign(i);
                if sign == 0 {
                    continue;
                }
                let var = self.basis[i];
                let gap = if sign > 0 {
                    self.lower[var].as_ref().expect("violated bound").sub(&self.bval[i])
                } else {
                    self.bval[i].sub(self.upper[var].as_ref().expect("violated bound"))
                };
                if leave.as_ref().is_none_or(|(_, g)| gap > *g) {
                    leave = Some((i, gap));
                }
            }
            let Some((r, _)) = leave else { return };
            let raise = self.violation_sign(r) > 0;
            // entering candidates: (column, |d|/|a|, |a|)
            let mut cands: Vec<(usize, T, T)> = Vec::new();
            for j in 0..self.k {
                let a = &self.tab[r * self.k + j];
                if a.abs() <= ptol || a.is_zero() {
                    continue;
                }
                let up = a > &T::zero();
                let usable = if up == raise { self.can_increase(j) } else { self.can_decrease(j) };
                if !usable {
                    continue;
                }
                let d = self.obj[j].abs();
                let mag = a.abs();
                cands.push((j, d.div(&mag), mag));
            }
            let Some(min) = cands.iter().map(|c| c.1.clone()).reduce(|x, y| if y < x { y } else { x }) else {
                return;
            };
            let slack = dtol.div(&cands.iter().fold(T::zero(), |x, c| T::max(x, c.2.clone())));
            let cutoff = min.add(&slack);
            let (j, _, _) = cands
                .iter()
                .filter(|c| c.1 <= cutoff)
                .fold(None::<&(usize, T, T)>, |best, c| match best {
                    Some(b) if b.2 >= c.2 => Some(b),
                    _ => Some(c),
                })
                .expect("minimum qualifies")
                .clone();
            let var = self.basis[r];
            let target = if raise { self.lower[var].clone() } else { self.upper[var].clone() }.expect("violated bound");
            let a = self.tab[r * self.k + j].clone();
            let delta = target.sub(&self.bval[r]).div(&a);
            let increase = delta > T::zero();
            self.iterations += 1;
            self.apply(j, increase, Step { t: delta.abs(), leave: Some((r, target)) });
        }
    }

    /// Recomputes the dictionary, objective row and basic values for the
    /// current basis directly from the scaled rows. Only a `p x p` block is
    /// inverted, where `p` is the number of basic structurals.
    fn rebuild(&mut self) -> Result<()> {
        let (m, k) = (self.m, self.k);
        let basic_struct: Vec<usize> = self.basis.iter().copied().filter(|&v| v < k).collect();
        let nonbasic_rows: Vec<usize> = self.nonbasic.iter().copied().filter(|&v| v >= k).map(|v| v - k).collect();
        let p = basic_struct.len();
        if p != nonbasic_rows.len() {
            return Err(Error::SolverFailure("basis bookkeeping out of sync".into()));
        }
        let mut g = Vec::with_capacity(p * p);
        for &r in &nonbasic_rows {
            g.extend(basic_struct.iter().map(|&c| self.rows[r][c].clone()));
        }
        let ginv = invert_dense(g, p)?;
        let row_pos: std::collections::HashMap<usize, usize> =
            nonbasic_rows.iter().enumerate().map(|(a, &r)| (r, a)).collect();
        // x_SB = X x_N, with X stored row-major p x k
        let mut xmat = vec![T::zero(); p * k];
        for (j, &var) in self.nonbasic.iter().enumerate() {
            if var >= k {
                let a = row_pos[&(var - k)];
                for b in 0..p {
                    xmat[b * k + j] = ginv[b * p + a].clone();
                }
            } else {
                for b in 0..p {
                    let mut acc = T::zero();
                    for (a, &r) in nonbasic_rows.iter().enumerate() {
                        let v = &self.rows[r][var];
                        if !v.is_zero() {
                            acc = acc.add(&ginv[b * p + a].mul(v));
                        }
                    }
                    xmat[b * k + j] = acc.neg();
                }
            }
        }
        let struct_pos: std::collections::HashMap<usize, usize> =
            basic_struct.iter().enumerate().map(|(b, &c)| (c, b)).collect();
        let combine = |weights: &[T]| -> Vec<T> {
            let mut out = vec![T::zero(); k];
            for (b, &c) in basic_struct.iter().enumerate() {
                T::axpy(&mut out, &weights[c], &xmat[b * k..(b + 1) * k]);
            }
            for (j, &var) in self.nonbasic.iter().enumerate() {
                if var < k {
                    out[j] = out[j].add(&weights[var]);
                }
            }
            out
        };
        let mut tab = Vec::with_capacity(m * k);
        for i in 0..m {
            let var = self.basis[i];
            if var < k {
                let b = struct_pos[&var];
                tab.extend(xmat[b * k..(b + 1) * k].iter().cloned());
            } else {
                tab.extend(combine(&self.rows[var - k]));
            }
        }
        self.obj = combine(&self.objective);
        self.tab = tab;
        for i in 0..m {
            self.bval[i] = dot(&self.tab[i * k..(i + 1) * k], &self.nval);
        }
        Ok(())
    }

    /// Phase-one multipliers in scaled row space: reduced costs of nonbasic
    /// activities plus the violation signs of infeasible basic activities.
    fn farkas_raw(&self, cost: &[T], signs: &[i8]) -> Vec<T> {
        let mut y = vec![T::zero(); self.m];
        for (j, &var) in self.nonbasic.iter().enumerate() {
            if var >= self.k {
                y[var - self.k] = cost[j].clone();
            }
        }
        for (i, &s) in signs.iter().enumerate() {
            if self.basis[i] >= self.k {
                let row = self.basis[i] - self.k;
                match s {
                    1 => y[row] = T::one().neg(),
                    -1 => y[row] = T::one(),
                    _ => {}
                }
            }
        }
        y
    }

    /// Recomputes the primal point and row duals from the final basis using
    /// the original (scaled) rows, then unscales the duals.
    fn refactor(&self, objective: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        let basic_struct: Vec<usize> = self.basis.iter().copied().filter(|&v| v < self.k).collect();
        let nonbasic_rows: Vec<(usize, usize)> = self
            .nonbasic
            .iter()
            .enumerate()
            .filter(|(_, &v)| v >= self.k)
            .map(|(j, &v)| (j, v - self.k))
            .collect();
        let p = basic_struct.len();
        if p != nonbasic_rows.len() {
            return Err(Error::SolverFailure("basis bookkeeping out of sync".into()));
        }
        let mut x = vec![T::zero(); self.k];
        for (j, &v) in self.nonbasic.iter().enumerate() {
            if v < self.k {
                x[v] = self.nval[j].clone();
            }
        }
        let mut y_scaled = vec![T::zero(); self.m];
        if p > 0 {
            let mut mat = Vec::with_capacity(p * p);
            let mut rhs = Vec::with_capacity(p);
            for &(j, row) in &nonbasic_rows {
                let a = &self.rows[row];
                mat.extend(basic_struct.iter().map(|&c| a[c].clone()));
                rhs.push(self.nval[j].sub(&dot(a, &x)));
            }
            let xb = solve_dense(mat.clone(), rhs, p, false)?;
            for (c, v) in basic_struct.iter().zip(xb) {
                x[*c] = v;
            }
            let cb: Vec<T> = basic_struct.iter().map(|&c| objective[c].clone()).collect();
            let yb = solve_dense(mat, cb, p, true)?;
            for (&(_, row), v) in nonbasic_rows.iter().zip(yb) {
                y_scaled[row] = v;
            }
        }
        let tol = T::feas_tol();
        for v in x.iter_mut() {
            if *v < T::zero() && *v >= tol.neg() {
                *v = T::zero();
            } else if *v > T::one() && v.sub(&T::one()) <= tol {
                *v = T::one();
            }
        }
        let y = y_scaled
            .iter()
            .zip(&self.scale)
            .map(|(v, s)| v.mul(s))
            .collect();
        Ok((x, y))
    }

    fn certified_optimum(&self, problem: &LpProblem<T>) -> Result<LpSolution<T>> {
        let (x, y) = self.refactor(problem.objective())?;
        let duals = signed_to_multipliers(problem, &y);
        let objective = dot(problem.objective(), &x);
        let certificate = certify(problem, &x, &duals, &objective)?;
        if certificate.primal_infeasibility > T::feas_tol() {
            return Err(Error::SolverFailure(format!(
                "primal infeasibility {:e} exceeds tolerance",
                certificate.primal_infeasibility.to_f64()
            )));
        }
        if certificate.duality_gap.abs() > T::gap_tol() {
            return Err(Error::SolverFailure(format!(
                "duality gap {:e} exceeds tolerance (primal {}, dual {})",
                certificate.duality_gap.to_f64(),
                objective.to_f64(),
                certificate.dual_value.to_f64()
            )));
        }
        Ok(LpSolution {
            status: LpStatus::Optimal,
            primal: x,
            objective,
            duals,
            iterations: self.iterations,
            certificate,
        })
    }

    fn certified_infeasibility(&self, problem: &LpProblem<T>, raw: Vec<T>) -> Result<LpSolution<T>> {
        let y: Vec<T> = raw.iter().zip(&self.scale).map(|(v, s)| v.mul(s)).collect();
        let duals = signed_to_multipliers(problem, &y);
        let x = self.current_point();
        let farkas = farkas_value(problem, &duals);
        if farkas >= T::zero().sub(&T::feas_tol()) {
            return Err(Error::SolverFailure(format!(
                "phase one stalled without an infeasibility certificate (value {:e})",
                farkas.to_f64()
            )));
        }
        let certificate = Certificate {
            primal_infeasibility: problem.primal_infeasibility(&x),
            dual_value: farkas.clone(),
            duality_gap: T::zero(),
            complementarity: T::zero(),
        };
        Ok(LpSolution {
            status: LpStatus::Infeasible,
            objective: dot(problem.objective(), &x),
            primal: x,
            duals,
            iterations: self.iterations,
            certificate,
        })
    }

    fn current_point(&self) -> Vec<T> {
        let mut x = vec![T::zero(); self.k];
        for (j, &v) in self.nonbasic.iter().enumerate() {
            if v < self.k {
                x[v] = self.nval[j].clone();
            }
        }
        for (i, &v) in self.basis.iter().enumerate() {
            if v < self.k {
                x[v] = self.bval[i].clone();
            }
        }
        x
    }
}

/// Converts raw row duals (`>= 0` on `<=` rows, `<= 0` on `>=` rows at
/// optimality) to non-negative multipliers, clearing round-off of the wrong sign.
fn signed_to_multipliers<T: LpScalar>(problem: &LpProblem<T>, y: &[T]) -> Vec<T> {
    y.iter()
        .enumerate()
        .map(|(i, v)| {
            let m = match problem.sense(i) {
                Sense::Le => v.clone(),
                Sense::Ge => v.neg(),
            };
            if m < T::zero() {
                T::zero()
            } else {
                m
            }
        })
        .collect()
}

/// Dual value with a zero objective; negative values prove infeasibility.
fn farkas_value<T: LpScalar>(problem: &LpProblem<T>, multipliers: &[T]) -> T {
    let mut value = T::zero();
    let mut reduced = vec![T::zero(); problem.num_vars()];
    for (i, m) in multipliers.iter().enumerate() {
        if m.is_zero() {
            continue;
        }
        let signed = match problem.sense(i) {
            Sense::Le => m.clone(),
            Sense::Ge => m.neg(),
        };
        value = value.add(&signed.mul(problem.rhs(i)));
        T::axpy(&mut reduced, &signed.neg(), problem.row(i));
    }
    reduced
        .into_iter()
        .filter(|r| *r > T::zero())
        .fold(value, |acc, r| acc.add(&r))
}

fn certify<T: LpScalar>(
    problem: &LpProblem<T>,
    x: &[T],
    duals: &[T],
    objective: &T,
) -> Result<Certificate<T>> {
    let dual_value = problem.dual_value(duals)?;
    let mut complementarity = T::zero();
    for (i, m) in duals.iter().enumerate() {
        if m.is_zero() {
            continue;
        }
        let slack = dot(problem.row(i), x).sub(problem.rhs(i)).abs();
        complementarity = T::max(complementarity, m.mul(&slack));
    }
    Ok(Certificate {
        primal_infeasibility: problem.primal_infeasibility(x),
        duality_gap: dual_value.sub(objective),
        dual_value,
        complementarity,
    })
}

/// Inverse of a dense row-major `p x p` matrix by Gauss-Jordan elimination
/// with partial pivoting.
fn invert_dense<T: LpScalar>(mut a: Vec<T>, p: usize) -> Result<Vec<T>> {
    let mut inv = vec![T::zero(); p * p];
    for i in 0..p {
        inv[i * p + i] = T::one();
    }
    for col in 0..p {
        let mut piv = col;
        for r in col + 1..p {
            if a[r * p + col].abs() > a[piv * p + col].abs() {
                piv = r;
            }
        }
        if a[piv * p + col].abs() <= T::pivot_tol() || a[piv * p + col].is_zero() {
            return Err(Error::SolverFailure("singular basis during rebuild".into()));
        }
        if piv != col {
            for c in 0..p {
                a.swap(piv * p + c, col * p + c);
                inv.swap(piv * p + c, col * p + c);
            }
        }
        let d = T::one().div(&a[col * p + col]);
        for c in 0..p {
            a[col * p + c] = a[col * p + c].mul(&d);
            inv[col * p + c] = inv[col * p + c].mul(&d);
        }
        let pivot_a: Vec<T> = a[col * p..(col + 1) * p].to_vec();
        let pivot_inv: Vec<T> = inv[col * p..(col + 1) * p].to_vec();
        for r in 0..p {
            if r == col {
                continue;
            }
            let f = a[r * p + col].neg();
            if f.is_zero() {
                continue;
            }
            T::axpy(&mut a[r * p..(r + 1) * p], &f, &pivot_a);
            T::axpy(&mut inv[r * p..(r + 1) * p], &f, &pivot_inv);
        }
    }
    Ok(inv)
}

/// Solves `M z = b` (or `M^T z = b`) for a dense row-major `p x p` matrix by
/// Gaussian elimination with partial pivoting.
fn solve_dense<T: LpScalar>(mut a: Vec<T>, mut b: Vec<T>, p: usize, transpose: bool) -> Result<Vec<T>> {
    if transpose {
        let mut t = a.clone();
        for i in 0..p {
            for j in 0..p {
                t[j * p + i] = a[i * p + j].clone();
            }
        }
        a = t;
    }
    for col in 0..p {
        let mut piv = col;
        for r in col + 1..p {
            if a[r * p + col].abs() > a[piv * p + col].abs() {
                piv = r;
            }
        }
        if a[piv * p + col].is_zero() {
            return Err(Error::SolverFailure("singular basis during refactorization".into()));
        }
        if piv != col {
            for c in 0..p {
                a.swap(piv * p + c, col * p + c);
            }
            b.swap(piv, col);
        }
        let d = a[col * p + col].clone();
        for r in col + 1..p {
            let f = a[r * p + col].div(&d);
            if f.is_zero() {
                continue;
            }
            let (top, bottom) = a.split_at_mut(r * p);
            let src = &top[col * p + col..col * p + p];
            T::axpy(&mut bottom[col..p], &f.neg(), src);
            b[r] = b[r].sub(&f.mul(&b[col]));
        }
    }
    let mut z = vec![T::zero(); p];
    for r in (0..p).rev() {
        let mut acc = b[r].clone();
        for c in r + 1..p {
            acc = acc.sub(&a[r * p + c].mul(&z[c]));
        }
        z[r] = acc.div(&a[r * p + r]);
    }
    Ok(z)
}
