//! A small dense simplex solver with exact dual information.
//!
//! Programs are stated as
//!
//! ```text
//! maximize / minimize  c . x
//! subject to           A x <= b,   E x = d,   x_j >= 0 | <= 0 | free
//! ```
//!
//! and reduced to `max c' x'  s.t.  A' x' <= b'` (non-positive variables
//! negated, equalities doubled, minimization negated). Free variables are
//! kept as they are: they are pivoted into the basis first by Gauss-Jordan
//! elimination and never leave it. The rest is a two-phase dictionary
//! simplex with lowest-index entering columns, a Harris ratio test, and a
//! fall back to Bland's rule after a run of degenerate pivots. All rules are
//! deterministic, so repeated solves take identical pivots. The basis is
//! refactored from the original data every few pivots and at the end, before
//! duals and residuals are reported.
//!
//! # Tableau dump format
//!
//! [`LinearProgram::to_tableau_text`] writes a plain-text description that
//! external solvers can be fed with minimal scripting:
//!
//! ```text
//! sense max|min
//! vars <n>
//! signs <s_1> ... <s_n>        (each one of  + - free)
//! objective <c_1> ... <c_n>
//! le <a_1> ... <a_n> <b>       (one line per inequality row)
//! eq <e_1> ... <e_n> <d>       (one line per equality row)
//! ```
//!
//! Numbers are printed with `{:e}`, which round-trips `f64` exactly.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use thiserror::Error;

/// Pivot elements smaller than this are never used.
pub const PIVOT_TOL: f64 = 1e-9;
/// Phase-two pivots between refactorizations.
const REFACTOR_EVERY: usize = 32;
/// Non-improving pivots before the ratio test switches to Bland's rule.
const STALL_LIMIT: usize = 50;
/// Feasibility and optimality tolerance of the simplex.
pub const FEAS_TOL: f64 = 1e-9;
/// Residuals above this after refinement are reported as a breakdown.
pub const BREAKDOWN_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("inconsistent dimensions: {0}")]
    Dimension(String),
    #[error("non-finite coefficient in the program")]
    NonFinite,
    #[error("numeric breakdown: residual {0:e} after refinement")]
    NumericBreakdown(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarSign {
    NonNeg,
    NonPos,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub bounds: Vec<f64>,
    pub eq_rows: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    pub signs: Vec<VarSign>,
    pub sense: Sense,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// `c . x` at the optimum; NaN unless optimal.
    pub value: f64,
    pub primal: Vec<f64>,
    /// One multiplier per inequality row, with `value = b . y + d . lambda`.
    pub dual: Vec<f64>,
    /// One multiplier per equality row.
    pub eq_dual: Vec<f64>,
    pub pivots: usize,
    /// Largest primal infeasibility of the reported point.
    pub primal_residual: f64,
    /// `|c . x - (b . y + d . lambda)|`.
    pub duality_gap: f64,
}

impl LinearProgram {
    /// A program with only inequality rows and non-negative variables.
    pub fn new(sense: Sense, objective: Vec<f64>, rows: Vec<Vec<f64>>, bounds: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            objective,
            rows,
            bounds,
            eq_rows: Vec::new(),
            eq_rhs: Vec::new(),
            signs: vec![VarSign::NonNeg; n],
            sense,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn with_signs(mut self, signs: Vec<VarSign>) -> Self {
        self.signs = signs;
        self
    }

    pub fn with_equality(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.eq_rows.push(row);
        self.eq_rhs.push(rhs);
        self
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.signs.len() != n {
            return Err(LpError::Dimension(format!("{} signs for {n} variables", self.signs.len())));
        }
        if self.rows.len() != self.bounds.len() {
            return Err(LpError::Dimension(format!("{} rows but {} bounds", self.rows.len(), self.bounds.len())));
        }
        if self.eq_rows.len() != self.eq_rhs.len() {
            return Err(LpError::Dimension(format!(
                "{} equality rows but {} right-hand sides",
                self.eq_rows.len(),
                self.eq_rhs.len()
            )));
        }
        if let Some(k) = self.rows.iter().chain(&self.eq_rows).position(|r| r.len() != n) {
            return Err(LpError::Dimension(format!("row {k} does not have {n} entries")));
        }
        let finite = self
            .objective
            .iter()
            .chain(self.bounds.iter())
            .chain(self.eq_rhs.iter())
            .chain(self.rows.iter().flatten())
            .chain(self.eq_rows.iter().flatten())
            .all(|x| x.is_finite());
        if !finite {
            return Err(LpError::NonFinite);
        }
        Ok(())
    }

    /// Plain-text dump, see the module documentation.
    pub fn to_tableau_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ");
        let mut out = String::new();
        out.push_str(match self.sense {
            Sense::Maximize => "sense max\n",
            Sense::Minimize => "sense min\n",
        });
        out.push_str(&format!("vars {}\n", self.num_vars()));
        let signs: Vec<&str> = self
            .signs
            .iter()
            .map(|s| match s {
                VarSign::NonNeg => "+",
                VarSign::NonPos => "-",
                VarSign::Free => "free",
            })
            .collect();
        out.push_str(&format!("signs {}\n", signs.join(" ")));
        out.push_str(&format!("objective {}\n", join(&self.objective)));
        for (row, b) in self.rows.iter().zip(&self.bounds) {
            out.push_str(&format!("le {} {b:e}\n", join(row)));
        }
        for (row, d) in self.eq_rows.iter().zip(&self.eq_rhs) {
            out.push_str(&format!("eq {} {d:e}\n", join(row)));
        }
        out
    }

    fn canonical(&self) -> Canonical {
        // Column map: original variable j -> list of (canonical column, factor).
        let mut columns: Vec<Vec<(usize, f64)>> = Vec::with_capacity(self.num_vars());
        let mut ncols = 0;
        let mut free = Vec::with_capacity(self.num_vars());
        for sign in &self.signs {
            let cols = match sign {
                VarSign::NonNeg | VarSign::Free => vec![(ncols, 1.0)],
                VarSign::NonPos => vec![(ncols, -1.0)],
            };
            free.push(*sign == VarSign::Free);
            ncols += cols.len();
            columns.push(cols);
        }
        let expand = |row: &[f64]| {
            let mut out = vec![0.0; ncols];
            for (j, cols) in columns.iter().enumerate() {
                for &(k, f) in cols {
                    out[k] = f * row[j];
                }
            }
            out
        };
        let mut a = Vec::with_capacity(self.rows.len() + 2 * self.eq_rows.len());
        let mut b = Vec::with_capacity(a.capacity());
        for (row, bound) in self.rows.iter().zip(&self.bounds) {
            a.push(expand(row));
            b.push(*bound);
        }
        for (row, rhs) in self.eq_rows.iter().zip(&self.eq_rhs) {
            let e = expand(row);
            a.push(e.iter().map(|x| -x).collect());
            a.push(e);
            b.push(-rhs);
            b.push(*rhs);
        }
        let mut c = expand(&self.objective);
        if self.sense == Sense::Minimize {
            c.iter_mut().for_each(|x| *x = -*x);
        }
        // Equilibrate rows so pivot thresholds mean the same on every row.
        let mut scale = vec![1.0; a.len()];
        for (i, row) in a.iter_mut().enumerate() {
            let m = row.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
            if m > 0.0 {
                scale[i] = 1.0 / m;
                row.iter_mut().for_each(|x| *x *= scale[i]);
                b[i] *= scale[i];
            }
        }
        Canonical {
            a,
            b,
            c,
            free,
            columns,
            scale,
        }
    }
}

struct Canonical {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
    /// Unrestricted columns; they are pivoted into the basis first and
    /// never leave it.
    free: Vec<bool>,
    columns: Vec<Vec<(usize, f64)>>,
    /// Row `i` of `a` and `b` is the original row times `scale[i]`.
    scale: Vec<f64>,
}

/// Dictionary `x_B(i) = rhs_i - sum_j t_ij x_N(j)`, `z = z0 + sum_j d_j x_N(j)`.
///
/// Variables `0..n` are structural, `n..n+m` are slacks, `n+m` is the
/// phase-one auxiliary variable.
struct Dictionary {
    t: Vec<f64>,
    width: usize,
    rhs: Vec<f64>,
    d: Vec<f64>,
    z0: f64,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
    /// Indexed by variable.
    free: Vec<bool>,
    pivots: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl Dictionary {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width + j]
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.width;
        let inv = 1.0 / self.t[r * w + q];
        for j in 0..w {
            if j != q {
                self.t[r * w + j] *= inv;
            }
        }
        self.t[r * w + q] = inv;
        self.rhs[r] *= inv;
        let prow: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        let prhs = self.rhs[r];
        for i in 0..self.rhs.len() {
            if i == r {
                continue;
            }
            let row = &mut self.t[i * w..(i + 1) * w];
            let f = row[q];
            if f == 0.0 {
                continue;
            }
            for j in 0..w {
                if j != q {
                    row[j] -= f * prow[j];
                }
            }
            row[q] = -f * inv;
            self.rhs[i] -= f * prhs;
        }
        let f = self.d[q];
        if f != 0.0 {
            for j in 0..w {
                if j != q {
                    self.d[j] -= f * prow[j];
                }
            }
            self.d[q] = -f * inv;
            self.z0 += f * prhs;
        }
        std::mem::swap(&mut self.basic[r], &mut self.nonbasic[q]);
        self.pivots += 1;
    }

    /// Rebuilds a phase-two dictionary for the current basis from the
    /// original data. Only the block of basic structural columns against
    /// tight rows needs factoring. Returns `false` if that block is singular.
    fn refactor(&mut self, canon: &Canonical) -> bool {
        let n = canon.c.len();
        let m = canon.b.len();
        debug_assert_eq!(self.width, n);
        let cols: Vec<usize> = self.basic.iter().copied().filter(|&v| v < n).collect();
        let tight: Vec<usize> = self.nonbasic.iter().filter(|&&v| v >= n).map(|&v| v - n).collect();
        if cols.len() != tight.len() {
            return false;
        }
        let k = cols.len();
        // Coefficient of nonbasic variable `v` in original row `i`.
        let coef = |i: usize, v: usize| if v < n { canon.a[i][v] } else if v - n == i { 1.0 } else { 0.0 };
        let (x0, w) = if k == 0 {
            // nalgebra cannot solve an empty system.
            (DVector::zeros(0), DMatrix::zeros(0, n))
        } else {
            let lu = DMatrix::from_fn(k, k, |p, q| canon.a[tight[p]][cols[q]]).lu();
            let Some(x0) = lu.solve(&DVector::from_fn(k, |p, _| canon.b[tight[p]])) else {
                return false;
            };
            let Some(w) = lu.solve(&DMatrix::from_fn(k, n, |p, j| coef(tight[p], self.nonbasic[j]))) else {
                return false;
            };
            (x0, w)
        };
        let pos: Vec<Option<usize>> = (0..n).map(|v| cols.iter().position(|&c| c == v)).collect();
        for r in 0..m {
            let v = self.basic[r];
            let row = &mut self.t[r * n..(r + 1) * n];
            if v < n {
                let q = pos[v].expect("basic structural column");
                for (j, x) in row.iter_mut().enumerate() {
                    *x = w[(q, j)];
                }
                self.rhs[r] = x0[q];
            } else {
                let i = v - n;
                let ai: Vec<f64> = cols.iter().map(|&c| canon.a[i][c]).collect();
                for (j, x) in row.iter_mut().enumerate() {
                    *x = coef(i, self.nonbasic[j]) - (0..k).map(|q| ai[q] * w[(q, j)]).sum::<f64>();
                }
                self.rhs[r] = canon.b[i] - (0..k).map(|q| ai[q] * x0[q]).sum::<f64>();
            }
        }
        let cs: Vec<f64> = cols.iter().map(|&c| canon.c[c]).collect();
        for j in 0..n {
            let v = self.nonbasic[j];
            let own = if v < n { canon.c[v] } else { 0.0 };
            self.d[j] = own - (0..k).map(|q| cs[q] * w[(q, j)]).sum::<f64>();
        }
        self.z0 = (0..k).map(|q| cs[q] * x0[q]).sum();
        true
    }

    /// Lowest-index improving variable enters. The leaving row comes from a
    /// Harris ratio test while the objective improves, and from Bland's
    /// lowest-index rule once it stalls, which prevents cycling.
    fn run(&mut self, max_pivots: usize, canon: Option<&Canonical>) -> Outcome {
        let mut best = self.z0;
        let mut stall = 0;
        loop {
            let mut entering: Option<usize> = None;
            for j in 0..self.width {
                if self.free[self.nonbasic[j]] {
                    // Only free columns that vanish from every row stay nonbasic.
                    if self.d[j].abs() > FEAS_TOL {
                        return Outcome::Unbounded;
                    }
                    continue;
                }
                if self.d[j] > FEAS_TOL && entering.is_none_or(|e| self.nonbasic[j] < self.nonbasic[e]) {
                    entering = Some(j);
                }
            }
            let Some(q) = entering else {
                return Outcome::Optimal;
            };
            let leaving = if stall > STALL_LIMIT {
                self.bland_row(q)
            } else {
                self.harris_row(q)
            };
            let Some(r) = leaving else {
                return Outcome::Unbounded;
            };
            self.pivot(r, q);
            if self.z0 > best + 1e-12 {
                best = self.z0;
                stall = 0;
            } else {
                stall += 1;
            }
            if let Some(c) = canon {
                if self.pivots % REFACTOR_EVERY == 0 {
                    self.refactor(c);
                }
            }
            if self.pivots > max_pivots {
                // Bland's rule terminates in exact arithmetic; this guards
                // against rounding-induced cycling only.
                return Outcome::Optimal;
            }
        }
    }

    fn candidate_rows(&self, q: usize) -> Vec<usize> {
        (0..self.rhs.len())
            .filter(|&i| self.at(i, q) > PIVOT_TOL && !self.free[self.basic[i]])
            .collect()
    }

    /// Bounds the step with every row relaxed by `FEAS_TOL`, then takes the
    /// largest pivot among rows within the bound.
    fn harris_row(&self, q: usize) -> Option<usize> {
        let rows = self.candidate_rows(q);
        let bound = rows
            .iter()
            .map(|&i| (self.rhs[i].max(0.0) + FEAS_TOL) / self.at(i, q))
            .fold(f64::INFINITY, f64::min);
        rows.into_iter()
            .filter(|&i| self.rhs[i].max(0.0) / self.at(i, q) <= bound)
            .max_by(|&i, &k| self.at(i, q).total_cmp(&self.at(k, q)).then(self.basic[k].cmp(&self.basic[i])))
    }

    /// Minimum ratio, ties to the lowest basic index among pivots that are
    /// not much smaller than the largest tied one.
    fn bland_row(&self, q: usize) -> Option<usize> {
        let rows = self.candidate_rows(q);
        let ratio = |i: usize| self.rhs[i].max(0.0) / self.at(i, q);
        let min = rows.iter().map(|&i| ratio(i)).fold(f64::INFINITY, f64::min);
        let tied: Vec<usize> = rows.into_iter().filter(|&i| ratio(i) <= min + 1e-12).collect();
        let amax = tied.iter().map(|&i| self.at(i, q)).fold(0.0, f64::max);
        tied.into_iter()
            .filter(|&i| self.at(i, q) >= 1e-3 * amax)
            .min_by_key(|&i| self.basic[i])
    }
}

/// Solves a program. Infeasible and unbounded programs are reported through
/// [`LpSolution::status`].
pub fn solve(program: &LinearProgram) -> Result<LpSolution, LpError> {
    program.validate()?;
    let canon = program.canonical();
    let n = canon.c.len();
    let m = canon.b.len();
    let nvars = program.num_vars();
    let not_optimal = |status, pivots| LpSolution {
        status,
        value: f64::NAN,
        primal: vec![f64::NAN; nvars],
        dual: vec![f64::NAN; program.rows.len()],
        eq_dual: vec![f64::NAN; program.eq_rows.len()],
        pivots,
        primal_residual: f64::NAN,
        duality_gap: f64::NAN,
    };
    let max_pivots = 50 * (n + m + 10);

    let mut t = vec![0.0; m * n];
    for i in 0..m {
        t[i * n..(i + 1) * n].copy_from_slice(&canon.a[i]);
    }
    let mut free = canon.free.clone();
    free.resize(n + m + 1, false);
    let mut dict = Dictionary {
        t,
        width: n,
        rhs: canon.b.clone(),
        d: canon.c.clone(),
        z0: 0.0,
        basic: (n..n + m).collect(),
        nonbasic: (0..n).collect(),
        free,
        pivots: 0,
    };
    let aux = n + m;

    // Phase zero: Gauss-Jordan elimination of the free columns with partial
    // pivoting. A pivot at (r, q) leaves the other nonbasic positions alone,
    // so free column j is still at position j when its turn comes.
    for j in (0..n).filter(|&j| canon.free[j]) {
        let best = (0..m)
            .filter(|&i| !dict.free[dict.basic[i]])
            .max_by(|&i, &k| dict.at(i, j).abs().total_cmp(&dict.at(k, j).abs()));
        if let Some(r) = best {
            if dict.at(r, j).abs() > PIVOT_TOL {
                dict.pivot(r, j);
            }
        }
    }

    let restricted = |dict: &Dictionary, i: usize| !dict.free[dict.basic[i]];
    if (0..m).any(|i| restricted(&dict, i) && dict.rhs[i] < 0.0) {
        // Phase one on the current dictionary: x_B = rhs - t x_N + x0 on
        // every sign-restricted row.
        let w = dict.width;
        let mut t = Vec::with_capacity(m * (w + 1));
        for i in 0..m {
            t.extend_from_slice(&dict.t[i * w..(i + 1) * w]);
            t.push(if restricted(&dict, i) { -1.0 } else { 0.0 });
        }
        dict.t = t;
        dict.width = w + 1;
        dict.nonbasic.push(aux);
        dict.d = vec![0.0; w + 1];
        dict.d[w] = -1.0;
        dict.z0 = 0.0;
        let r = (0..m)
            .filter(|&i| restricted(&dict, i))
            .min_by(|&i, &k| dict.rhs[i].total_cmp(&dict.rhs[k]))
            .expect("a violated row exists");
        dict.pivot(r, w);
        dict.run(max_pivots, None);
        if dict.z0 < -FEAS_TOL {
            return Ok(not_optimal(LpStatus::Infeasible, dict.pivots));
        }
        if let Some(r) = dict.basic.iter().position(|&v| v == aux) {
            // Degenerate: the auxiliary variable is basic at zero.
            let q = (0..dict.width)
                .filter(|&j| !dict.free[dict.nonbasic[j]])
                .max_by(|&i, &k| dict.at(r, i).abs().total_cmp(&dict.at(r, k).abs()));
            match q {
                Some(q) if dict.at(r, q).abs() > PIVOT_TOL => dict.pivot(r, q),
                _ => return Err(LpError::NumericBreakdown(0.0)),
            }
        }
        // Drop the auxiliary column.
        let q = dict.nonbasic.iter().position(|&v| v == aux).expect("auxiliary is nonbasic");
        let width = dict.width;
        let mut t = Vec::with_capacity(m * n);
        for i in 0..m {
            for j in 0..width {
                if j != q {
                    t.push(dict.at(i, j));
                }
            }
        }
        dict.t = t;
        dict.width = n;
        dict.nonbasic.remove(q);
        // Rewrite the real objective in terms of the current nonbasis.
        dict.d = vec![0.0; n];
        dict.z0 = 0.0;
        for (j, &v) in dict.nonbasic.iter().enumerate() {
            if v < n {
                dict.d[j] += canon.c[v];
            }
        }
        for (i, &v) in dict.basic.iter().enumerate() {
            if v < n && canon.c[v] != 0.0 {
                let cv = canon.c[v];
                dict.z0 += cv * dict.rhs[i];
                for j in 0..n {
                    dict.d[j] -= cv * dict.at(i, j);
                }
            }
        }
    }

    // Phase two, re-checking optimality on a freshly factored dictionary.
    for _ in 0..4 {
        if let Outcome::Unbounded = dict.run(max_pivots, Some(&canon)) {
            return Ok(not_optimal(LpStatus::Unbounded, dict.pivots));
        }
        if !dict.refactor(&canon) || !(0..dict.width).any(|j| dict.d[j] > FEAS_TOL && !dict.free[dict.nonbasic[j]]) {
            break;
        }
    }

    // Raw point and duals from the dictionary.
    let mut x = vec![0.0; n];
    for (i, &v) in dict.basic.iter().enumerate() {
        if v < n {
            x[v] = dict.rhs[i];
        }
    }
    let mut y = vec![0.0; m];
    for (j, &v) in dict.nonbasic.iter().enumerate() {
        if v >= n && v < n + m {
            y[v - n] = -dict.d[j];
        }
    }
    let raw = residuals(&canon, &x, &y);
    let (x, y) = match refine(&canon, &dict) {
        Some((rx, ry)) if residuals(&canon, &rx, &ry).worst() <= raw.worst() => (rx, ry),
        _ => (x, y),
    };
    let res = residuals(&canon, &x, &y);
    if res.worst() > BREAKDOWN_TOL {
        return Err(LpError::NumericBreakdown(res.worst()));
    }

    // Back to the original variables and rows.
    let primal: Vec<f64> = canon
        .columns
        .iter()
        .map(|cols| cols.iter().map(|&(k, f)| f * x[k]).sum())
        .collect();
    let flip = if program.sense == Sense::Minimize { -1.0 } else { 1.0 };
    let nineq = program.rows.len();
    let y: Vec<f64> = y.iter().zip(&canon.scale).map(|(v, s)| v * s).collect();
    let dual: Vec<f64> = y[..nineq].iter().map(|v| flip * v).collect();
    let eq_dual: Vec<f64> = (0..program.eq_rows.len())
        .map(|k| flip * (y[nineq + 2 * k + 1] - y[nineq + 2 * k]))
        .collect();
    let value: f64 = program.objective.iter().zip(&primal).map(|(c, x)| c * x).sum();
    let dual_value: f64 = program.bounds.iter().zip(&dual).map(|(b, y)| b * y).sum::<f64>()
        + program.eq_rhs.iter().zip(&eq_dual).map(|(d, l)| d * l).sum::<f64>();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        value,
        primal,
        dual,
        eq_dual,
        pivots: dict.pivots,
        primal_residual: res.primal,
        duality_gap: (value - dual_value).abs(),
    })
}

struct Residuals {
    primal: f64,
    dual: f64,
    gap: f64,
}

impl Residuals {
    fn worst(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

fn residuals(canon: &Canonical, x: &[f64], y: &[f64]) -> Residuals {
    let mut primal: f64 = x
        .iter()
        .zip(&canon.free)
        .filter(|(_, &f)| !f)
        .map(|(v, _)| (-v).max(0.0))
        .fold(0.0, f64::max);
    for (row, b) in canon.a.iter().zip(&canon.b) {
        let ax: f64 = row.iter().zip(x).map(|(a, x)| a * x).sum();
        primal = primal.max(ax - b);
    }
    let mut dual: f64 = y.iter().map(|v| (-v).max(0.0)).fold(0.0, f64::max);
    for (j, c) in canon.c.iter().enumerate() {
        let aty: f64 = canon.a.iter().zip(y).map(|(row, y)| row[j] * y).sum();
        dual = dual.max(if canon.free[j] { (c - aty).abs() } else { c - aty });
    }
    let cx: f64 = canon.c.iter().zip(x).map(|(c, x)| c * x).sum();
    let by: f64 = canon.b.iter().zip(y).map(|(b, y)| b * y).sum();
    Residuals {
        primal,
        dual,
        gap: (cx - by).abs(),
    }
}

/// Re-solves the final basis: basic structural columns against the rows
/// whose slacks are nonbasic (tight rows).
fn refine(canon: &Canonical, dict: &Dictionary) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = canon.c.len();
    let m = canon.b.len();
    let cols: Vec<usize> = dict.basic.iter().copied().filter(|&v| v < n).collect();
    let rows: Vec<usize> = dict
        .nonbasic
        .iter()
        .copied()
        .filter(|&v| v >= n && v < n + m)
        .map(|v| v - n)
        .collect();
    if cols.len() != rows.len() {
        return None;
    }
    let k = cols.len();
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; m];
    if k > 0 {
        let mat = DMatrix::from_fn(k, k, |i, j| canon.a[rows[i]][cols[j]]);
        let lu = mat.clone().lu();
        let xs = lu.solve(&DVector::from_fn(k, |i, _| canon.b[rows[i]]))?;
        let ys = mat.transpose().lu().solve(&DVector::from_fn(k, |j, _| canon.c[cols[j]]))?;
        for (j, &c) in cols.iter().enumerate() {
            x[c] = xs[j];
        }
        for (i, &r) in rows.iter().enumerate() {
            y[r] = ys[i];
        }
    }
    Some((x, y))
}

/// Random feasible point: a random convex combination of the optimal
/// vertices for `directions` random objectives in `[-1, 1]^n`. The program's
/// own objective and sense are ignored. Returns `None` if the program is
/// infeasible or every sampled direction is unbounded.
pub fn sample_feasible<R: Rng + ?Sized>(
    program: &LinearProgram,
    rng: &mut R,
    directions: usize,
) -> Result<Option<Vec<f64>>, LpError> {
    let mut probe = program.clone();
    probe.sense = Sense::Maximize;
    let mut vertices = Vec::with_capacity(directions);
    for _ in 0..directions.max(1) {
        probe.objective = (0..program.num_vars()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let sol = solve(&probe)?;
        match sol.status {
            LpStatus::Optimal => vertices.push(sol.primal),
            LpStatus::Infeasible => return Ok(None),
            LpStatus::Unbounded => {}
        }
    }
    if vertices.is_empty() {
        return Ok(None);
    }
    let weights: Vec<f64> = vertices.iter().map(|_| rng.gen_range(0.0..1.0) + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    let mut point = vec![0.0; program.num_vars()];
    for (v, w) in vertices.iter().zip(&weights) {
        for (p, x) in point.iter_mut().zip(v) {
            *p += w / total * x;
        }
    }
    Ok(Some(point))
}

/// Outcome of a primal/dual optimality check for `max c.x, A x <= b, x >= 0`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CertificateVerdict {
    pub pass: bool,
    /// `max(A x - b)` and `max(-x)`, clipped at 0.
    pub primal_feasibility: f64,
    /// `max(c - A^T y)` and `max(-y)`, clipped at 0.
    pub dual_feasibility: f64,
    /// `max_j |x_j (A^T y - c)_j|`.
    pub primal_slackness: f64,
    /// `max_i |y_i (b - A x)_i|`.
    pub dual_slackness: f64,
    /// `|c.x - b.y|`.
    pub gap: f64,
    /// Names of the violated conditions.
    pub failures: Vec<String>,
}

/// Checks feasibility of `x` and `y` and complementary slackness between
/// them for the canonical program `max c.x, A x <= b, x >= 0`.
pub fn check_complementary_slackness(
    a: &[Vec<f64>],
    b: &[f64],
    c: &[f64],
    x: &[f64],
    y: &[f64],
    tol: f64,
) -> CertificateVerdict {
    let mut failures = Vec::new();
    let mut primal: f64 = 0.0;
    let mut dual: f64 = 0.0;
    let mut pslack: f64 = 0.0;
    let mut dslack: f64 = 0.0;
    for (j, &xj) in x.iter().enumerate() {
        if -xj > tol {
            failures.push(format!("primal sign x[{j}] = {xj:e}"));
        }
        primal = primal.max(-xj);
    }
    for (i, row) in a.iter().enumerate() {
        let ax: f64 = row.iter().zip(x).map(|(a, x)| a * x).sum();
        let slack = b[i] - ax;
        if -slack > tol {
            failures.push(format!("primal row {i} violated by {:e}", -slack));
        }
        primal = primal.max(-slack);
        let prod = (y[i] * slack).abs();
        if prod > tol {
            failures.push(format!("dual slackness row {i}: y = {:e}, slack = {slack:e}", y[i]));
        }
        dslack = dslack.max(prod);
        if -y[i] > tol {
            failures.push(format!("dual sign y[{i}] = {:e}", y[i]));
        }
        dual = dual.max(-y[i]);
    }
    for (j, &cj) in c.iter().enumerate() {
        let aty: f64 = a.iter().zip(y).map(|(row, y)| row[j] * y).sum();
        let reduced = aty - cj;
        if -reduced > tol {
            failures.push(format!("dual column {j} violated by {:e}", -reduced));
        }
        dual = dual.max(-reduced);
        let prod = (x[j] * reduced).abs();
        if prod > tol {
            failures.push(format!("primal slackness column {j}: x = {:e}, reduced cost = {reduced:e}", x[j]));
        }
        pslack = pslack.max(prod);
    }
    let cx: f64 = c.iter().zip(x).map(|(c, x)| c * x).sum();
    let by: f64 = b.iter().zip(y).map(|(b, y)| b * y).sum();
    CertificateVerdict {
        pass: failures.is_empty(),
        primal_feasibility: primal.max(0.0),
        dual_feasibility: dual.max(0.0),
        primal_slackness: pslack,
        dual_slackness: dslack,
        gap: (cx - by).abs(),
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> LinearProgram {
        LinearProgram::new(
            Sense::Maximize,
            vec![1.0, 1.0],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![1.0, 1.0],
        )
    }

    #[test]
    fn unit_square() {
        let s = solve(&square()).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.value - 2.0).abs() < 1e-12);
        assert_eq!(s.primal, vec![1.0, 1.0]);
        assert_eq!(s.dual, vec![1.0, 1.0]);
    }

    #[test]
    fn infeasible() {
        let lp = LinearProgram::new(Sense::Maximize, vec![1.0], vec![vec![1.0]], vec![-1.0]);
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded() {
        let lp = LinearProgram::new(Sense::Maximize, vec![1.0, 0.0], vec![vec![0.0, 1.0]], vec![1.0]);
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn minimize_free_with_equality() {
        // min x + 2y s.t. x + y = 1, x <= 3, y >= -5 (as -y <= 5), both free.
        let lp = LinearProgram::new(
            Sense::Minimize,
            vec![1.0, 2.0],
            vec![vec![1.0, 0.0], vec![0.0, -1.0]],
            vec![3.0, 5.0],
        )
        .with_signs(vec![VarSign::Free, VarSign::Free])
        .with_equality(vec![1.0, 1.0], 1.0);
        let s = solve(&lp).unwrap();
        assert!((s.value - (-1.0)).abs() < 1e-12, "{s:?}");
        assert_eq!(s.primal, vec![3.0, -2.0]);
        assert!(s.duality_gap < 1e-12);
    }

    #[test]
    fn dimension_errors() {
        let mut lp = square();
        lp.bounds.pop();
        assert!(matches!(solve(&lp), Err(LpError::Dimension(_))));
    }

    #[test]
    fn dump_lists_every_row() {
        let text = square().to_tableau_text();
        assert_eq!(text.lines().filter(|l| l.starts_with("le ")).count(), 2);
        assert!(text.starts_with("sense max\nvars 2\n"));
    }
}
