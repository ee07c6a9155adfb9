//! Optimization drivers: CHSH optima over the maximal tensor product, over
//! maximally entangled states, the comparison of the two, and the LP
//! certificates showing a maximally entangled state is optimal for odd n.

use std::time::Instant;

use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::analytic::{self, big_k, n_star, AnalyticError};
use crate::bipartite::{enumerate_max_entangled, mat_to_rows, state_from_map, BipartiteError, BipartiteState};
use crate::chsh::{c_vector, chsh_indices, correlator_matrix};
use crate::lp::{
    check_complementary_slackness, sample_feasible, solve, CertificateVerdict, LinearProgram, LpError, LpStatus, Sense, VarSign,
};
use crate::theory::{unit, Mat3, Orthogonal3, Theory, Vec3};

/// Default largest n for exhaustive LP sweeps.
pub const DEFAULT_LP_CAP: usize = 15;
/// Ties in `|C|` closer than this keep the lexicographically first quadruple.
const TIE_TOL: f64 = 1e-9;
/// Largest even n (0, 4 mod 8) the sweep evaluates by ME enumeration.
pub const ME_SWEEP_LIMIT: usize = 128;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Bipartite(#[from] BipartiteError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error("LP sweep for n = {n} exceeds the cap {cap}")]
    CapExceeded { n: usize, cap: usize },
    #[error("LP finished with status {0:?}")]
    Status(LpStatus),
    #[error("certificates need an odd n >= 5, got {0}")]
    WrongResidue(usize),
}

/// Which extremum of `C` to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ChshSense {
    Max,
    Min,
}

impl ChshSense {
    fn lp(self) -> Sense {
        match self {
            ChshSense::Max => Sense::Maximize,
            ChshSense::Min => Sense::Minimize,
        }
    }
}

/// The max-tensor polytope over the nine entries of the map (row-major),
/// with one positivity row per pair of stored pure effects.
#[derive(Debug, Clone)]
pub struct MaxTensorLp {
    rows: Vec<Vec<f64>>,
}

impl MaxTensorLp {
    pub fn new(theory: &Theory) -> Self {
        let effects = theory.pure_effects();
        let mut rows = Vec::with_capacity(effects.len() * effects.len());
        for e in effects {
            for f in effects {
                // -<f, M e> <= 0
                rows.push((0..9).map(|k| -f[k / 3] * e[k % 3]).collect());
            }
        }
        MaxTensorLp { rows }
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Optimizes `sum_ij G_ij M_ij` over the polytope.
    pub fn program(&self, objective: &Mat3, sense: Sense) -> LinearProgram {
        let c: Vec<f64> = (0..9).map(|k| objective[(k / 3, k % 3)]).collect();
        let mut norm = vec![0.0; 9];
        norm[8] = 1.0;
        LinearProgram::new(sense, c, self.rows.clone(), vec![0.0; self.rows.len()])
            .with_signs(vec![VarSign::Free; 9])
            .with_equality(norm, 1.0)
    }

    /// Optimal value and maximizing map.
    pub fn optimize(&self, objective: &Mat3, sense: Sense) -> Result<(f64, Mat3), SearchError> {
        let sol = solve(&self.program(objective, sense))?;
        if sol.status != LpStatus::Optimal {
            return Err(SearchError::Status(sol.status));
        }
        let map = Mat3::from_fn(|i, j| sol.primal[3 * i + j]);
        Ok((sol.value, map))
    }
}

/// Exact optimum of `C` over the max tensor product for the observables
/// `(E(i), E(j); E(k), E(l))`.
pub fn max_chsh_fixed_obs(
    theory: &Theory,
    quad: [i64; 4],
    sense: ChshSense,
) -> Result<(f64, BipartiteState), SearchError> {
    fixed_obs_with(theory, &MaxTensorLp::new(theory), quad, sense)
}

/// The program solved by [`max_chsh_fixed_obs`], for dumping.
pub fn fixed_obs_program(theory: &Theory, quad: [i64; 4], sense: ChshSense) -> LinearProgram {
    let e = quad.map(|i| theory.pure_effect(i));
    let g = correlator_matrix(&[e[0], e[1]], &[e[2], e[3]]);
    MaxTensorLp::new(theory).program(&g, sense.lp())
}

fn fixed_obs_with(
    theory: &Theory,
    lp: &MaxTensorLp,
    quad: [i64; 4],
    sense: ChshSense,
) -> Result<(f64, BipartiteState), SearchError> {
    let e = quad.map(|i| theory.pure_effect(i));
    let g = correlator_matrix(&[e[0], e[1]], &[e[2], e[3]]);
    let (value, map) = lp.optimize(&g, sense.lp())?;
    let state = state_from_map(theory, map, 1e-8)?;
    Ok((value, state))
}

/// A random member of the max tensor product, mixed from `vertices` random
/// vertices of the polytope.
pub fn sample_max_tensor<R: Rng + ?Sized>(
    theory: &Theory,
    rng: &mut R,
    vertices: usize,
) -> Result<BipartiteState, SearchError> {
    let program = MaxTensorLp::new(theory).program(&Mat3::zeros(), Sense::Maximize);
    let x = sample_feasible(&program, rng, vertices)?.ok_or(SearchError::Status(LpStatus::Infeasible))?;
    Ok(state_from_map(theory, Mat3::from_fn(|i, j| x[3 * i + j]), 1e-8)?)
}

/// A vertex of the max-tensor polytope maximizing `sum_ij G_ij M_ij`.
pub fn max_tensor_vertex(theory: &Theory, objective: &Mat3) -> Result<BipartiteState, SearchError> {
    let (_, map) = MaxTensorLp::new(theory).optimize(objective, Sense::Maximize)?;
    Ok(state_from_map(theory, map, 1e-8)?)
}

/// Observable quadruples visited by the global search. With `reduce`, Bob's
/// second setting is fixed to `E(0)` by a rotation and his first to
/// `k <= (n-1)/2` by a reflection.
pub fn quadruples(n: usize, reduce: bool) -> Vec<[i64; 4]> {
    let n = n as i64;
    let mut out = Vec::new();
    let (kmax, lmax) = if reduce { ((n - 1) / 2, 0) } else { (n - 1, n - 1) };
    for i in 0..n {
        for j in 0..n {
            for k in 0..=kmax {
                for l in 0..=lmax {
                    out.push([i, j, k, l]);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct MeOptimum {
    pub value: f64,
    pub signed_value: f64,
    pub group_index: usize,
    pub group_label: String,
    pub quadruple: [i64; 4],
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimumReport {
    pub n: usize,
    pub best_value: f64,
    pub signed_value: f64,
    pub quadruple: [i64; 4],
    #[serde(serialize_with = "serialize_state")]
    pub state: BipartiteState,
    pub is_max_entangled: bool,
    pub me: MeOptimum,
    pub lps_solved: usize,
    pub wall_time_ms: u128,
}

fn serialize_state<S: serde::Serializer>(state: &BipartiteState, s: S) -> Result<S::Ok, S::Error> {
    state.to_json().serialize(s)
}

struct Candidate {
    value: f64,
    quad: [i64; 4],
    map: Mat3,
}

/// Better by `|C|`, ties within [`TIE_TOL`] resolved by visiting order.
fn better(a: &Candidate, b: &Candidate) -> bool {
    a.value.abs() > b.value.abs() + TIE_TOL
}

/// Largest `|C|` over the max tensor product and all pure-effect observables.
pub fn global_optimum(theory: &Theory, reduce: bool, cap: usize) -> Result<OptimumReport, SearchError> {
    let n = theory.n();
    if n > cap {
        return Err(SearchError::CapExceeded { n, cap });
    }
    let start = Instant::now();
    let lp = MaxTensorLp::new(theory);
    let quads = quadruples(n, reduce);
    let work = |quad: &[i64; 4]| -> Result<[Candidate; 2], SearchError> {
        let e = quad.map(|i| theory.pure_effect(i));
        let g = correlator_matrix(&[e[0], e[1]], &[e[2], e[3]]);
        let (hi, hi_map) = lp.optimize(&g, Sense::Maximize)?;
        let (lo, lo_map) = lp.optimize(&g, Sense::Minimize)?;
        Ok([
            Candidate {
                value: hi,
                quad: *quad,
                map: hi_map,
            },
            Candidate {
                value: lo,
                quad: *quad,
                map: lo_map,
            },
        ])
    };
    #[cfg(feature = "parallel")]
    let results: Vec<_> = {
        use rayon::prelude::*;
        quads.par_iter().map(work).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<_> = quads.iter().map(work).collect();

    let mut best: Option<Candidate> = None;
    for pair in results {
        for cand in pair? {
            if best.as_ref().is_none_or(|b| better(&cand, b)) {
                best = Some(cand);
            }
        }
    }
    let best = best.expect("at least one quadruple");
    let state = state_from_map(theory, best.map, 1e-8)?;
    let me = me_optimum(theory);
    Ok(OptimumReport {
        n,
        best_value: best.value.abs(),
        signed_value: best.value,
        quadruple: best.quad,
        is_max_entangled: (me.value - best.value.abs()).abs() <= 1e-7,
        state,
        me,
        lps_solved: 2 * quads.len(),
        wall_time_ms: start.elapsed().as_millis(),
    })
}

/// Largest `|C|` over all maximally entangled states and observables.
pub fn me_optimum(theory: &Theory) -> MeOptimum {
    let all: Vec<usize> = (0..2 * theory.n()).collect();
    me_optimum_over(theory, &all)
}

/// As [`me_optimum`], restricted to the listed group elements.
pub fn me_optimum_over(theory: &Theory, group_indices: &[usize]) -> MeOptimum {
    let n = theory.n();
    let alpha: Vec<Vec3> = (0..n as i64).map(|i| 2.0 * theory.pure_effect(i) - unit()).collect();
    let states = enumerate_max_entangled(theory);
    let kmax = (n - 1) / 2;
    let mut best = MeOptimum {
        value: f64::NEG_INFINITY,
        signed_value: 0.0,
        group_index: 0,
        group_label: String::new(),
        quadruple: [0; 4],
    };
    let mut p = vec![0.0; n * n];
    for &g in group_indices {
        let map = states[g].state.map();
        // p[k * n + i] = <alpha_k, M alpha_i>
        for i in 0..n {
            let mi = map * alpha[i];
            for k in 0..n {
                p[k * n + i] = alpha[k].dot(&mi);
            }
        }
        for i in 0..n {
            for j in 0..n {
                let l0 = p[i] - p[j];
                for k in 0..=kmax {
                    let c = p[k * n + i] + p[k * n + j] + l0;
                    if c.abs() > best.value + TIE_TOL {
                        best.value = c.abs();
                        best.signed_value = c;
                        best.group_index = g;
                        best.quadruple = [i as i64, j as i64, k as i64, 0];
                    }
                }
            }
        }
    }
    best.group_label = theory.group_label(best.group_index);
    best
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremReport {
    pub n: usize,
    pub global_value: f64,
    pub me_value: f64,
    pub pass: bool,
    pub global_quadruple: [i64; 4],
    pub me_group_label: String,
    pub me_quadruple: [i64; 4],
}

/// Compares the global optimum with the maximally entangled one.
pub fn verify_theorem(theory: &Theory, cap: usize) -> Result<TheoremReport, SearchError> {
    let report = global_optimum(theory, true, cap)?;
    Ok(theorem_from(&report, &report.me))
}

/// As [`verify_theorem`] but with a custom list of admissible ME states.
pub fn verify_theorem_over(theory: &Theory, cap: usize, group_indices: &[usize]) -> Result<TheoremReport, SearchError> {
    let report = global_optimum(theory, true, cap)?;
    let me = me_optimum_over(theory, group_indices);
    Ok(theorem_from(&report, &me))
}

fn theorem_from(report: &OptimumReport, me: &MeOptimum) -> TheoremReport {
    TheoremReport {
        n: report.n,
        global_value: report.best_value,
        me_value: me.value,
        pass: (report.best_value - me.value).abs() <= 1e-6,
        global_quadruple: report.quadruple,
        me_group_label: me.group_label.clone(),
        me_quadruple: me.quadruple,
    }
}

// ---------------------------------------------------------------------------
// Certificates
//
// Everything below works in the frame W (rotation by n_star * theta), where
// canonical vertex v sits at angle (2v - n_star) theta. A self-adjoint map
// [[a, b, c], [b, d, e], [c, e, 1]] is feasible near a maximally entangled
// map P iff <l, M P w> <= 0 for the edge normals l and pure effects w that
// P sends to a vertex where l is tight. Each such condition is linear in
// (a, b, c, d, e).

/// Which of the two certificate programs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CertificateKind {
    /// Optimality of the maximally entangled state on the winning side.
    Theorem,
    /// Domination of the opposite-sign optimum.
    Delta,
}

/// Edge normal in the frame W at the vertex with angle `j theta`, for the
/// edge towards the next (`side = 1`) or previous (`side = -1`) vertex.
/// The normal is scaled so its z-component is `-r_n`.
pub fn normal_vector(n: usize, j: i64, side: i64) -> Vec3 {
    let theta = std::f64::consts::PI / n as f64;
    let r = (1.0 / theta.cos()).sqrt();
    let a = (j + side) as f64 * theta;
    Vec3::new(a.cos() / theta.cos(), a.sin() / theta.cos(), -r)
}

/// Canonical index of the pure effect at angle `j theta` in the frame W.
pub fn effect_index_at(n: usize, j: i64) -> i64 {
    let ns = n_star(n) as i64;
    debug_assert!((j + ns).rem_euclid(2) == 0, "angle {j} theta is not a vertex");
    ((j + ns) / 2).rem_euclid(n as i64)
}

/// A constraint `coeffs . (a, b, c, d, e) <= bound`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstraintRow {
    pub coeffs: [f64; 5],
    pub bound: f64,
}

/// Expands `<normal, M me_map w> <= 0` over the symmetric parameters, where
/// `w` is the pure effect `effect_index` in the frame W, rescaled so its
/// z-component is 1. All vectors and `me_map` are in the frame W.
pub fn constraint_row(theory: &Theory, normal: &Vec3, effect_index: i64, me_map: &Mat3) -> ConstraintRow {
    let w = crate::chsh::frame_w(theory.n()).0;
    let e = w.transpose() * theory.pure_effect(effect_index);
    let v = me_map * (e / e.z);
    let (l1, l2, l3) = (normal.x, normal.y, normal.z);
    ConstraintRow {
        coeffs: [
            l1 * v.x,
            l1 * v.y + l2 * v.x,
            l1 + l3 * v.x,
            l2 * v.y,
            l2 + l3 * v.y,
        ],
        bound: -l3 * v.z,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RowSpec {
    /// Angle of the vertex in units of theta, frame W.
    pub angle: i64,
    pub side: i64,
    pub effect_index: i64,
    pub normal: [f64; 3],
    pub row: ConstraintRow,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateSpec {
    pub n: usize,
    pub residue: usize,
    pub kind: CertificateKind,
    pub sense: ChshSense,
    /// Reflection angle of the maximally entangled map in the frame W.
    pub me_angle: f64,
    pub rows: Vec<RowSpec>,
    /// Sign constraints on `(a, b, c, d)`; `e` is free.
    pub signs: [i8; 4],
    /// The maximally entangled parameter vector `(a, b, c, d, e)`.
    pub expected: [f64; 5],
}

impl CertificateSpec {
    /// The maximally entangled map in the frame W.
    pub fn me_map(&self) -> Mat3 {
        Orthogonal3::reflection(self.me_angle).0
    }

    /// The split program `max s c' x'  s.t.  Gamma' x' <= r, x' >= 0` over
    /// `(a', b', c', d', e1, e2)` with `a = s_a a'`, ..., `e = e1 - e2`,
    /// and `s = -1` for minimization.
    pub fn program(&self) -> LinearProgram {
        let s = self.column_signs();
        let split = |v: &[f64; 5]| {
            let mut out: Vec<f64> = (0..5).map(|k| s[k] * v[k]).collect();
            out.push(-v[4]);
            out
        };
        let flip = match self.sense {
            ChshSense::Max => 1.0,
            ChshSense::Min => -1.0,
        };
        let c: Vec<f64> = split(&c_vector(self.n)).into_iter().map(|x| flip * x).collect();
        let rows: Vec<Vec<f64>> = self.rows.iter().map(|r| split(&r.row.coeffs)).collect();
        let bounds = self.rows.iter().map(|r| r.row.bound).collect();
        LinearProgram::new(Sense::Maximize, c, rows, bounds)
    }

    fn column_signs(&self) -> [f64; 5] {
        let s = self.signs.map(f64::from);
        [s[0], s[1], s[2], s[3], 1.0]
    }

    /// The expected optimum in split variables.
    pub fn expected_split(&self) -> Vec<f64> {
        let s = self.column_signs();
        let mut x: Vec<f64> = (0..4).map(|k| s[k] * self.expected[k]).collect();
        x.push(self.expected[4].max(0.0));
        x.push((-self.expected[4]).max(0.0));
        x
    }
}

fn rows_for(theory: &Theory, me_angle: f64, list: &[(i64, i64)]) -> Vec<RowSpec> {
    let n = theory.n();
    let me_map = Orthogonal3::reflection(me_angle).0;
    list.iter()
        .map(|&(angle, side)| {
            let normal = normal_vector(n, angle, side);
            let effect_index = effect_index_at(n, angle);
            RowSpec {
                angle,
                side,
                effect_index,
                normal: [normal.x, normal.y, normal.z],
                row: constraint_row(theory, &normal, effect_index, &me_map),
            }
        })
        .collect()
}

fn me_vector(angle: f64) -> [f64; 5] {
    let (s, c) = angle.sin_cos();
    [c, s, 0.0, -c, 0.0]
}

fn check_cert_n(n: usize) -> Result<Theory, SearchError> {
    if n % 2 == 0 || n < 5 {
        return Err(SearchError::WrongResidue(n));
    }
    Ok(Theory::new(n).expect("n >= 5"))
}

/// The program showing the maximally entangled state is optimal.
pub fn certificate_spec(n: usize) -> Result<CertificateSpec, SearchError> {
    let theory = check_cert_n(n)?;
    let ni = n as i64;
    let theta = std::f64::consts::PI / n as f64;
    let me_angle = 2.0 * (big_k(n) - n_star(n) as i64) as f64 * theta;
    let p = ni;
    let (list, signs, sense) = match n % 8 {
        1 => {
            let m = (ni - 1) / 8;
            (vec![(0, 1), (0, -1), (4 * m, -1), (2 * (ni - 2 * m), 1)], [1, 1, 1, -1], ChshSense::Max)
        }
        7 => {
            let m = (ni - 7) / 8;
            (vec![(0, 1), (0, -1), (2 * (3 * m + 2), 1), (2 * (-m - 3), -1)], [1, 1, -1, -1], ChshSense::Max)
        }
        _ if n == 5 => (vec![(5, -1), (5, 1), (9, 1), (3, 1)], [-1, -1, -1, 1], ChshSense::Min),
        3 => {
            let m = (ni - 3) / 8;
            let a = p + 2 * (2 * m + 1);
            (vec![(a, -1), (a, 1), (p, -1), (p + 2 * (-3 * m - 1), -1)], [-1, -1, 1, 1], ChshSense::Min)
        }
        _ => {
            let m = (ni - 5) / 8;
            let a = p + 2 * (2 * m + 1);
            (vec![(a, -1), (a, 1), (p, -1), (p + 2 * (-3 * m - 2), 1)], [-1, -1, -1, 1], ChshSense::Min)
        }
    };
    Ok(CertificateSpec {
        n,
        residue: n % 8,
        kind: CertificateKind::Theorem,
        sense,
        me_angle,
        rows: rows_for(&theory, me_angle, &list),
        signs,
        expected: me_vector(me_angle),
    })
}

/// The program bounding the opposite-sign optimum near the reflected
/// maximally entangled state.
pub fn delta_certificate_spec(n: usize) -> Result<CertificateSpec, SearchError> {
    let theory = check_cert_n(n)?;
    let ni = n as i64;
    let theta = std::f64::consts::PI / n as f64;
    let me_angle = -2.0 * big_k(n) as f64 * theta;
    // (I, J, alpha_1..3, reference angle, side order, signs, sense)
    let (i, j, alpha, reference, sides, signs, sense) = match n % 8 {
        1 => (2, 2, [(ni + 1) / 2, (ni + 3) / 4, (ni - 1) / 8], 0, [1, -1], [-1, -1, 1, 1], ChshSense::Min),
        7 => (1, 1, [(-3 * ni - 3) / 8, (ni + 1) / 4, (ni - 7) / 8], 0, [1, -1], [-1, -1, -1, 1], ChshSense::Min),
        _ if n == 5 => (1, 1, [-1, 1, 2], ni, [-1, 1], [1, 1, -1, -1], ChshSense::Max),
        3 => (2, 2, [-(ni + 5) / 8, (ni - 3) / 8, (3 * ni - 1) / 8], ni, [-1, 1], [1, 1, 1, -1], ChshSense::Max),
        _ => (1, 1, [-(ni + 11) / 8, (ni + 3) / 8, (ni + 3) / 4], ni, [-1, 1], [1, 1, -1, -1], ChshSense::Max),
    };
    let list = [
        (reference + 2 * alpha[0], sides[0]),
        (reference + 2 * alpha[0], sides[1]),
        (reference + 2 * alpha[1], sides[i - 1]),
        (reference + 2 * alpha[2], sides[j - 1]),
    ];
    Ok(CertificateSpec {
        n,
        residue: n % 8,
        kind: CertificateKind::Delta,
        sense,
        me_angle,
        rows: rows_for(&theory, me_angle, &list),
        signs,
        expected: me_vector(me_angle),
    })
}

/// `(program, expected optimum in split variables)`.
pub fn build_certificate(n: usize) -> Result<(LinearProgram, Vec<f64>), SearchError> {
    let spec = certificate_spec(n)?;
    Ok((spec.program(), spec.expected_split()))
}

/// As [`build_certificate`] for the opposite-sign program.
pub fn build_delta_certificate(n: usize) -> Result<(LinearProgram, Vec<f64>), SearchError> {
    let spec = delta_certificate_spec(n)?;
    Ok((spec.program(), spec.expected_split()))
}

/// CHSH value of `(eta; E(n_star), E(0); E(n_star), E(0))` from the LP
/// objective `c . x` of a self-adjoint map.
pub fn chsh_from_objective(n: usize, cx: f64) -> f64 {
    let theta = std::f64::consts::PI / n as f64;
    let r2 = 1.0 / theta.cos();
    let big_r = 1.0 / (1.0 + r2);
    4.0 * big_r * big_r * r2.sqrt() * cx + 2.0 * (1.0 - 2.0 * big_r).powi(2)
}

#[derive(Debug, Clone, Serialize)]
pub struct ProgramVerdict {
    pub kind: CertificateKind,
    pub sense: ChshSense,
    pub lp_value: f64,
    pub expected_value: f64,
    /// CHSH value at the LP optimum.
    pub chsh_value: f64,
    pub primal: Vec<f64>,
    pub dual: Vec<f64>,
    pub dual_positive: bool,
    pub verdict: CertificateVerdict,
    pub pass: bool,
}

/// Solves `program` for its dual and checks `expected` against it.
pub fn check_certificate(
    n: usize,
    kind: CertificateKind,
    sense: ChshSense,
    program: &LinearProgram,
    expected: &[f64],
    tol: f64,
) -> Result<ProgramVerdict, SearchError> {
    let sol = solve(program)?;
    let expected_value: f64 = program.objective.iter().zip(expected).map(|(c, x)| c * x).sum();
    let (lp_value, dual) = match sol.status {
        LpStatus::Optimal => (sol.value, sol.dual),
        status => (if status == LpStatus::Unbounded { f64::INFINITY } else { f64::NAN }, vec![f64::NAN; program.rows.len()]),
    };
    let verdict = if dual.iter().all(|y| y.is_finite()) {
        check_complementary_slackness(&program.rows, &program.bounds, &program.objective, expected, &dual, tol)
    } else {
        CertificateVerdict {
            pass: false,
            primal_feasibility: f64::NAN,
            dual_feasibility: f64::NAN,
            primal_slackness: f64::NAN,
            dual_slackness: f64::NAN,
            gap: f64::NAN,
            failures: vec![format!("LP status {:?}", sol.status)],
        }
    };
    let dual_positive = dual.iter().all(|&y| y > tol);
    let flip = if sense == ChshSense::Min { -1.0 } else { 1.0 };
    let pass = verdict.pass && dual_positive && (lp_value - expected_value).abs() <= tol;
    Ok(ProgramVerdict {
        kind,
        sense,
        lp_value,
        expected_value,
        chsh_value: chsh_from_objective(n, flip * lp_value),
        primal: expected.to_vec(),
        dual,
        dual_positive,
        verdict,
        pass,
    })
}

/// The closed-form dual multipliers for `n = 1 (mod 8)`, `(y1, y2, y3, y4)`.
pub fn closed_form_dual(n: usize) -> Option<[f64; 4]> {
    if n % 8 != 1 || n < 9 {
        return None;
    }
    let theta = std::f64::consts::PI / n as f64;
    let r2 = 1.0 / theta.cos();
    let m = ((n - 1) / 8) as f64;
    let s = |k: f64| (k * theta).sin();
    let c = |k: f64| (k * theta).cos();
    let pre = 2.0 * s(2.0 * m) / (r2 * (s(2.0 * m) + s(6.0 * m)));
    let y3 = pre * (s(2.0 * m) / s(4.0 * m - 1.0) - s(6.0 * m) * c(4.0 * m) / s(1.0));
    let y4 = pre * (s(2.0 * m) / s(4.0 * m - 1.0) + s(2.0 * m) * c(4.0 * m) / s(1.0));
    let y1 = 2.0 * c(2.0 * m) - (r2 * s(2.0 * m - 1.0) * y3 + r2 * s(2.0 * m + 1.0) * y4) / (2.0 * s(2.0 * m));
    Some([y1, y1, y3, y4])
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosedFormDual {
    pub y: [f64; 4],
    pub all_positive: bool,
    pub verdict: CertificateVerdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub n: usize,
    pub h_opt: f64,
    pub theorem: ProgramVerdict,
    pub delta: ProgramVerdict,
    /// `H_n(n_star)` exceeds the opposite-sign optimum.
    pub dominates_opposite: bool,
    pub closed_form_dual: Option<ClosedFormDual>,
    pub pass: bool,
}

/// Builds and checks both certificate programs for odd `n`.
pub fn certify(n: usize, tol: f64) -> Result<CertificateReport, SearchError> {
    let spec = certificate_spec(n)?;
    let (program, expected) = (spec.program(), spec.expected_split());
    let theorem = check_certificate(n, spec.kind, spec.sense, &program, &expected, tol)?;
    let dspec = delta_certificate_spec(n)?;
    let delta = check_certificate(n, dspec.kind, dspec.sense, &dspec.program(), &dspec.expected_split(), tol)?;
    let h = analytic::h_opt(n)?.value;
    let dominates_opposite = h > delta.chsh_value.abs();
    let closed_form_dual = closed_form_dual(n).map(|y| ClosedFormDual {
        y,
        all_positive: y.iter().all(|&v| v > 0.0),
        verdict: check_complementary_slackness(&program.rows, &program.bounds, &program.objective, &expected, &y, tol),
    });
    Ok(CertificateReport {
        n,
        h_opt: h,
        pass: theorem.pass && delta.pass && dominates_opposite,
        theorem,
        delta,
        dominates_opposite,
        closed_form_dual,
    })
}

// ---------------------------------------------------------------------------
// Sweeps

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    #[serde(rename = "formula")]
    Formula,
    #[serde(rename = "LP")]
    Lp,
    #[serde(rename = "ME")]
    Me,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Formula => "formula",
            Method::Lp => "LP",
            Method::Me => "ME",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub optimum: f64,
    pub method: Method,
}

/// Optimal `|C|` per n. Odd n >= 5 and even n = 2, 6 (mod 8) use closed
/// forms; the remaining n use the LP up to `lp_cap` and then, for even n up
/// to [`ME_SWEEP_LIMIT`], the maximally entangled enumeration. Rows that
/// none of these cover are returned in the second vector.
pub fn sweep(parity: Parity, n_max: usize, lp_cap: usize) -> Result<(Vec<SweepRow>, Vec<usize>), SearchError> {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for n in 3..=n_max {
        let wanted = match parity {
            Parity::Even => n % 2 == 0,
            Parity::Odd => n % 2 == 1,
            Parity::Both => true,
        };
        if !wanted {
            continue;
        }
        let row = if n % 2 == 1 && n >= 5 {
            Some((analytic::h_opt(n)?.value, Method::Formula))
        } else if n % 8 == 2 || n % 8 == 6 {
            Some((analytic::even_optimum(n)?.1, Method::Formula))
        } else if n <= lp_cap {
            let theory = Theory::new(n).expect("n >= 3");
            Some((global_optimum(&theory, true, lp_cap)?.best_value, Method::Lp))
        } else if n % 2 == 0 && n <= ME_SWEEP_LIMIT {
            Some((me_optimum(&Theory::new(n).expect("n >= 3")).value, Method::Me))
        } else {
            None
        };
        match row {
            Some((optimum, method)) => rows.push(SweepRow { n, optimum, method }),
            None => skipped.push(n),
        }
    }
    Ok((rows, skipped))
}

/// Rows of [`sweep`] that come from closed forms only.
pub fn closed_form_sweep(parity: Parity, n_max: usize) -> Result<Vec<SweepRow>, SearchError> {
    let mut rows = Vec::new();
    for n in 5..=n_max {
        let value = match (n % 2, parity) {
            (1, Parity::Odd | Parity::Both) => analytic::h_opt(n)?.value,
            (0, Parity::Even | Parity::Both) if n % 8 == 2 || n % 8 == 6 => analytic::even_optimum(n)?.1,
            _ => continue,
        };
        rows.push(SweepRow {
            n,
            optimum: value,
            method: Method::Formula,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Reports

/// Rounds to 12 decimals so JSON output is stable across platforms.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    let r = (x * 1e12).round() / 1e12;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn round_matrix(m: &Mat3) -> [[f64; 3]; 3] {
    mat_to_rows(m).map(|row| row.map(round12))
}

/// The combined JSON report for one n.
pub fn json_report(
    theory: &Theory,
    optimum: &OptimumReport,
    theorem_pass: bool,
    certificate: Option<&CertificateReport>,
) -> Value {
    let cert = certificate.map(|c| {
        json!({
            "pass": c.pass,
            "residuals": {
                "primal_feasibility": round12(c.theorem.verdict.primal_feasibility),
                "dual_feasibility": round12(c.theorem.verdict.dual_feasibility),
                "primal_slackness": round12(c.theorem.verdict.primal_slackness),
                "dual_slackness": round12(c.theorem.verdict.dual_slackness),
                "gap": round12(c.theorem.verdict.gap),
                "delta_primal_feasibility": round12(c.delta.verdict.primal_feasibility),
                "delta_dual_feasibility": round12(c.delta.verdict.dual_feasibility),
                "delta_primal_slackness": round12(c.delta.verdict.primal_slackness),
                "delta_dual_slackness": round12(c.delta.verdict.dual_slackness),
                "delta_gap": round12(c.delta.verdict.gap),
            },
            "dual": c.theorem.dual.iter().map(|&y| round12(y)).collect::<Vec<_>>(),
            "delta_dual": c.delta.dual.iter().map(|&y| round12(y)).collect::<Vec<_>>(),
        })
    });
    json!({
        "n": theory.n(),
        "global": {
            "value": round12(optimum.signed_value),
            "quadruple": optimum.quadruple,
            "matrix": round_matrix(optimum.state.map()),
        },
        "me": {
            "value": round12(optimum.me.signed_value),
            "group_element": optimum.me.group_label,
            "quadruple": optimum.me.quadruple,
        },
        "theorem_pass": theorem_pass,
        "certificate": cert,
    })
}

/// CHSH value of an ME state for a quadruple, used by the demo and tests.
pub fn me_chsh(theory: &Theory, group_index: usize, quad: [i64; 4]) -> Option<f64> {
    let states = enumerate_max_entangled(theory);
    states.get(group_index).map(|s| chsh_indices(theory, s.state.map(), quad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduced_quadruple_count() {
        assert_eq!(quadruples(5, true).len(), 5 * 5 * 3);
        assert_eq!(quadruples(4, false).len(), 256);
    }

    #[test]
    fn rows_are_tight_at_me_point() {
        for n in [5, 7, 9, 11, 13] {
            for spec in [certificate_spec(n).unwrap(), delta_certificate_spec(n).unwrap()] {
                for r in &spec.rows {
                    let v: f64 = r.row.coeffs.iter().zip(spec.expected.iter()).map(|(a, b)| a * b).sum();
                    assert!((v - r.row.bound).abs() < 1e-12, "n={n} {:?}", spec.kind);
                }
            }
        }
    }

    #[test]
    fn round12_is_stable() {
        assert_eq!(round12(-1e-15), 0.0);
        assert_eq!(round12(0.1234567890123456), 0.123456789012);
    }
}
