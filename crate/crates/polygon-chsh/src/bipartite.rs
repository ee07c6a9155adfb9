//! Bipartite states of the maximal tensor product, stored as induced maps.
//!
//! A state `eta` is represented by the 3x3 map `M` with
//! `<f, M e> = <e (x) f, eta>`: Alice's effect `e` goes in, Bob's
//! unnormalized conditional state comes out.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{solve, LinearProgram, LpError, LpStatus, Sense};
use crate::theory::{Mat3, Observable, Orthogonal3, Theory, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BipartiteError {
    #[error("state is not normalized: <u, M u> = {0}")]
    NotNormalized(f64),
    #[error("state is not positive on product effects: min <f, M e> = {0}")]
    NotPositive(f64),
    #[error("invalid mixture: {0}")]
    BadMixture(String),
    #[error("map is not an element of the polygon symmetry group")]
    NotSymmetry,
    #[error("state has n = {state}, theory has n = {theory}")]
    SideMismatch { state: usize, theory: usize },
}

/// A bipartite state in map form.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteState {
    map: Mat3,
    n: usize,
    validated: bool,
}

impl BipartiteState {
    pub fn map(&self) -> &Mat3 {
        &self.map
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// True when the map passed the max-tensor membership check.
    pub fn is_validated(&self) -> bool {
        self.validated
    }

    /// Bob's unnormalized state after Alice registers effect `e`.
    pub fn apply(&self, e: &Vec3) -> Vec3 {
        self.map * e
    }

    /// Row-major 9-vector over (Bob basis) x (Alice basis).
    pub fn to_vector(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                out[3 * i + j] = self.map[(i, j)];
            }
        }
        out
    }

    pub fn to_json(&self) -> StateJson {
        StateJson {
            n: self.n,
            map: mat_to_rows(&self.map),
        }
    }
}

/// JSON form `{"n": int, "map": [[f64; 3]; 3]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateJson {
    pub n: usize,
    pub map: [[f64; 3]; 3],
}

pub fn mat_to_rows(m: &Mat3) -> [[f64; 3]; 3] {
    let mut rows = [[0.0; 3]; 3];
    for (i, row) in rows.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = m[(i, j)];
        }
    }
    rows
}

pub fn rows_to_mat(rows: &[[f64; 3]; 3]) -> Mat3 {
    Mat3::from_fn(|i, j| rows[i][j])
}

/// Smallest value of `<f, M e>` over pairs of stored pure effects.
pub fn min_pairing(theory: &Theory, map: &Mat3) -> f64 {
    let effects = theory.pure_effects();
    let mut min = f64::INFINITY;
    for e in effects {
        let me = map * e;
        for f in effects {
            min = min.min(f.dot(&me));
        }
    }
    min
}

/// Normalization `<u, M u>`, the (z, z) entry.
pub fn normalization(map: &Mat3) -> f64 {
    map[(2, 2)]
}

/// Max-tensor membership: normalized and positive on all pure-effect pairs.
pub fn in_max_tensor(theory: &Theory, map: &Mat3, tol: f64) -> bool {
    (normalization(map) - 1.0).abs() <= tol && min_pairing(theory, map) >= -tol
}

/// Validates `map` as a max-tensor state.
pub fn state_from_map(theory: &Theory, map: Mat3, tol: f64) -> Result<BipartiteState, BipartiteError> {
    let norm = normalization(&map);
    if !norm.is_finite() || (norm - 1.0).abs() > tol || map.iter().any(|x| !x.is_finite()) {
        return Err(BipartiteError::NotNormalized(norm));
    }
    let min = min_pairing(theory, &map);
    if min < -tol {
        return Err(BipartiteError::NotPositive(min));
    }
    Ok(BipartiteState {
        map,
        n: theory.n(),
        validated: true,
    })
}

/// Reads a state from its JSON form, checking it against `theory`.
pub fn state_from_json(theory: &Theory, json: &StateJson, tol: f64) -> Result<BipartiteState, BipartiteError> {
    if json.n != theory.n() {
        return Err(BipartiteError::SideMismatch {
            state: json.n,
            theory: theory.n(),
        });
    }
    state_from_map(theory, rows_to_mat(&json.map), tol)
}

/// The separable state `sum_i p_i omega^A_i (x) omega^B_i`, whose map is
/// `e -> sum_i p_i <e, omega^A_i> omega^B_i`.
pub fn separable_state(theory: &Theory, mixture: &[(f64, Vec3, Vec3)]) -> Result<BipartiteState, BipartiteError> {
    const TOL: f64 = 1e-9;
    if mixture.is_empty() {
        return Err(BipartiteError::BadMixture("empty mixture".into()));
    }
    let total: f64 = mixture.iter().map(|m| m.0).sum();
    if mixture.iter().any(|m| !(m.0 >= 0.0)) || (total - 1.0).abs() > TOL {
        return Err(BipartiteError::BadMixture(format!("weights must be >= 0 and sum to 1 (sum = {total})")));
    }
    let mut map = Mat3::zeros();
    for (k, (w, a, b)) in mixture.iter().enumerate() {
        if !theory.contains_state(a, TOL) || !theory.contains_state(b, TOL) {
            return Err(BipartiteError::BadMixture(format!("term {k} has a state outside the polygon")));
        }
        map += *w * b * a.transpose();
    }
    Ok(BipartiteState {
        map,
        n: theory.n(),
        validated: true,
    })
}

/// Separable mixture given by vertex indices `(weight, i_A, i_B)`.
pub fn separable_from_vertices(theory: &Theory, terms: &[(f64, i64, i64)]) -> Result<BipartiteState, BipartiteError> {
    let mixture: Vec<_> = terms
        .iter()
        .map(|&(w, a, b)| (w, theory.pure_state(a), theory.pure_state(b)))
        .collect();
    separable_state(theory, &mixture)
}

/// A separable decomposition found by [`separable_decomposition`]: terms
/// `(weight, i_A, i_B)` over pure-state pairs and the residual
/// `max |M - sum_k w_k omega^B_k omega^A_k^T|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    pub terms: Vec<(f64, i64, i64)>,
    pub residual: f64,
}

/// Writes the state as a mixture of products of pure states by solving a
/// feasibility LP over the `n^2` weights. `Ok(None)` means no such mixture
/// exists (the state is entangled).
pub fn separable_decomposition(
    theory: &Theory,
    state: &BipartiteState,
) -> Result<Option<Decomposition>, LpError> {
    let n = theory.n() as i64;
    let pairs: Vec<(i64, i64)> = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).collect();
    let products: Vec<Mat3> = pairs
        .iter()
        .map(|&(a, b)| theory.pure_state(b) * theory.pure_state(a).transpose())
        .collect();
    let mut program = LinearProgram::new(Sense::Maximize, vec![0.0; pairs.len()], Vec::new(), Vec::new());
    for k in 0..9 {
        let (i, j) = (k / 3, k % 3);
        program = program.with_equality(products.iter().map(|p| p[(i, j)]).collect(), state.map[(i, j)]);
    }
    let sol = solve(&program)?;
    if sol.status != LpStatus::Optimal {
        return Ok(None);
    }
    let mut rebuilt = Mat3::zeros();
    let mut terms = Vec::new();
    for ((&(a, b), p), &w) in pairs.iter().zip(&products).zip(&sol.primal) {
        rebuilt += w * p;
        if w > 0.0 {
            terms.push((w, a, b));
        }
    }
    let residual = (rebuilt - state.map).amax();
    Ok(Some(Decomposition { terms, residual }))
}

/// The maximally entangled state with map `T_n g`.
pub fn max_entangled(theory: &Theory, g: &Orthogonal3) -> Result<BipartiteState, BipartiteError> {
    if theory.group_index(g.matrix(), 1e-9).is_none() {
        return Err(BipartiteError::NotSymmetry);
    }
    Ok(me_unchecked(theory, g))
}

fn me_unchecked(theory: &Theory, g: &Orthogonal3) -> BipartiteState {
    BipartiteState {
        map: theory.order_isomorphism().0 * g.0,
        n: theory.n(),
        validated: true,
    }
}

/// A maximally entangled state together with its group-element index.
#[derive(Debug, Clone)]
pub struct MeState {
    pub group_index: usize,
    pub state: BipartiteState,
}

/// All `2n` maximally entangled states, in symmetry-group order.
pub fn enumerate_max_entangled(theory: &Theory) -> Vec<MeState> {
    theory
        .symmetry_group()
        .iter()
        .enumerate()
        .map(|(group_index, g)| MeState {
            group_index,
            state: me_unchecked(theory, g),
        })
        .collect()
}

/// Swaps Alice and Bob: the map is transposed.
pub fn transpose_state(state: &BipartiteState) -> BipartiteState {
    BipartiteState {
        map: state.map.transpose(),
        n: state.n,
        validated: state.validated,
    }
}

/// Bob's conditional ensemble for one of Alice's settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Assemblage {
    pub probs: [f64; 2],
    pub states: [Vec3; 2],
    /// `degenerate[a]` is set when `p(a) = 0`; the state is then `omega_M`.
    pub degenerate: [bool; 2],
    pub setting: usize,
}

impl Assemblage {
    pub fn average(&self) -> Vec3 {
        self.probs[0] * self.states[0] + self.probs[1] * self.states[1]
    }
}

/// `p(a) = <u, M A^a>`, `omega^a = M A^a / p(a)`.
pub fn conditional_assemblage(state: &BipartiteState, obs: &Observable) -> Assemblage {
    conditional_assemblage_for(state, obs, 0)
}

pub fn conditional_assemblage_for(state: &BipartiteState, obs: &Observable, setting: usize) -> Assemblage {
    const DEGENERATE: f64 = 1e-14;
    let mut probs = [0.0; 2];
    let mut states = [Vec3::new(0.0, 0.0, 1.0); 2];
    let mut degenerate = [false; 2];
    for a in 0..2 {
        let v = state.apply(&obs.effect(a));
        probs[a] = v.z;
        if v.z.abs() <= DEGENERATE {
            degenerate[a] = true;
        } else {
            states[a] = v / v.z;
        }
    }
    Assemblage {
        probs,
        states,
        degenerate,
        setting,
    }
}

/// The two assemblages for Alice's settings `s = 0, 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssemblagePair {
    pub assemblages: [Assemblage; 2],
    pub average: Vec3,
}

impl AssemblagePair {
    pub fn new(state: &BipartiteState, a0: &Observable, a1: &Observable) -> Self {
        let first = conditional_assemblage_for(state, a0, 0);
        let second = conditional_assemblage_for(state, a1, 1);
        let average = first.average();
        AssemblagePair {
            assemblages: [first, second],
            average,
        }
    }

    /// Distance between the two setting averages.
    pub fn signaling_gap(&self) -> f64 {
        (self.assemblages[0].average() - self.assemblages[1].average()).amax()
    }
}
