//! CHSH arithmetic: probability tables, the game predicate, the CHSH value
//! and winning probability, and the closed form for self-adjoint states of
//! odd polygons.
//!
//! Outcomes are labelled 0 and 1 throughout; the correlator weight of an
//! outcome pair is `(-1)^(a xor b)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::n_star;
use crate::bipartite::{AssemblagePair, BipartiteState};
use crate::theory::{unit, Mat3, Observable, Orthogonal3, Theory, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChshError {
    #[error("negative probability {value} at (a={a}, b={b}, s={s}, t={t})")]
    InvalidProbability {
        value: f64,
        a: usize,
        b: usize,
        s: usize,
        t: usize,
    },
    #[error("the symmetric closed form needs an odd n >= 5, got {0}")]
    NotOdd(usize),
}

/// `V(a, b | s, t) = [a xor b == s * t]`.
pub fn game_predicate(a: usize, b: usize, s: usize, t: usize) -> u8 {
    u8::from((a ^ b) == (s & t))
}

/// The quintuple `(eta; A_0, A_1; B_0, B_1)`.
#[derive(Debug, Clone)]
pub struct ChshSetting {
    pub state: BipartiteState,
    pub a: [Observable; 2],
    pub b: [Observable; 2],
}

impl ChshSetting {
    pub fn new(state: BipartiteState, a0: Observable, a1: Observable, b0: Observable, b1: Observable) -> Self {
        ChshSetting {
            state,
            a: [a0, a1],
            b: [b0, b1],
        }
    }

    /// Observables `(E(i), E(j); E(k), E(l))`.
    pub fn from_indices(theory: &Theory, state: BipartiteState, quad: [i64; 4]) -> Self {
        let obs = quad.map(|i| theory.binary_observable(i));
        ChshSetting::new(state, obs[0], obs[1], obs[2], obs[3])
    }
}

/// `p[a][b][s][t]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbTable {
    pub p: [[[[f64; 2]; 2]; 2]; 2],
}

impl ProbTable {
    pub fn get(&self, a: usize, b: usize, s: usize, t: usize) -> f64 {
        self.p[a][b][s][t]
    }

    /// Builds a table from a function of `(a, b, s, t)`.
    pub fn from_fn(f: impl Fn(usize, usize, usize, usize) -> f64) -> Self {
        let mut p = [[[[0.0; 2]; 2]; 2]; 2];
        for (a, pa) in p.iter_mut().enumerate() {
            for (b, pb) in pa.iter_mut().enumerate() {
                for (s, ps) in pb.iter_mut().enumerate() {
                    for (t, x) in ps.iter_mut().enumerate() {
                        *x = f(a, b, s, t);
                    }
                }
            }
        }
        ProbTable { p }
    }

    /// `E(st) = sum_{a,b} (-1)^(a xor b) p(a, b | s, t)`.
    pub fn correlator(&self, s: usize, t: usize) -> f64 {
        let mut e = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let w = if a == b { 1.0 } else { -1.0 };
                e += w * self.p[a][b][s][t];
            }
        }
        e
    }

    /// Rows indexed by `2s + t`, columns by `2a + b`.
    pub fn to_matrix(&self) -> [[f64; 4]; 4] {
        let mut m = [[0.0; 4]; 4];
        for s in 0..2 {
            for t in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        m[2 * s + t][2 * a + b] = self.p[a][b][s][t];
                    }
                }
            }
        }
        m
    }

    pub fn from_matrix(m: &[[f64; 4]; 4]) -> Self {
        ProbTable::from_fn(|a, b, s, t| m[2 * s + t][2 * a + b])
    }

    /// Largest deviation from normalization and from no-signaling.
    pub fn consistency_gap(&self) -> f64 {
        let mut gap: f64 = 0.0;
        for s in 0..2 {
            for t in 0..2 {
                let total: f64 = (0..2).flat_map(|a| (0..2).map(move |b| (a, b))).map(|(a, b)| self.p[a][b][s][t]).sum();
                gap = gap.max((total - 1.0).abs());
            }
        }
        for x in 0..2 {
            for s in 0..2 {
                let alice = |t: usize| self.p[x][0][s][t] + self.p[x][1][s][t];
                gap = gap.max((alice(0) - alice(1)).abs());
            }
            for t in 0..2 {
                let bob = |s: usize| self.p[0][x][s][t] + self.p[1][x][s][t];
                gap = gap.max((bob(0) - bob(1)).abs());
            }
        }
        gap
    }
}

impl Serialize for ProbTable {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_matrix().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ProbTable {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let m = <[[f64; 4]; 4]>::deserialize(deserializer)?;
        Ok(ProbTable::from_matrix(&m))
    }
}

/// `p(a, b | s, t) = <B_t^b, eta_hat(A_s^a)>`.
pub fn prob_table(setting: &ChshSetting) -> Result<ProbTable, ChshError> {
    let table = ProbTable::from_fn(|a, b, s, t| {
        let bob = setting.state.apply(&setting.a[s].effect(a));
        setting.b[t].effect(b).dot(&bob)
    });
    for a in 0..2 {
        for b in 0..2 {
            for s in 0..2 {
                for t in 0..2 {
                    let value = table.p[a][b][s][t];
                    if value < -1e-9 {
                        return Err(ChshError::InvalidProbability { value, a, b, s, t });
                    }
                }
            }
        }
    }
    Ok(table)
}

/// `C = E(00) + E(01) + E(10) - E(11)`.
pub fn chsh_value(table: &ProbTable) -> f64 {
    table.correlator(0, 0) + table.correlator(0, 1) + table.correlator(1, 0) - table.correlator(1, 1)
}

/// `P_win = (1/4) sum V(a, b | s, t) p(a, b | s, t)`.
pub fn winning_probability(table: &ProbTable) -> f64 {
    let mut total = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            for s in 0..2 {
                for t in 0..2 {
                    total += f64::from(game_predicate(a, b, s, t)) * table.p[a][b][s][t];
                }
            }
        }
    }
    total / 4.0
}

/// `C = 4 (2 P_win - 1)`.
pub fn chsh_from_win(p_win: f64) -> f64 {
    4.0 * (2.0 * p_win - 1.0)
}

/// Inverse of [`chsh_from_win`].
pub fn win_from_chsh(c: f64) -> f64 {
    (c / 4.0 + 1.0) / 2.0
}

/// Effects `[s][a]` with `X_s^a = (1/2) sum_{t,b} V(a, b | s, t) Y_t^b`.
///
/// The predicate is symmetric under `(a, s) <-> (b, t)`, so the same
/// construction gives Bob's `Q` from his observables and Alice's `R` from hers.
fn averaged_effects(obs: &[Observable; 2]) -> [[Vec3; 2]; 2] {
    let mut out = [[Vec3::zeros(); 2]; 2];
    for (s, row) in out.iter_mut().enumerate() {
        for (a, x) in row.iter_mut().enumerate() {
            for (t, o) in obs.iter().enumerate() {
                for b in 0..2 {
                    if game_predicate(a, b, s, t) == 1 {
                        *x += 0.5 * o.effect(b);
                    }
                }
            }
        }
    }
    out
}

/// `Q_s^a`, indexed `[s][a]`; each `Q_s` is an observable of Bob.
pub fn q_effects(b0: &Observable, b1: &Observable) -> [[Vec3; 2]; 2] {
    averaged_effects(&[*b0, *b1])
}

/// `R_t^b`, indexed `[t][b]`; each `R_t` is an observable of Alice.
pub fn r_effects(a0: &Observable, a1: &Observable) -> [[Vec3; 2]; 2] {
    averaged_effects(&[*a0, *a1])
}

/// `P_win = (1/2) sum_{s,a} p(a|s) <Q_s^a, omega_s^a>`.
pub fn win_via_assemblage(pair: &AssemblagePair, q: &[[Vec3; 2]; 2]) -> f64 {
    let mut total = 0.0;
    for (s, ens) in pair.assemblages.iter().enumerate() {
        for a in 0..2 {
            if ens.degenerate[a] {
                continue;
            }
            total += ens.probs[a] * q[s][a].dot(&ens.states[a]);
        }
    }
    total / 2.0
}

/// Winning probability through Bob's `Q` effects.
pub fn win_q_route(setting: &ChshSetting) -> f64 {
    let q = q_effects(&setting.b[0], &setting.b[1]);
    let mut total = 0.0;
    for s in 0..2 {
        for a in 0..2 {
            total += q[s][a].dot(&setting.state.apply(&setting.a[s].effect(a)));
        }
    }
    total / 2.0
}

/// Winning probability through Alice's `R` effects and the transposed map.
pub fn win_r_route(setting: &ChshSetting) -> f64 {
    let r = r_effects(&setting.a[0], &setting.a[1]);
    let transposed = crate::bipartite::transpose_state(&setting.state);
    let mut total = 0.0;
    for t in 0..2 {
        for b in 0..2 {
            total += r[t][b].dot(&transposed.apply(&setting.b[t].effect(b)));
        }
    }
    total / 2.0
}

/// Matrix `G` with `C = sum_ij M_ij G_ij` for every map `M`.
///
/// Follows from `E(st) = <B_t^0 - B_t^1, M (A_s^0 - A_s^1)>`.
pub fn correlator_matrix(a: &[Vec3; 2], b: &[Vec3; 2]) -> Mat3 {
    let alpha = a.map(|e| 2.0 * e - unit());
    let beta = b.map(|e| 2.0 * e - unit());
    let mut g = Mat3::zeros();
    for s in 0..2 {
        for t in 0..2 {
            let sign = if s == 1 && t == 1 { -1.0 } else { 1.0 };
            g += sign * beta[t] * alpha[s].transpose();
        }
    }
    g
}

/// CHSH value of a map with binary observables given by their 0-effects.
pub fn chsh_of_map(map: &Mat3, a: &[Vec3; 2], b: &[Vec3; 2]) -> f64 {
    map.component_mul(&correlator_matrix(a, b)).sum()
}

/// CHSH value of `(eta; E(i), E(j); E(k), E(l))`.
pub fn chsh_indices(theory: &Theory, map: &Mat3, quad: [i64; 4]) -> f64 {
    let e = quad.map(|i| theory.pure_effect(i));
    chsh_of_map(map, &[e[0], e[1]], &[e[2], e[3]])
}

/// Parameters `(a, b, c, d, e)` of a self-adjoint map
/// `[[a, b, c], [b, d, e], [c, e, 1]]` written in the frame `W`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub n: usize,
}

impl SymmetricParams {
    pub fn from_array(n: usize, x: [f64; 5]) -> Self {
        SymmetricParams {
            a: x[0],
            b: x[1],
            c: x[2],
            d: x[3],
            e: x[4],
            n,
        }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.a, self.b, self.c, self.d, self.e]
    }

    /// Reads the parameters off a map given in the frame `W`.
    pub fn from_frame_map(n: usize, m: &Mat3) -> Self {
        SymmetricParams::from_array(n, [m[(0, 0)], m[(0, 1)], m[(0, 2)], m[(1, 1)], m[(1, 2)]])
    }

    /// The map in the frame `W`.
    pub fn frame_map(&self) -> Mat3 {
        Mat3::new(self.a, self.b, self.c, self.b, self.d, self.e, self.c, self.e, 1.0)
    }

    /// The map in the canonical frame, `W M_W W^T`.
    pub fn canonical_map(&self) -> Mat3 {
        let w = frame_w(self.n).0;
        w * self.frame_map() * w.transpose()
    }
}

/// The rotation `W` by `n_star * theta_n`; frame coordinates `x_W` relate to
/// canonical ones by `x = W x_W`.
pub fn frame_w(n: usize) -> Orthogonal3 {
    let theta = std::f64::consts::PI / n as f64;
    Orthogonal3::rotation(n_star(n) as f64 * theta)
}

/// The five-component coefficient vector of the closed form.
pub fn c_vector(n: usize) -> [f64; 5] {
    let theta = std::f64::consts::PI / n as f64;
    let r = (1.0 / theta.cos()).sqrt();
    let a = n_star(n) as f64 * theta;
    [
        r * (1.0 + (2.0 * a).cos()),
        2.0 * r * (2.0 * a).sin(),
        2.0 * (1.0 - r * r) * a.cos(),
        r * (-1.0 + (2.0 * a).cos()),
        2.0 * (1.0 - r * r) * a.sin(),
    ]
}

/// CHSH value of `(eta; E(n_star), E(0); E(n_star), E(0))` for the
/// self-adjoint map `eta`: `4 R^2 r (c . x) + 2 (1 - 2R)^2`.
pub fn symmetric_chsh(params: &SymmetricParams) -> Result<f64, ChshError> {
    let n = params.n;
    if n % 2 == 0 || n < 5 {
        return Err(ChshError::NotOdd(n));
    }
    let theta = std::f64::consts::PI / n as f64;
    let r2 = 1.0 / theta.cos();
    let big_r = 1.0 / (1.0 + r2);
    let c = c_vector(n);
    let x = params.to_array();
    let dot: f64 = c.iter().zip(x.iter()).map(|(p, q)| p * q).sum();
    Ok(4.0 * big_r * big_r * r2.sqrt() * dot + 2.0 * (1.0 - 2.0 * big_r).powi(2))
}
