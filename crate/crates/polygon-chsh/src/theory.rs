//! Regular polygon theories: vertices, pure effects, membership tests and
//! the dihedral symmetry group.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// Point of the embedding space. States live on the plane `z = 1`.
pub type Vec3 = Vector3<f64>;
/// Linear map of the embedding space.
pub type Mat3 = Matrix3<f64>;

/// Default tolerance for membership queries.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("a polygon needs at least 3 sides, got {0}")]
    TooFewSides(usize),
}

/// An orthogonal map of the embedding space fixing the z-axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orthogonal3(pub Mat3);

impl Orthogonal3 {
    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    /// Rotation about the z-axis by `angle` (counter-clockwise).
    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Orthogonal3(Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))
    }

    /// Reflection across the line at angle `angle / 2` in the xy-plane.
    pub fn reflection(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Orthogonal3(Mat3::new(c, s, 0.0, s, -c, 0.0, 0.0, 0.0, 1.0))
    }

    pub fn is_orthogonal(&self, tol: f64) -> bool {
        (self.0 * self.0.transpose() - Mat3::identity()).amax() <= tol
    }
}

/// A two-outcome observable `{effect0, effect1}` with `effect0 + effect1 = u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observable {
    pub effect0: Vec3,
    pub effect1: Vec3,
    /// Set when the observable is `E_n(i) = {e_n(i), u - e_n(i)}`.
    pub index: Option<usize>,
}

impl Observable {
    /// Builds `{e, u - e}` from an arbitrary effect.
    pub fn from_effect(effect: Vec3) -> Self {
        Observable {
            effect0: effect,
            effect1: unit() - effect,
            index: None,
        }
    }

    pub fn effect(&self, outcome: usize) -> Vec3 {
        if outcome == 0 {
            self.effect0
        } else {
            self.effect1
        }
    }
}

/// The unit effect `u = (0, 0, 1)`.
pub fn unit() -> Vec3 {
    Vec3::new(0.0, 0.0, 1.0)
}

/// A regular polygon theory with `n` sides.
#[derive(Debug, Clone)]
pub struct Theory {
    n: usize,
    r: f64,
    theta: f64,
    pure_states: Vec<Vec3>,
    pure_effects: Vec<Vec3>,
    t: Mat3,
}

/// Builds the theory of the regular `n`-gon.
pub fn build_theory(n: usize) -> Result<Theory, TheoryError> {
    Theory::new(n)
}

impl Theory {
    pub fn new(n: usize) -> Result<Self, TheoryError> {
        if n < 3 {
            return Err(TheoryError::TooFewSides(n));
        }
        let theta = PI / n as f64;
        let r = (1.0 / theta.cos()).sqrt();
        let pure_states = (0..n)
            .map(|i| {
                let a = 2.0 * theta * i as f64;
                Vec3::new(r * a.cos(), r * a.sin(), 1.0)
            })
            .collect();
        let mut pure_effects: Vec<Vec3> = (0..n).map(|i| raw_effect(n, r, theta, i)).collect();
        if n % 2 == 1 {
            let complements: Vec<Vec3> = pure_effects.iter().map(|e| unit() - e).collect();
            pure_effects.extend(complements);
        }
        let t = if n % 2 == 0 {
            let (s, c) = theta.sin_cos();
            Mat3::new(c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0)
        } else {
            Mat3::identity()
        };
        Ok(Theory {
            n,
            r,
            theta,
            pure_states,
            pure_effects,
            t,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Circumradius `r_n = sqrt(1 / cos(pi/n))`.
    pub fn r(&self) -> f64 {
        self.r
    }

    /// `theta_n = pi / n`.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `R_n = 1 / (1 + r_n^2)`, the scale of odd-n effects.
    pub fn big_r(&self) -> f64 {
        1.0 / (1.0 + self.r * self.r)
    }

    pub fn is_odd(&self) -> bool {
        self.n % 2 == 1
    }

    pub fn pure_states(&self) -> &[Vec3] {
        &self.pure_states
    }

    /// Generators of the effect cone: `e_n(i)` for even n, `e_n(i)` then
    /// `u - e_n(i)` for odd n.
    pub fn pure_effects(&self) -> &[Vec3] {
        &self.pure_effects
    }

    pub fn unit(&self) -> Vec3 {
        unit()
    }

    pub fn max_mixed(&self) -> Vec3 {
        unit()
    }

    fn wrap(&self, i: i64) -> usize {
        i.rem_euclid(self.n as i64) as usize
    }

    /// Vertex `omega_n(i)`, index taken mod n.
    pub fn pure_state(&self, i: i64) -> Vec3 {
        self.pure_states[self.wrap(i)]
    }

    /// Pure effect `e_n(i)`, index taken mod n.
    pub fn pure_effect(&self, i: i64) -> Vec3 {
        self.pure_effects[self.wrap(i)]
    }

    /// `E_n(i) = {e_n(i), u - e_n(i)}`.
    pub fn binary_observable(&self, i: i64) -> Observable {
        let k = self.wrap(i);
        let e = self.pure_effects[k];
        Observable {
            effect0: e,
            effect1: unit() - e,
            index: Some(k),
        }
    }

    /// Membership in the state space: `z = 1` and every edge half-plane.
    pub fn contains_state(&self, v: &Vec3, tol: f64) -> bool {
        if (v.z - 1.0).abs() > tol {
            return false;
        }
        let inradius = self.r * self.theta.cos();
        (0..self.n).all(|i| {
            let a = (2 * i + 1) as f64 * self.theta;
            v.x * a.cos() + v.y * a.sin() <= inradius + tol
        })
    }

    /// Membership in the effect space: `<v, omega> in [0, 1]` on every vertex.
    pub fn contains_effect(&self, v: &Vec3, tol: f64) -> bool {
        self.pure_states.iter().all(|w| {
            let p = v.dot(w);
            p >= -tol && p <= 1.0 + tol
        })
    }

    /// The dihedral group: rotations by `2 pi k / n`, then the reflections
    /// sending vertex `i` to vertex `k - i`.
    pub fn symmetry_group(&self) -> Vec<Orthogonal3> {
        let step = 2.0 * self.theta;
        let rotations = (0..self.n).map(|k| Orthogonal3::rotation(step * k as f64));
        let reflections = (0..self.n).map(|k| Orthogonal3::reflection(step * k as f64));
        rotations.chain(reflections).collect()
    }

    /// Index of `g` in [`Theory::symmetry_group`], if it is an element.
    pub fn group_index(&self, g: &Mat3, tol: f64) -> Option<usize> {
        self.symmetry_group()
            .iter()
            .position(|h| (h.0 - g).amax() <= tol)
    }

    /// Human-readable name of a group element index.
    pub fn group_label(&self, index: usize) -> String {
        if index < self.n {
            format!("rotation {index}")
        } else {
            format!("reflection {}", index - self.n)
        }
    }

    /// The order isomorphism `T_n` from the effect cone onto the state cone.
    pub fn order_isomorphism(&self) -> Orthogonal3 {
        Orthogonal3(self.t)
    }

    /// `T_n e_n(i) = c_n omega_n(i)` with this `c_n`.
    pub fn isomorphism_scale(&self) -> f64 {
        if self.is_odd() {
            self.big_r()
        } else {
            0.5
        }
    }
}

fn raw_effect(n: usize, r: f64, theta: f64, i: usize) -> Vec3 {
    if n % 2 == 0 {
        let a = (2 * i + 1) as f64 * theta;
        0.5 * Vec3::new(r * a.cos(), r * a.sin(), 1.0)
    } else {
        let a = 2.0 * theta * i as f64;
        Vec3::new(r * a.cos(), r * a.sin(), 1.0) / (1.0 + r * r)
    }
}
