//! Closed-form bounds: the even-n bound, the boundary function of odd
//! polygons, the `beta` coefficients and the `G`/`H` tables, and the
//! optimal maximally-entangled value `H_n(n_star)`.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("n = {0} must be odd and at least 5")]
    NotOdd(usize),
    #[error("no closed form for n = {0}: only n = 2, 6 (mod 8) are covered, use the LP path")]
    WrongResidue(usize),
    #[error("index {index} outside 0..={max}")]
    IndexOutOfRange { index: i64, max: i64 },
    #[error("x = {x} outside [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },
}

fn constants(n: usize) -> (f64, f64, f64) {
    let theta = PI / n as f64;
    let r = (1.0 / theta.cos()).sqrt();
    let big_r = 1.0 / (1.0 + r * r);
    (theta, r, big_r)
}

fn check_odd(n: usize) -> Result<(), AnalyticError> {
    if n % 2 == 1 && n >= 5 {
        Ok(())
    } else {
        Err(AnalyticError::NotOdd(n))
    }
}

/// `(r_n^2 / 2) [cos((2l+1) theta) + cos(theta) sin((2l+1) theta)]`, a bound
/// on `2 P_win - 1`; the CHSH bound is four times this.
pub fn even_bound(n: usize, l: usize) -> Result<f64, AnalyticError> {
    if n % 8 != 2 && n % 8 != 6 {
        return Err(AnalyticError::WrongResidue(n));
    }
    let max = (n - 2) / 4;
    if l > max {
        return Err(AnalyticError::IndexOutOfRange {
            index: l as i64,
            max: max as i64,
        });
    }
    let theta = PI / n as f64;
    let phase = (2 * l + 1) as f64 * theta;
    // r^2 cos(theta) = 1; this form makes (6, 0) round to exactly 3/4.
    Ok((phase.cos() / theta.cos() + phase.sin()) / 2.0)
}

/// `(argmax_l, 4 max_l even_bound(n, l))`; the first maximizer is kept.
pub fn even_optimum(n: usize) -> Result<(usize, f64), AnalyticError> {
    let mut best = (0, f64::NEG_INFINITY);
    for l in 0..=(n - 2) / 4 {
        let v = 4.0 * even_bound(n, l)?;
        if v > best.1 + 1e-15 {
            best = (l, v);
        }
    }
    Ok(best)
}

/// The alternative closed-form maximum of [`even_bound`] over `l`, with the
/// index where it is claimed to be attained.
///
/// This expression is exactly twice the direct maximum for every tested
/// `n`; it is kept for comparison only.
pub fn alternative_even_bound(n: usize) -> Result<(usize, f64), AnalyticError> {
    let (_, r, _) = constants(n);
    let nf = n as f64;
    let p = (nf + 2.0) / (4.0 * nf) * PI;
    let q = (nf + 6.0) / (4.0 * nf) * PI;
    match n % 8 {
        2 => Ok(((n - 2) / 8, r * r / 2.0 * (3.0 * p.cos() + q.sin()))),
        6 => Ok(((n - 6) / 8, r * r / 2.0 * (3.0 * p.sin() + q.cos()))),
        _ => Err(AnalyticError::WrongResidue(n)),
    }
}

/// The optimal separation of Bob's settings: `(n-1)/4` for `n = 1, 5 (mod 8)`,
/// `(n+1)/4` for `n = 3, 7 (mod 8)`. Defined for odd `n`; 0 otherwise.
pub fn n_star(n: usize) -> usize {
    match n % 8 {
        1 | 5 => (n - 1) / 4,
        3 | 7 => (n + 1) / 4,
        _ => 0,
    }
}

/// Index of the boundary segment containing `x = 0`.
pub fn m0(n: usize) -> usize {
    match n % 8 {
        1 | 5 => (n - 1) / 4,
        _ => (n - 3) / 4,
    }
}

/// Rotation index `K_n` of the optimal maximally entangled state.
pub fn big_k(n: usize) -> i64 {
    let n = n as i64;
    match n % 8 {
        1 => (3 * n - 3) / 8,
        3 => -(n - 3) / 8,
        5 => -(n + 3) / 8,
        7 => (3 * n + 3) / 8,
        _ => 0,
    }
}

/// The tabulated companion index `k_n`; not used by any formula.
pub fn small_k(n: usize) -> i64 {
    let n = n as i64;
    match n % 8 {
        1 => -(n - 1) / 8,
        3 => (3 * n - 1) / 8,
        5 => (3 * n + 1) / 8,
        7 => -(n + 1) / 8,
        _ => 0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OddCaseData {
    pub n: usize,
    pub n_star: usize,
    pub m0: usize,
    pub big_k: i64,
    pub small_k: i64,
    pub residue: usize,
}

pub fn odd_case(n: usize) -> Result<OddCaseData, AnalyticError> {
    check_odd(n)?;
    Ok(OddCaseData {
        n,
        n_star: n_star(n),
        m0: m0(n),
        big_k: big_k(n),
        small_k: small_k(n),
        residue: n % 8,
    })
}

/// Upper boundary of the odd polygon above the point `(x, 0)`.
pub fn boundary_f(n: usize, x: f64) -> Result<f64, AnalyticError> {
    check_odd(n)?;
    let (theta, r, _) = constants(n);
    let (lo, hi) = (-1.0 / r, r);
    if !(x >= lo - 1e-12 && x <= hi + 1e-12) {
        return Err(AnalyticError::OutOfRange { x, lo, hi });
    }
    let last = (n - 3) / 2;
    let seg = (0..=last)
        .find(|&m| x >= r * ((2 * m + 2) as f64 * theta).cos())
        .unwrap_or(last);
    let s = (2 * seg + 1) as f64 * theta;
    Ok((-x * s.cos() + r * theta.cos()) / s.sin())
}

/// Segment index `M` used by [`boundary_f`] at `x`.
pub fn boundary_segment(n: usize, x: f64) -> usize {
    let (theta, r, _) = constants(n);
    let last = (n - 3) / 2;
    (0..=last)
        .find(|&m| x >= r * ((2 * m + 2) as f64 * theta).cos())
        .unwrap_or(last)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCoefficients {
    pub beta: f64,
    pub beta_hat: f64,
    pub parity: Parity,
    pub k: usize,
    pub m: usize,
}

/// Slope and offset of the bound `C/4 + 1/2 <= beta x + beta_hat` on
/// segment `M` for setting separation `k`.
pub fn beta_coefficients(n: usize, k: usize, m: usize) -> Result<BoundCoefficients, AnalyticError> {
    check_odd(n)?;
    if k > (n - 1) / 2 {
        return Err(AnalyticError::IndexOutOfRange {
            index: k as i64,
            max: ((n - 1) / 2) as i64,
        });
    }
    if m > (n - 3) / 2 {
        return Err(AnalyticError::IndexOutOfRange {
            index: m as i64,
            max: ((n - 3) / 2) as i64,
        });
    }
    let (theta, r, big_r) = constants(n);
    let s = (2 * m + 1) as f64 * theta;
    let (sk, ck) = (k as f64 * theta).sin_cos();
    let r2 = r * r;
    let head = big_r * (2.0 * big_r * r2 * ck + sk / s.sin());
    let (beta, beta_hat, parity) = if k % 2 == 0 {
        (
            big_r * r * (big_r * (r2 - 1.0) * (ck - 1.0) - sk / s.tan()),
            head + big_r * big_r * (1.0 + r2 * r2),
            Parity::Even,
        )
    } else {
        (
            big_r * r * (big_r * (r2 - 1.0) * (-ck - 1.0) + sk / s.tan()),
            head + 2.0 * big_r * big_r * r2,
            Parity::Odd,
        )
    };
    Ok(BoundCoefficients {
        beta,
        beta_hat,
        parity,
        k,
        m,
    })
}

/// `I_n(k)`: the bound over all assemblages, evaluated at the optimal
/// point `x = +-r_n sin(pi / 2n)` of segment `M_0`.
pub fn i_value(n: usize, k: usize) -> Result<f64, AnalyticError> {
    let c = beta_coefficients(n, k, m0(n))?;
    let (_, r, _) = constants(n);
    let s = r * (PI / (2.0 * n as f64)).sin();
    let low = matches!(n % 8, 1 | 5);
    let x = match (c.parity, low) {
        (Parity::Even, true) | (Parity::Odd, false) => s,
        _ => -s,
    };
    Ok(c.beta * x + c.beta_hat)
}

/// `I_hat_n(k) = beta_hat(k; M_0)`: the bound over maximally entangled
/// assemblages, for which `x = 0`.
pub fn i_hat(n: usize, k: usize) -> Result<f64, AnalyticError> {
    Ok(beta_coefficients(n, k, m0(n))?.beta_hat)
}

/// `G_n(k) = 4 I_n(k) - 2` for `k = 0..=(n-1)/2`.
pub fn g_table(n: usize) -> Result<Vec<f64>, AnalyticError> {
    check_odd(n)?;
    (0..=(n - 1) / 2).map(|k| Ok(4.0 * i_value(n, k)? - 2.0)).collect()
}

/// `H_n(k) = 4 I_hat_n(k) - 2` for `k = 0..=(n-1)/2`.
pub fn h_table(n: usize) -> Result<Vec<f64>, AnalyticError> {
    check_odd(n)?;
    (0..=(n - 1) / 2).map(|k| Ok(4.0 * i_hat(n, k)? - 2.0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HOpt {
    pub n_star: usize,
    pub big_k: i64,
    pub value: f64,
}

/// The residue-matched closed form of `H_n(n_star)`.
pub fn h_opt(n: usize) -> Result<HOpt, AnalyticError> {
    check_odd(n)?;
    let (theta, r, big_r) = constants(n);
    let r2 = r * r;
    let p3 = PI / 4.0 + 3.0 * theta / 4.0;
    let p1 = PI / 4.0 + theta / 4.0;
    let inner = match n % 8 {
        1 => 1.0 + r2 * (2.0 * p3.cos() + 6.0 * p1.sin() + r2 - 2.0),
        3 => -1.0 + r2 * (2.0 * p3.sin() + 6.0 * p1.cos() + 2.0 - r2),
        5 => -1.0 + r2 * (2.0 * p3.cos() + 6.0 * p1.sin() + 2.0 - r2),
        _ => 1.0 + r2 * (2.0 * p3.sin() + 6.0 * p1.cos() + r2 - 2.0),
    };
    Ok(HOpt {
        n_star: n_star(n),
        big_k: big_k(n),
        value: 2.0 * big_r * big_r * inner,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hexagon_bound_is_three() {
        assert!((4.0 * even_bound(6, 0).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn even_rejects_square_residues() {
        assert_eq!(even_bound(8, 0), Err(AnalyticError::WrongResidue(8)));
    }

    #[test]
    fn pentagon_value() {
        let h = h_opt(5).unwrap();
        assert_eq!(h.n_star, 1);
        assert!((h.value - 2.6832815729997).abs() < 1e-12);
    }

    #[test]
    fn vertex_is_on_boundary() {
        let (theta, r, _) = constants(9);
        let x = r * (2.0 * theta).cos();
        assert!((boundary_f(9, x).unwrap() - r * (2.0 * theta).sin()).abs() < 1e-12);
        assert!(boundary_f(9, r).unwrap().abs() < 1e-12);
    }
}
