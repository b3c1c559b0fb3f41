//! Complete elliptic integrals, Jacobi elliptic functions and Toda's
//! travelling-wave solution of the infinite lattice.

use std::f64::consts::FRAC_PI_2;
use std::ops::Range;

use crate::error::{Result, TodaError};

const AGM_TOL: f64 = 1e-15;
const AGM_CAP: usize = 40;

fn check_modulus(k: f64) -> Result<()> {
    if !(0.0..1.0).contains(&k) {
        return Err(TodaError::Domain(format!("elliptic modulus k = {k} outside [0, 1)")));
    }
    Ok(())
}

/// AGM sequence starting from `(1, k')`. Returns the `(a_n, c_n)` pairs,
/// `c_0 = k`.
fn agm_sequence(k: f64) -> Vec<(f64, f64)> {
    let mut a = 1.0;
    let mut b = (1.0 - k * k).sqrt();
    let mut seq = vec![(a, k)];
    for _ in 0..AGM_CAP {
        let c = 0.5 * (a - b);
        let next_a = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next_a;
        seq.push((a, c));
        if c.abs() <= AGM_TOL * a {
            break;
        }
    }
    seq
}

/// `K(k) = ∫_0^{π/2} dθ / √(1 - k² sin²θ)`.
pub fn complete_k(k: f64) -> Result<f64> {
    check_modulus(k)?;
    let seq = agm_sequence(k);
    Ok(FRAC_PI_2 / seq.last().unwrap().0)
}

/// `E(k) = ∫_0^{π/2} √(1 - k² sin²θ) dθ`.
pub fn complete_e(k: f64) -> Result<f64> {
    check_modulus(k)?;
    let seq = agm_sequence(k);
    let kk = FRAC_PI_2 / seq.last().unwrap().0;
    let mut weight = 0.5;
    let mut sum = 0.0;
    for (_, c) in &seq {
        sum += weight * c * c;
        weight *= 2.0;
    }
    Ok(kk * (1.0 - sum))
}

/// `(sn, cn, dn)` by descending Landen transformation.
pub fn jacobi_sn_cn_dn(u: f64, k: f64) -> Result<(f64, f64, f64)> {
    check_modulus(k)?;
    if k == 0.0 {
        return Ok((u.sin(), u.cos(), 1.0));
    }
    let seq = agm_sequence(k);
    let last = seq.len() - 1;
    let mut phi = 2f64.powi(last as i32) * seq[last].0 * u;
    for n in (1..=last).rev() {
        let (a, c) = seq[n];
        phi = 0.5 * (phi + (c / a * phi.sin()).asin());
    }
    let (sn, cn) = phi.sin_cos();
    // dn² = cn² + k'² sn² has no cancellation, unlike 1 - k² sn².
    let kp2 = (1.0 - k) * (1.0 + k);
    let dn = (cn * cn + kp2 * sn * sn).sqrt();
    Ok((sn, cn, dn))
}

pub fn jacobi_sn_dn(u: f64, k: f64) -> Result<(f64, f64)> {
    let (sn, _, dn) = jacobi_sn_cn_dn(u, k)?;
    Ok((sn, dn))
}

/// Direction of the travelling wave, the `±` in `νt ± n/λ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WaveDirection {
    #[default]
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnoidalParams {
    pub a: f64,
    pub b: f64,
    pub k: f64,
    pub wavelength: f64,
    pub direction: WaveDirection,
    pub big_k: f64,
    pub big_e: f64,
    pub nu: f64,
}

impl CnoidalParams {
    pub fn new(a: f64, b: f64, k: f64, wavelength: f64, direction: WaveDirection) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && wavelength > 0.0) || !wavelength.is_finite() {
            return Err(TodaError::Domain(format!(
                "need a, b, wavelength > 0 (got {a}, {b}, {wavelength})"
            )));
        }
        if !(k > 0.0 && k < 1.0) {
            return Err(TodaError::Domain(format!("modulus k = {k} outside (0, 1)")));
        }
        let big_k = complete_k(k)?;
        let big_e = complete_e(k)?;
        let (sn, _) = jacobi_sn_dn(2.0 * big_k / wavelength, k)?;
        if sn.abs() < 1e-300 {
            return Err(TodaError::Domain("sn(2K/λ) vanishes".into()));
        }
        let denom = 1.0 / (sn * sn) - 1.0 + big_e / big_k;
        let nu = (a * b / denom).sqrt() / (2.0 * big_k);
        Ok(Self { a, b, k, wavelength, direction, big_k, big_e, nu })
    }

    fn phase(&self, n: i64, t: f64) -> f64 {
        let shift = n as f64 / self.wavelength;
        let arg = match self.direction {
            WaveDirection::Plus => self.nu * t + shift,
            WaveDirection::Minus => self.nu * t - shift,
        };
        2.0 * self.big_k * arg
    }
}

/// Bond length `q_{n+1} - q_n` of the travelling wave at time `t`.
pub fn cnoidal_gap(n: i64, t: f64, params: &CnoidalParams) -> Result<f64> {
    let (_, dn) = jacobi_sn_dn(params.phase(n, t), params.k)?;
    let amp = 4.0 * (params.big_k * params.nu).powi(2) / (params.a * params.b);
    let x = amp * (dn * dn - params.big_e / params.big_k);
    if x <= -1.0 {
        return Err(TodaError::Domain(format!("log argument {} is not positive", 1.0 + x)));
    }
    Ok(-x.ln_1p() / params.b)
}

/// Maximum residual of the lattice equation over `n_range × t_grid`, with
/// `q̈` from a five-point central difference of step `h`.
///
/// Positions anchored at a fixed `q_0` do not satisfy the equation of motion
/// (particle 0 accelerates), so the check is done on bond lengths:
/// `r̈_n = -a (e^{-b r_{n+1}} - 2 e^{-b r_n} + e^{-b r_{n-1}})`, which is the
/// difference of the equations for particles `n+1` and `n`.
pub fn cnoidal_residual(
    params: &CnoidalParams,
    n_range: Range<i64>,
    t_grid: &[f64],
    h: f64,
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(TodaError::InvalidInput(format!("FD step h = {h}")));
    }
    let (a, b) = (params.a, params.b);
    let mut worst: f64 = 0.0;
    for &t in t_grid {
        for n in n_range.clone() {
            let r = |dt: f64| cnoidal_gap(n, t + dt, params);
            let accel = (-r(2.0 * h)? + 16.0 * r(h)? - 30.0 * r(0.0)? + 16.0 * r(-h)?
                - r(-2.0 * h)?)
                / (12.0 * h * h);
            let e = |m: i64| -> Result<f64> { Ok((-b * cnoidal_gap(m, t, params)?).exp()) };
            let rhs = -a * (e(n + 1)? - 2.0 * e(n)? + e(n - 1)?);
            worst = worst.max((accel - rhs).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_modulus() {
        assert_eq!(complete_k(0.0).unwrap(), FRAC_PI_2);
        assert_eq!(complete_e(0.0).unwrap(), FRAC_PI_2);
        let (sn, cn, dn) = jacobi_sn_cn_dn(0.9, 0.0).unwrap();
        assert_eq!((sn, cn, dn), (0.9f64.sin(), 0.9f64.cos(), 1.0));
    }

    #[test]
    fn origin() {
        let (sn, dn) = jacobi_sn_dn(0.0, 0.7).unwrap();
        assert_eq!(sn, 0.0);
        assert!((dn - 1.0).abs() < 1e-15);
    }

    #[test]
    fn modulus_domain() {
        assert!(complete_k(1.0).is_err());
        assert!(complete_e(-0.1).is_err());
        assert!(jacobi_sn_dn(0.3, 1.2).is_err());
        assert!(CnoidalParams::new(1.0, 1.0, 0.0, 4.0, WaveDirection::Plus).is_err());
        assert!(CnoidalParams::new(-1.0, 1.0, 0.5, 4.0, WaveDirection::Plus).is_err());
    }

    #[test]
    fn monotone_on_grid() {
        let mut prev = (complete_k(0.0).unwrap(), complete_e(0.0).unwrap());
        for i in 1..100 {
            let k = i as f64 / 100.0;
            let cur = (complete_k(k).unwrap(), complete_e(k).unwrap());
            assert!(cur.0 > prev.0 && cur.1 < prev.1);
            assert!(cur.1 < cur.0);
            prev = cur;
        }
    }

    #[test]
    fn gap_is_periodic_in_n() {
        let p = CnoidalParams::new(1.0, 1.0, 0.6, 4.0, WaveDirection::Plus).unwrap();
        for n in -3..3 {
            let g0 = cnoidal_gap(n, 0.3, &p).unwrap();
            let g1 = cnoidal_gap(n + 4, 0.3, &p).unwrap();
            assert!((g0 - g1).abs() < 1e-12);
        }
    }
}
