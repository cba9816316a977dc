//! Closed-form ball moments of the radial weights (1 − |y|²/r²)^ρ.
//!
//! With α = 2β, ∫_{B(0,1)} (1−|z|²)^ρ z^α dz = |B₁| · Π_i (2β_i−1)!!/2^{β_i} · ρ! / Π_{t=1}^{|β|+ρ} (n/2+t),
//! so every moment is a rational multiple of the unit-ball volume.

use num_bigint::BigInt;
use num_traits::{One, Pow, Zero};

use super::exact::{to_f64, Rational};
use super::multi_index::{factorial, MultiIndex};

/// Weight profile on a ball.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BallWeight {
    /// ω ≡ 1.
    Flat,
    /// ω = (1 − |y|²/r²)^ρ.
    Bump(u32),
}

impl BallWeight {
    fn rho(self) -> u32 {
        match self {
            BallWeight::Flat => 0,
            BallWeight::Bump(r) => r,
        }
    }
}

/// ∫_{B(0,1)} ω(z) z^α dz divided by |B₁|; exact.
pub fn unit_moment_ratio(alpha: &MultiIndex, weight: BallWeight) -> Rational {
    if alpha.has_odd_entry() {
        return Rational::zero();
    }
    let n = alpha.n() as i64;
    let rho = weight.rho();
    let mut out = Rational::one();
    let mut half_order = 0u32;
    for &a in alpha.entries() {
        let b = a / 2;
        half_order += b;
        // (2b−1)!!/2^b
        for t in 0..b {
            out *= Rational::new(BigInt::from(2 * t as i64 + 1), BigInt::from(2));
        }
    }
    out *= Rational::from_integer(factorial(rho));
    for t in 1..=(half_order + rho) as i64 {
        out /= Rational::new(BigInt::from(n + 2 * t), BigInt::from(2));
    }
    out
}

/// ∫_{B(0,1)} ω z^α dz / ∫_{B(0,1)} ω dz: the moment of the normalized weight.
pub fn normalized_unit_moment(alpha: &MultiIndex, weight: BallWeight) -> Rational {
    unit_moment_ratio(alpha, weight) / unit_moment_ratio(&MultiIndex::zero(alpha.n()), weight)
}

/// Moment of the normalized weight on B(0, r): r^{|α|} times the unit value.
pub fn normalized_moment_exact(alpha: &MultiIndex, radius: &Rational, weight: BallWeight) -> Rational {
    normalized_unit_moment(alpha, weight) * Pow::pow(radius, alpha.order())
}

/// |B₁| in ℝⁿ.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// ∫_{B(0,r)} ω(y) y^α dy, or the moment of the normalized weight (∫ω = 1) when `normalized`.
pub fn ball_moment(alpha: &MultiIndex, radius: f64, weight: BallWeight, normalized: bool) -> f64 {
    if normalized {
        return to_f64(&normalized_unit_moment(alpha, weight)) * radius.powi(alpha.order() as i32);
    }
    let n = alpha.n();
    unit_ball_volume(n) * to_f64(&unit_moment_ratio(alpha, weight)) * radius.powi((n as u32 + alpha.order()) as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly_core::exact::rat;
    use std::f64::consts::PI;

    #[test]
    fn disk_area_and_second_moment() {
        let z = MultiIndex::zero(2);
        assert!((ball_moment(&z, 1.0, BallWeight::Flat, false) - PI).abs() < 1e-15);
        let a = MultiIndex::new(vec![2, 0]);
        assert_eq!(unit_moment_ratio(&a, BallWeight::Flat), rat(1, 4));
        assert!((ball_moment(&a, 1.0, BallWeight::Flat, false) - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn odd_moments_vanish() {
        let a = MultiIndex::new(vec![1, 0]);
        assert_eq!(ball_moment(&a, 2.0, BallWeight::Bump(3), false), 0.0);
        assert_eq!(ball_moment(&MultiIndex::new(vec![3, 2]), 1.0, BallWeight::Flat, true), 0.0);
    }

    #[test]
    fn normalized_mass_is_one() {
        for rho in 0..6 {
            let w = if rho == 0 { BallWeight::Flat } else { BallWeight::Bump(rho) };
            assert_eq!(normalized_unit_moment(&MultiIndex::zero(3), w), rat(1, 1));
        }
    }

    #[test]
    fn unit_ball_volumes() {
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
    }
}
