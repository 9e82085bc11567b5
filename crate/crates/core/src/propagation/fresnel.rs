use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::material::Material;
use crate::{Error, Result};

/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarization {
    /// Electric field perpendicular to the plane of incidence (TE).
    Perpendicular,
    /// Electric field in the plane of incidence (TM).
    Parallel,
}

/// Complex relative permittivity `ε_r − j·σ/(2π f ε₀)`.
pub fn complex_permittivity(material: &Material, freq_hz: f64) -> Complex64 {
    Complex64::new(
        material.rel_permittivity,
        -material.conductivity / (2.0 * std::f64::consts::PI * freq_hz * EPSILON_0),
    )
}

/// Fresnel reflection coefficient for a wave incident from free space.
///
/// The parallel coefficient uses the sign convention in which both
/// polarizations agree at normal incidence, so a perfect conductor is −1 for
/// both.
pub fn fresnel_gamma(
    material: &Material,
    cos_theta_i: f64,
    pol: Polarization,
    freq_hz: f64,
) -> Result<Complex64> {
    let (perp, par) = fresnel_pair(material, cos_theta_i, freq_hz)?;
    Ok(match pol {
        Polarization::Perpendicular => perp,
        Polarization::Parallel => par,
    })
}

/// Both Fresnel coefficients, `(perpendicular, parallel)`.
pub fn fresnel_pair(material: &Material, cos_theta_i: f64, freq_hz: f64) -> Result<(Complex64, Complex64)> {
    if !(cos_theta_i > 0.0) {
        return Err(Error::Domain(format!("cos(theta_i) must be in (0, 1], got {cos_theta_i}")));
    }
    if !(freq_hz > 0.0) {
        return Err(Error::Domain(format!("frequency must be > 0, got {freq_hz}")));
    }
    if material.perfect_reflector {
        return Ok((Complex64::new(-1.0, 0.0), Complex64::new(-1.0, 0.0)));
    }
    let c = cos_theta_i.min(1.0);
    let eps = complex_permittivity(material, freq_hz);
    let root = (eps - (1.0 - c * c)).sqrt();
    let perp = (c - root) / (c + root);
    let par = (root - eps * c) / (root + eps * c);
    Ok((perp, par))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn concrete_lossless() -> Material {
        Material::new("concrete", 5.24, 0.0).unwrap()
    }

    #[test]
    fn perfect_reflector_is_minus_one() {
        let m = Material::perfect_reflector();
        for c in [1e-6, 0.3, 1.0] {
            for p in [Polarization::Perpendicular, Polarization::Parallel] {
                assert_eq!(fresnel_gamma(&m, c, p, 3.4e9).unwrap(), Complex64::new(-1.0, 0.0));
            }
        }
    }

    #[test]
    fn concrete_normal_incidence() {
        let expected = (1.0 - 5.24f64.sqrt()) / (1.0 + 5.24f64.sqrt());
        assert!((expected + 0.3920).abs() < 1e-4);
        let (a, b) = fresnel_pair(&concrete_lossless(), 1.0, 3.4e9).unwrap();
        assert!((a.re - expected).abs() < 1e-12 && a.im.abs() < 1e-12);
        assert!((b.re - expected).abs() < 1e-12 && b.im.abs() < 1e-12);
    }

    #[test]
    fn grazing_perpendicular_tends_to_minus_one() {
        let g = fresnel_gamma(&concrete_lossless(), 1e-9, Polarization::Perpendicular, 3.4e9).unwrap();
        assert!((g + 1.0).norm() < 1e-8);
    }

    #[test]
    fn non_positive_cosine_is_a_domain_error() {
        assert!(fresnel_gamma(&concrete_lossless(), 0.0, Polarization::Parallel, 3.4e9).is_err());
        assert!(fresnel_gamma(&concrete_lossless(), -0.5, Polarization::Parallel, 3.4e9).is_err());
    }

    #[test]
    fn passive_magnitude_bound() {
        let lossy = Material::named("concrete", 3.4e9).unwrap();
        let ground = Material::named("wet_ground", 3.4e9).unwrap();
        for m in [&lossy, &ground, &concrete_lossless()] {
            for i in 1..=1000 {
                let c = i as f64 / 1000.0;
                let (a, b) = fresnel_pair(m, c, 3.4e9).unwrap();
                assert!(a.norm() <= 1.0 + 1e-12 && b.norm() <= 1.0 + 1e-12);
            }
        }
    }
}
