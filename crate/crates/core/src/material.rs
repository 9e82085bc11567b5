//! Electrical material parameters for reflecting surfaces.

use serde::Serialize;

use crate::{Error, Result};

/// Electrical parameters of a reflecting surface.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Material {
    pub name: String,
    /// Relative permittivity, real part.
    pub rel_permittivity: f64,
    /// Conductivity in S/m.
    pub conductivity: f64,
    /// Forces `|Γ| = 1` (Γ = −1 for both polarizations).
    pub perfect_reflector: bool,
}

/// ITU-R P.2040 frequency model: `ε_r = a·f^b`, `σ = c·f^d` with f in GHz.
struct ItuModel {
    names: &'static [&'static str],
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

const ITU_MODELS: &[ItuModel] = &[
    ItuModel { names: &["concrete"], a: 5.24, b: 0.0, c: 0.0462, d: 0.7822 },
    ItuModel { names: &["brick"], a: 3.91, b: 0.0, c: 0.0238, d: 0.16 },
    ItuModel { names: &["plasterboard"], a: 2.73, b: 0.0, c: 0.0085, d: 0.9395 },
    ItuModel { names: &["wood"], a: 1.99, b: 0.0, c: 0.0047, d: 1.0718 },
    ItuModel { names: &["glass"], a: 6.31, b: 0.0, c: 0.0036, d: 1.3394 },
    ItuModel { names: &["very_dry_ground"], a: 3.0, b: 0.0, c: 0.00015, d: 2.52 },
    ItuModel {
        names: &["medium_dry_ground", "vegetation"],
        a: 15.0,
        b: -0.1,
        c: 0.035,
        d: 1.63,
    },
    ItuModel { names: &["wet_ground"], a: 30.0, b: -0.4, c: 0.15, d: 1.30 },
];

impl Material {
    pub fn new(
        name: impl Into<String>,
        rel_permittivity: f64,
        conductivity: f64,
    ) -> Result<Self> {
        let m = Material {
            name: name.into(),
            rel_permittivity,
            conductivity,
            perfect_reflector: false,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn perfect_reflector() -> Self {
        Material {
            name: "perfect_reflector".into(),
            rel_permittivity: 1.0,
            conductivity: 0.0,
            perfect_reflector: true,
        }
    }

    /// Resolves a named preset at the given carrier frequency.
    ///
    /// `perfect_reflector` is frequency independent; the rest follow the
    /// ITU-R P.2040 power-law fits. `vegetation` is an alias for
    /// `medium_dry_ground`.
    pub fn named(name: &str, freq_hz: f64) -> Result<Self> {
        if name == "perfect_reflector" || name == "perfect" {
            return Ok(Self::perfect_reflector());
        }
        if !(freq_hz > 0.0) {
            return Err(Error::Material(format!("frequency must be > 0, got {freq_hz}")));
        }
        let model = ITU_MODELS
            .iter()
            .find(|m| m.names.contains(&name))
            .ok_or_else(|| Error::Material(format!("unknown material `{name}`")))?;
        let f_ghz = freq_hz / 1e9;
        let eps = (model.a * f_ghz.powf(model.b)).max(1.0);
        let sigma = model.c * f_ghz.powf(model.d);
        Material::new(name, eps, sigma)
    }

    pub fn preset_names() -> impl Iterator<Item = &'static str> {
        std::iter::once("perfect_reflector").chain(ITU_MODELS.iter().flat_map(|m| m.names.iter().copied()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_permittivity >= 1.0) || !self.rel_permittivity.is_finite() {
            return Err(Error::Material(format!(
                "{}: relative permittivity must be >= 1, got {}",
                self.name, self.rel_permittivity
            )));
        }
        if !(self.conductivity >= 0.0) || !self.conductivity.is_finite() {
            return Err(Error::Material(format!(
                "{}: conductivity must be >= 0, got {}",
                self.name, self.conductivity
            )));
        }
        Ok(())
    }

    /// Stable byte encoding used for scene digests.
    pub(crate) fn digest_bytes(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(self.name.as_bytes());
        out.push(0);
        out.extend_from_slice(&self.rel_permittivity.to_bits().to_le_bytes());
        out.extend_from_slice(&self.conductivity.to_bits().to_le_bytes());
        out.push(self.perfect_reflector as u8);
    }
}
