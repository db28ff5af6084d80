use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Casimir exponents `α1 ≥ α2 ≥ α3 > 0` with `α1 + α2 + α3 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct Anisotropy([f64; 3]);

impl Anisotropy {
    pub fn new(alpha: [f64; 3]) -> Result<Self> {
        let [a1, a2, a3] = alpha;
        if !alpha.iter().all(|a| a.is_finite()) {
            return Err(Error::Geometry(format!("non-finite exponents {alpha:?}")));
        }
        if !(a1 >= a2 && a2 >= a3 && a3 > 0.0) {
            return Err(Error::Geometry(format!(
                "exponents must satisfy α1 ≥ α2 ≥ α3 > 0, got {alpha:?}"
            )));
        }
        let sum = a1 + a2 + a3;
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Geometry(format!("exponents sum to {sum}, not 1")));
        }
        Ok(Self(alpha))
    }

    pub fn exponents(&self) -> [f64; 3] {
        self.0
    }

    /// The largest exponent α1, which alone decides the condensate type.
    pub fn leading(&self) -> f64 {
        self.0[0]
    }

    /// `δ = 2(1 - α1)`.
    pub fn delta(&self) -> f64 {
        2.0 * (1.0 - self.0[0])
    }
}

impl TryFrom<[f64; 3]> for Anisotropy {
    type Error = Error;
    fn try_from(a: [f64; 3]) -> Result<Self> {
        Self::new(a)
    }
}

impl From<Anisotropy> for [f64; 3] {
    fn from(a: Anisotropy) -> Self {
        a.0
    }
}

/// A periodic box with sides `L_ν = V^{α_ν}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxGeometry {
    alpha: Anisotropy,
    volume: f64,
}

impl BoxGeometry {
    pub fn new(alpha: Anisotropy, volume: f64) -> Result<Self> {
        if !(volume > 0.0) || !volume.is_finite() {
            return Err(Error::Geometry(format!("volume must be positive, got {volume}")));
        }
        Ok(Self { alpha, volume })
    }

    pub fn alpha(&self) -> Anisotropy {
        self.alpha
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn with_volume(&self, volume: f64) -> Result<Self> {
        Self::new(self.alpha, volume)
    }

    pub fn side_lengths(&self) -> [f64; 3] {
        self.alpha.0.map(|a| self.volume.powf(a))
    }

    /// `πλ²/L_ν²`: the dimensionless energy of a unit mode index on axis ν.
    pub fn stiffness(&self, lambda: f64) -> [f64; 3] {
        self.side_lengths().map(|l| PI * lambda * lambda / (l * l))
    }
}

/// Integer label `n` of the wave vector `k_ν = 2π n_ν / L_ν`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeIndex(pub [i64; 3]);

impl ModeIndex {
    pub const ZERO: ModeIndex = ModeIndex([0, 0, 0]);

    pub fn new(n1: i64, n2: i64, n3: i64) -> Self {
        Self([n1, n2, n3])
    }

    pub fn wave_vector(&self, geom: &BoxGeometry) -> [f64; 3] {
        let l = geom.side_lengths();
        [0, 1, 2].map(|i| 2.0 * PI * self.0[i] as f64 / l[i])
    }
}

/// The grand-canonical parameters that determine every finite-volume
/// quantity: λ and `βμ < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasState {
    lambda: f64,
    beta_mu: f64,
}

impl GasState {
    pub fn new(lambda: f64, beta_mu: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::domain("GasState", format!("λ = {lambda} must be positive")));
        }
        if !(beta_mu < 0.0) {
            return Err(Error::domain(
                "GasState",
                format!("βμ = {beta_mu} must be negative (ground state sits at zero energy)"),
            ));
        }
        Ok(Self { lambda, beta_mu })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn beta_mu(&self) -> f64 {
        self.beta_mu
    }
}

/// A solved state: the chemical potential that yields density `rho` in a
/// box of volume `volume`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermoPoint {
    pub lambda: f64,
    pub rho: f64,
    pub beta_mu: f64,
    pub volume: f64,
}

impl ThermoPoint {
    pub fn new(lambda: f64, rho: f64, beta_mu: f64, volume: f64) -> Result<Self> {
        GasState::new(lambda, beta_mu)?;
        if !(rho > 0.0) || !(volume > 0.0) {
            return Err(Error::domain(
                "ThermoPoint",
                format!("need ρ > 0 and V > 0, got ρ = {rho}, V = {volume}"),
            ));
        }
        Ok(Self {
            lambda,
            rho,
            beta_mu,
            volume,
        })
    }

    pub fn state(&self) -> GasState {
        GasState {
            lambda: self.lambda,
            beta_mu: self.beta_mu,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_exponents() {
        assert!(Anisotropy::new([0.4, 0.3, 0.3]).is_ok());
        assert!(Anisotropy::new([0.3, 0.4, 0.3]).is_err());
        assert!(Anisotropy::new([0.5, 0.5, 0.0]).is_err());
        assert!(Anisotropy::new([0.5, 0.3, 0.3]).is_err());
        assert!(Anisotropy::new([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]).is_ok());
    }

    #[test]
    fn sides_multiply_to_volume() {
        let a = Anisotropy::new([0.6, 0.25, 0.15]).unwrap();
        for &v in &[1.0, 17.0, 1e3, 3.3e6] {
            let g = BoxGeometry::new(a, v).unwrap();
            let l = g.side_lengths();
            assert!((l[0] * l[1] * l[2] / v - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn state_requires_negative_chemical_potential() {
        assert!(GasState::new(1.0, 0.0).is_err());
        assert!(GasState::new(1.0, 1e-3).is_err());
        assert!(GasState::new(0.0, -1.0).is_err());
        assert!(GasState::new(1.0, -1e-12).is_ok());
    }
}
