//! Passenger demand as a function of the generalized trip cost.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The contract every demand family provides to the solvers.
///
/// `realized` maps a generalized cost to a demand rate; `inverse` is its
/// inverse `B(Q)`, with slope `B'(Q)` and integral `∫₀^Q B`.
pub trait DemandCurve {
    /// Potential demand `Q̄`, the rate at zero cost.
    fn potential(&self) -> f64;
    fn realized(&self, cost: f64) -> f64;
    fn inverse(&self, q: f64) -> Result<f64>;
    fn inverse_slope(&self, q: f64) -> Result<f64>;
    fn gross_surplus(&self, q: f64) -> Result<f64>;

    /// Smallest demand the solvers will evaluate `B` at.
    fn q_min(&self) -> f64 {
        1e-9 * self.potential()
    }
}

/// `f(C) = Q̄·exp(−αC)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentialDemand {
    pub q_bar: f64,
    pub alpha: f64,
}

impl ExponentialDemand {
    pub fn new(q_bar: f64, alpha: f64) -> Result<Self> {
        if !(q_bar > 0.0 && q_bar.is_finite()) {
            return Err(Error::domain(format!("potential demand must be positive, got {q_bar}")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::domain(format!("cost sensitivity must be positive, got {alpha}")));
        }
        Ok(Self { q_bar, alpha })
    }
}

impl DemandCurve for ExponentialDemand {
    fn potential(&self) -> f64 {
        self.q_bar
    }

    fn realized(&self, cost: f64) -> f64 {
        self.q_bar * (-self.alpha * cost).exp()
    }

    fn inverse(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q <= self.q_bar) {
            return Err(Error::domain(format!("inverse demand needs 0 < Q <= {}, got {q}", self.q_bar)));
        }
        Ok(-(q / self.q_bar).ln() / self.alpha)
    }

    fn inverse_slope(&self, q: f64) -> Result<f64> {
        if !(q > 0.0) {
            return Err(Error::domain(format!("inverse demand slope needs Q > 0, got {q}")));
        }
        Ok(-1.0 / (self.alpha * q))
    }

    fn gross_surplus(&self, q: f64) -> Result<f64> {
        if !(0.0..=self.q_bar).contains(&q) {
            return Err(Error::domain(format!("gross surplus needs 0 <= Q <= {}, got {q}", self.q_bar)));
        }
        if q == 0.0 {
            return Ok(0.0);
        }
        Ok(q * (self.inverse(q)? + 1.0 / self.alpha))
    }
}

/// Tagged demand family, as it appears in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum DemandModel {
    Exponential(ExponentialDemand),
}

impl DemandModel {
    pub fn exponential(q_bar: f64, alpha: f64) -> Result<Self> {
        ExponentialDemand::new(q_bar, alpha).map(DemandModel::Exponential)
    }

    fn curve(&self) -> &dyn DemandCurve {
        match self {
            DemandModel::Exponential(d) => d,
        }
    }
}

impl DemandCurve for DemandModel {
    fn potential(&self) -> f64 {
        self.curve().potential()
    }
    fn realized(&self, cost: f64) -> f64 {
        self.curve().realized(cost)
    }
    fn inverse(&self, q: f64) -> Result<f64> {
        self.curve().inverse(q)
    }
    fn inverse_slope(&self, q: f64) -> Result<f64> {
        self.curve().inverse_slope(q)
    }
    fn gross_surplus(&self, q: f64) -> Result<f64> {
        self.curve().gross_surplus(q)
    }
}
