//! Exogenous market parameters shared by every solver, and the result types
//! common to all market structures.

use serde::{Deserialize, Serialize};

use crate::demand::{DemandCurve, DemandModel};
use crate::error::{Error, Result};
use crate::matching::MatchingModel;

/// Demand, matching technology and the cost parameters of a market.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Market {
    pub demand: DemandModel,
    pub matching: MatchingModel,
    /// Value of time `β` (HKD/hour).
    pub beta: f64,
    /// Operating cost `c` per vehicle-hour.
    pub operating_cost: f64,
    /// Trip time `T` (hours).
    pub trip_time: f64,
}

impl Market {
    pub fn new(
        demand: DemandModel,
        matching: MatchingModel,
        beta: f64,
        operating_cost: f64,
        trip_time: f64,
    ) -> Result<Self> {
        for (name, v) in [("beta", beta), ("c", operating_cost), ("T", trip_time)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::validation(name, format!("must be positive and finite, got {v}")));
            }
        }
        Ok(Self { demand, matching, beta, operating_cost, trip_time })
    }

    /// The calibration used throughout the experiments:
    /// `Q̄ = 1e5`, `α = 0.013`, `β = 120`, `c = 50`, `T = 0.4`, `A = 5`, `κ = 0.5`.
    pub fn baseline() -> Self {
        Self {
            demand: DemandModel::exponential(1e5, 0.013).expect("valid demand"),
            matching: MatchingModel::new(5.0, 0.5).expect("valid matching"),
            beta: 120.0,
            operating_cost: 50.0,
            trip_time: 0.4,
        }
    }

    /// Passenger time cost `β(T + W(N^v))` of a trip served from `idle` vehicles.
    pub fn time_cost(&self, idle: f64) -> f64 {
        self.beta * (self.trip_time + self.matching.w(idle))
    }
}

pub(crate) fn check_fleets(fleets: &[f64]) -> Result<()> {
    if fleets.is_empty() {
        return Err(Error::validation("platforms", "at least one platform is required"));
    }
    for (i, &n) in fleets.iter().enumerate() {
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::validation(format!("platforms[{i}].fleet"), format!("must be positive, got {n}")));
        }
    }
    Ok(())
}

pub(crate) fn check_fares(fares: &[f64], fleets: &[f64]) -> Result<()> {
    if fares.len() != fleets.len() {
        return Err(Error::domain(format!("{} fares for {} platforms", fares.len(), fleets.len())));
    }
    if let Some(f) = fares.iter().find(|f| !f.is_finite()) {
        return Err(Error::domain(format!("fares must be finite, got {f}")));
    }
    Ok(())
}

/// Which root a fixed-fare evaluation may return.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RootPolicy {
    /// Fail with `NoEquilibrium` unless every active platform is in the Normal regime.
    #[default]
    NormalOnly,
    /// Return the largest-idle root and flag it when it is a WGC state.
    PreferNormal,
}

/// Non-fatal observations attached to a solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Flag {
    /// The equilibrium generalized cost is negative; demand is extrapolated.
    NegativeCost,
    /// The given pool (platform index, or `None` for the shared pool) sits on the WGC branch.
    WgcState { pool: Option<usize> },
    /// Other stationary points of the solver's aggregate map (total demand at each).
    MultipleEquilibria { other_totals: Vec<f64> },
    /// The commission exceeds the all-integrator threshold at the solved fares.
    CommissionAboveThreshold { tau_1: f64 },
}

/// Profits, surplus and utilization of a solved market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketMetrics {
    pub profits: Vec<f64>,
    pub total_profit: f64,
    pub consumer_surplus: f64,
    pub welfare: f64,
    pub utilization: Vec<f64>,
    pub integrator_revenue: f64,
}

impl MarketMetrics {
    /// `welfare − (consumer surplus + profits + integrator revenue)`.
    pub fn accounting_gap(&self) -> f64 {
        self.welfare - (self.consumer_surplus + self.total_profit + self.integrator_revenue)
    }
}

/// Consumer surplus `∫₀^Q B − Q·B(Q)`.
pub(crate) fn consumer_surplus(market: &Market, total: f64) -> Result<f64> {
    if total <= 0.0 {
        return Ok(0.0);
    }
    Ok(market.demand.gross_surplus(total)? - total * market.demand.inverse(total)?)
}
