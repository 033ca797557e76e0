//! Matching friction: waiting time as a function of idle vehicles, and the
//! inversion of the vehicle-conservation identity `N = N^v + q(T + W(N^v))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::bisect;

/// Relative band around the branch peak that still counts as feasible.
pub const PEAK_TOLERANCE: f64 = 1e-9;

/// Power-law waiting time `W(N^v) = A·(N^v)^{−κ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchingModel {
    #[serde(rename = "A")]
    pub a: f64,
    pub kappa: f64,
}

/// Which side of the branch curve a stationary state sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    Normal,
    /// Wild goose chase: more demand would *raise* the idle count.
    Wgc,
}

/// How a conservation identity couples demand and idle vehicles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdleMode {
    /// A platform with its own idle pool.
    Platform,
    /// One platform's demand against a pool it shares with fleet fraction `share`.
    PooledShare,
    /// Total demand against the whole pool.
    PooledTotal,
}

/// The four branch curves mapping idle vehicles to sustainable demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchCurve {
    /// `(N_i − x)/(T + W(x))`.
    Platform,
    /// Utilization against the idle ratio `u = N_i^v/N_i`: `(1 − u)T/(T + W(N_i u))`.
    IdleRatio,
    /// `(N_i − (N_i/N)x)/(T + W(x))`, one platform's share of a pooled stock `x`.
    PooledShare,
    /// `(N − x)/(T + W(x))`.
    PooledTotal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdleSolution {
    pub idle_vehicles: f64,
    pub regime: Regime,
    /// `N − N^v − q(T + W(N^v))`.
    pub residual: f64,
}

/// Top of the inverted-U branch curve of a fleet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchPeak {
    pub idle: f64,
    pub demand: f64,
}

impl MatchingModel {
    pub fn new(a: f64, kappa: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::domain(format!("matching constant must be positive, got {a}")));
        }
        if !(kappa > 0.0 && kappa <= 1.0) {
            return Err(Error::domain(format!("kappa must lie in (0, 1], got {kappa}")));
        }
        Ok(Self { a, kappa })
    }

    #[inline]
    pub(crate) fn w(&self, n: f64) -> f64 {
        if self.kappa == 0.5 {
            self.a / n.sqrt()
        } else {
            self.a * n.powf(-self.kappa)
        }
    }

    #[inline]
    pub(crate) fn dw(&self, n: f64) -> f64 {
        -self.kappa * self.w(n) / n
    }

    #[inline]
    pub(crate) fn d2w(&self, n: f64) -> f64 {
        self.kappa * (self.kappa + 1.0) * self.w(n) / (n * n)
    }

    pub fn waiting_time(&self, idle: f64) -> Result<f64> {
        check_idle(idle)?;
        Ok(self.w(idle))
    }

    /// `(W', W'')`.
    pub fn waiting_time_derivatives(&self, idle: f64) -> Result<(f64, f64)> {
        check_idle(idle)?;
        Ok((self.dw(idle), self.d2w(idle)))
    }

    /// Idle count at which the waiting time equals `w`.
    pub fn inverse_waiting_time(&self, w: f64) -> Result<f64> {
        if !(w > 0.0) {
            return Err(Error::domain(format!("waiting time must be positive, got {w}")));
        }
        Ok((self.a / w).powf(1.0 / self.kappa))
    }

    /// Peak of `x ↦ (N − x)/(T + W(x))` on `(0, N)`.
    ///
    /// The peak is where `1 + f(x)W'(x)` changes sign, which is exactly the
    /// Normal/WGC boundary; that indicator is increasing in `x`, so bisection
    /// finds it to machine precision.
    pub fn branch_peak(&self, fleet: f64, trip_time: f64) -> BranchPeak {
        let indicator = |x: f64| {
            let w = self.w(x);
            Ok(trip_time + w + (fleet - x) * self.dw(x))
        };
        let idle = bisect(indicator, 1e-15 * fleet, fleet, 1e-16 * fleet).unwrap_or(fleet);
        BranchPeak { idle, demand: (fleet - idle) / (trip_time + self.w(idle)) }
    }

    /// Largest demand rate a fleet can sustain in a stationary state.
    pub fn max_feasible_demand(&self, fleet: f64, trip_time: f64) -> f64 {
        self.branch_peak(fleet, trip_time).demand
    }

    /// Normal (larger) root of the platform conservation identity.
    pub fn solve_idle_platform(&self, fleet: f64, demand: f64, trip_time: f64) -> Result<IdleSolution> {
        let peak = self.branch_peak(fleet.max(f64::MIN_POSITIVE), trip_time);
        self.solve_idle_with_peak(fleet, demand, trip_time, peak)
    }

    /// Normal root of the pooled identity `N = Ñ^v + Q̃(T + W(Ñ^v))`.
    pub fn solve_idle_pooled(&self, fleet: f64, demand: f64, trip_time: f64) -> Result<IdleSolution> {
        self.solve_idle_platform(fleet, demand, trip_time)
    }

    /// As [`solve_idle_platform`](Self::solve_idle_platform) with a precomputed peak.
    pub fn solve_idle_with_peak(
        &self,
        fleet: f64,
        demand: f64,
        trip_time: f64,
        peak: BranchPeak,
    ) -> Result<IdleSolution> {
        if !(fleet > 0.0) {
            return Err(Error::domain(format!("fleet must be positive, got {fleet}")));
        }
        if !(demand >= 0.0) {
            return Err(Error::domain(format!("demand must be non-negative, got {demand}")));
        }
        if demand == 0.0 {
            return Ok(IdleSolution { idle_vehicles: fleet, regime: Regime::Normal, residual: 0.0 });
        }
        if demand > peak.demand * (1.0 + PEAK_TOLERANCE) {
            return Err(Error::InfeasibleDemand { demand, peak: peak.demand, fleet });
        }
        let idle = if demand >= peak.demand {
            peak.idle
        } else {
            let r = |x: f64| Ok(self.conservation_residual(fleet, demand, x, trip_time));
            bisect(r, peak.idle, fleet, 1e-15 * fleet)?
        };
        Ok(self.idle_solution(fleet, demand, idle, trip_time))
    }

    /// WGC (smaller) root of the conservation identity. Diagnostic only.
    pub fn solve_idle_wgc(&self, fleet: f64, demand: f64, trip_time: f64) -> Result<IdleSolution> {
        let peak = self.branch_peak(fleet, trip_time);
        if !(demand > 0.0) {
            return Err(Error::domain("the WGC root exists only for positive demand"));
        }
        if demand > peak.demand * (1.0 + PEAK_TOLERANCE) {
            return Err(Error::InfeasibleDemand { demand, peak: peak.demand, fleet });
        }
        let idle = if demand >= peak.demand {
            peak.idle
        } else {
            let r = |x: f64| Ok(self.conservation_residual(fleet, demand, x, trip_time));
            bisect(r, 1e-300_f64.max(1e-30 * fleet), peak.idle, 1e-16 * fleet)?
        };
        Ok(self.idle_solution(fleet, demand, idle, trip_time))
    }

    fn idle_solution(&self, fleet: f64, demand: f64, idle: f64, trip_time: f64) -> IdleSolution {
        IdleSolution {
            idle_vehicles: idle,
            regime: self.wgc_classify(demand, idle, 1.0, IdleMode::Platform),
            residual: self.conservation_residual(fleet, demand, idle, trip_time),
        }
    }

    #[inline]
    pub(crate) fn conservation_residual(&self, fleet: f64, demand: f64, idle: f64, trip_time: f64) -> f64 {
        fleet - idle - demand * (trip_time + self.w(idle))
    }

    /// Normal iff `share + q·W'(N^v) > 0` (share is 1 outside pooled-share mode).
    pub fn wgc_classify(&self, demand: f64, idle: f64, share: f64, mode: IdleMode) -> Regime {
        let s = match mode {
            IdleMode::PooledShare => share,
            IdleMode::Platform | IdleMode::PooledTotal => 1.0,
        };
        if s + demand * self.dw(idle) > 0.0 {
            Regime::Normal
        } else {
            Regime::Wgc
        }
    }

    /// `(dN^v/dq, d²N^v/dq²)` along the Normal branch of the identity selected by `mode`.
    pub fn idle_sensitivity(
        &self,
        demand: f64,
        idle: f64,
        trip_time: f64,
        share: f64,
        mode: IdleMode,
    ) -> Result<(f64, f64)> {
        check_idle(idle)?;
        let s = match mode {
            IdleMode::PooledShare => share,
            IdleMode::Platform | IdleMode::PooledTotal => 1.0,
        };
        let dw = self.dw(idle);
        let denom = s + demand * dw;
        if !(denom > 0.0) {
            return Err(Error::Regime(format!("sensitivity denominator {denom} at q = {demand}, idle = {idle}")));
        }
        let tw = trip_time + self.w(idle);
        let first = -tw / denom;
        let second = tw * (2.0 * dw + demand * self.d2w(idle) * first) / (denom * denom);
        Ok((first, second))
    }

    pub fn evaluate_branch_curve(
        &self,
        kind: BranchCurve,
        x: f64,
        fleet_i: f64,
        fleet_total: f64,
        trip_time: f64,
    ) -> Result<f64> {
        match kind {
            BranchCurve::IdleRatio => {
                if !(x > 0.0 && x < 1.0) {
                    return Err(Error::domain(format!("idle ratio must lie in (0, 1), got {x}")));
                }
                Ok((1.0 - x) * trip_time / (trip_time + self.w(fleet_i * x)))
            }
            _ => {
                check_idle(x)?;
                let top = match kind {
                    BranchCurve::Platform => fleet_i - x,
                    BranchCurve::PooledShare => fleet_i - fleet_i / fleet_total * x,
                    _ => fleet_total - x,
                };
                Ok(top / (trip_time + self.w(x)))
            }
        }
    }
}

fn check_idle(idle: f64) -> Result<()> {
    if idle > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("idle vehicles must be positive, got {idle}")))
    }
}
