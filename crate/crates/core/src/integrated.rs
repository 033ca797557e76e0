//! Full integration: every passenger books through the integrator, which
//! dispatches from the pooled idle vehicles of all platforms.

use serde::{Deserialize, Serialize};

use crate::demand::DemandCurve;
use crate::error::{Error, Result};
use crate::fixed_fare::Pools;
use crate::market::{check_fares, check_fleets, consumer_surplus, Flag, Market, MarketMetrics, RootPolicy};
use crate::matching::{BranchPeak, IdleMode, Regime};
use crate::mixed;
use crate::numeric::bisect;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratedEquilibrium {
    pub fleets: Vec<f64>,
    /// Fleet shares `Nᵢ/N`; also each platform's share of demand and idle vehicles.
    pub shares: Vec<f64>,
    pub fares: Vec<f64>,
    /// Share-weighted fare paid through the integrator.
    pub effective_fare: f64,
    pub tau: f64,
    pub demand: Vec<f64>,
    pub total_demand: f64,
    pub pooled_idle: f64,
    pub idle: Vec<f64>,
    /// Waiting time of the shared pool.
    pub waiting: f64,
    /// Generalized cost `B(Q̃)`.
    pub cost: f64,
    pub regime: Regime,
    pub flags: Vec<Flag>,
}

impl IntegratedEquilibrium {
    pub fn platform_count(&self) -> usize {
        self.fleets.len()
    }

    pub fn total_fleet(&self) -> f64 {
        self.fleets.iter().sum()
    }

    /// Market share of each platform in the integrator, `q̃ᵢ/Q̃`.
    pub fn market_shares(&self) -> Vec<f64> {
        if self.total_demand > 0.0 {
            self.demand.iter().map(|q| q / self.total_demand).collect()
        } else {
            self.shares.clone()
        }
    }

    fn assemble(
        market: &Market,
        fleets: &[f64],
        fares: Vec<f64>,
        tau: f64,
        total: f64,
        pooled_idle: f64,
    ) -> Result<Self> {
        let n: f64 = fleets.iter().sum();
        let shares: Vec<f64> = fleets.iter().map(|f| f / n).collect();
        let effective_fare = shares.iter().zip(&fares).map(|(s, f)| s * f).sum();
        let regime = market.matching.wgc_classify(total, pooled_idle, 1.0, IdleMode::PooledTotal);
        let cost = if total > 0.0 { market.demand.inverse(total.min(market.demand.potential()))? } else { f64::NAN };
        let mut flags = Vec::new();
        if cost < 0.0 {
            flags.push(Flag::NegativeCost);
        }
        if regime == Regime::Wgc && total > 0.0 {
            flags.push(Flag::WgcState { pool: None });
        }
        Ok(Self {
            fleets: fleets.to_vec(),
            demand: shares.iter().map(|s| s * total).collect(),
            idle: shares.iter().map(|s| s * pooled_idle).collect(),
            shares,
            fares,
            effective_fare,
            tau,
            total_demand: total,
            pooled_idle,
            waiting: market.matching.w(pooled_idle),
            cost,
            regime,
            flags,
        })
    }
}

/// All-integrator state at fixed fares: one pool of fleet `N` at the
/// share-weighted fare plus the commission.
pub fn evaluate_given_fares(
    market: &Market,
    fleets: &[f64],
    fares: &[f64],
    tau: f64,
    policy: RootPolicy,
) -> Result<IntegratedEquilibrium> {
    check_fleets(fleets)?;
    check_fares(fares, fleets)?;
    let n: f64 = fleets.iter().sum();
    let effective: f64 = fleets.iter().zip(fares).map(|(f, p)| f / n * p).sum();
    let state = Pools::new(market, &[n], &[effective + tau]).solve(policy)?;
    let mut eq = IntegratedEquilibrium::assemble(market, fleets, fares.to_vec(), tau, state.demand[0], state.idle[0])?;
    if eq.total_demand == 0.0 {
        eq.cost = state.cost;
    }
    Ok(eq)
}

/// Fragmented Nash fares kept after integration is introduced.
pub fn unchanged_fare_outcome(
    market: &Market,
    fragmented_fares: &[f64],
    tau: f64,
    fleets: &[f64],
) -> Result<(IntegratedEquilibrium, MarketMetrics)> {
    let eq = evaluate_given_fares(market, fleets, fragmented_fares, tau, RootPolicy::NormalOnly)?;
    let m = metrics(&eq, market)?;
    Ok((eq, m))
}

struct Pool<'a> {
    market: &'a Market,
    fleet: f64,
    peak: BranchPeak,
}

impl<'a> Pool<'a> {
    fn new(market: &'a Market, fleets: &[f64]) -> Self {
        let fleet = fleets.iter().sum();
        Self { market, fleet, peak: market.matching.branch_peak(fleet, market.trip_time) }
    }

    fn idle(&self, q: f64) -> Result<f64> {
        let m = self.market;
        Ok(m.matching.solve_idle_with_peak(self.fleet, q, m.trip_time, self.peak)?.idle_vehicles)
    }

    /// `−β·dÑ^v/dQ̃`.
    fn marginal_time_cost(&self, q: f64) -> Result<f64> {
        if q >= self.peak.demand {
            return Ok(f64::INFINITY);
        }
        let x = self.idle(q)?;
        let denom = 1.0 + q * self.market.matching.dw(x);
        if denom <= 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(self.market.time_cost(x) / denom)
    }

    /// Root in total demand of the decreasing map `B(Q) + weight·Q·B'(Q) − MC(Q) − tau`.
    fn solve(&self, weight: f64, tau: f64) -> Result<f64> {
        let d = &self.market.demand;
        let g = |q: f64| -> Result<f64> {
            Ok(d.inverse(q)? + weight * q * d.inverse_slope(q)? - self.marginal_time_cost(q)? - tau)
        };
        let lo = d.q_min();
        let hi = self.peak.demand.min(d.potential());
        if g(lo)? <= 0.0 {
            return Err(Error::NoEquilibrium(format!("commission {tau} leaves no profitable demand")));
        }
        if g(hi)? > 0.0 {
            return Ok(hi);
        }
        bisect(g, lo, hi, 1e-15 * hi)
    }
}

/// Nash equilibrium under integration.
///
/// Dispatch splits demand in proportion to fleets, so the platforms choose a
/// single total. The solution is the fleet-weighted combination of their
/// first-order conditions, `B + H·Q̃B' + β·dÑ^v/dQ̃ − τ = 0` with
/// `H = Σ(Nᵢ/N)²`: exact for equal fleets and a single platform; with unequal
/// fleets the remaining per-platform gaps are reported by
/// [`nash_foc_residuals`]. All platforms charge the same fare.
pub fn solve_nash(market: &Market, fleets: &[f64], tau: f64) -> Result<(IntegratedEquilibrium, MarketMetrics)> {
    check_fleets(fleets)?;
    let pool = Pool::new(market, fleets);
    let h: f64 = fleets.iter().map(|f| (f / pool.fleet).powi(2)).sum();
    let total = pool.solve(h, tau)?;
    let idle = pool.idle(total)?;
    let fare = market.demand.inverse(total)? - market.time_cost(idle) - tau;
    let mut eq = IntegratedEquilibrium::assemble(market, fleets, vec![fare; fleets.len()], tau, total, idle)?;
    let tau_1 = mixed::all_integrator_threshold(market, fleets, &eq.fares)?;
    if tau > tau_1 + 1e-6 {
        eq.flags.push(Flag::CommissionAboveThreshold { tau_1 });
    }
    let m = metrics(&eq, market)?;
    Ok((eq, m))
}

/// Welfare-maximizing total demand `B(Q̃) = −β·dÑ^v/dQ̃`, split by fleet.
/// Depends on the fleets only through their sum.
pub fn solve_social_optimum(market: &Market, fleets: &[f64]) -> Result<(IntegratedEquilibrium, MarketMetrics)> {
    check_fleets(fleets)?;
    let pool = Pool::new(market, fleets);
    let total = pool.solve(0.0, 0.0)?;
    let idle = pool.idle(total)?;
    let fare = market.demand.inverse(total)? - market.time_cost(idle);
    let eq = IntegratedEquilibrium::assemble(market, fleets, vec![fare; fleets.len()], 0.0, total, idle)?;
    let m = metrics(&eq, market)?;
    Ok((eq, m))
}

pub fn metrics(eq: &IntegratedEquilibrium, market: &Market) -> Result<MarketMetrics> {
    let c = market.operating_cost;
    let profits: Vec<f64> =
        eq.demand.iter().zip(&eq.fares).zip(&eq.fleets).map(|((&q, &f), &n)| q * f - c * n).collect();
    let q = eq.total_demand;
    let gross = if q > 0.0 { market.demand.gross_surplus(q)? } else { 0.0 };
    let time_cost = if q > 0.0 { q * market.time_cost(eq.pooled_idle) } else { 0.0 };
    Ok(MarketMetrics {
        total_profit: profits.iter().sum(),
        profits,
        consumer_surplus: consumer_surplus(market, q)?,
        welfare: gross - time_cost - c * eq.total_fleet(),
        utilization: eq.demand.iter().zip(&eq.fleets).map(|(&q, &n)| q * market.trip_time / n).collect(),
        integrator_revenue: eq.tau * q,
    })
}

fn share_sensitivity(eq: &IntegratedEquilibrium, market: &Market, i: usize) -> Result<f64> {
    let (dn, _) = market.matching.idle_sensitivity(
        eq.demand[i],
        eq.pooled_idle,
        market.trip_time,
        eq.shares[i],
        IdleMode::PooledShare,
    )?;
    Ok(dn)
}

/// Per-platform profit first-order residuals
/// `B(Q̃) + q̃ᵢB'(Q̃) + (Nᵢ/N)β·dÑ^v/dq̃ᵢ − τ` (HKD).
///
/// Zero for equal fleets. With unequal fleets they are the shadow prices of
/// proportional dispatch; their fleet-weighted sum,
/// [`dispatch_foc_residual`], is what the solver drives to zero.
pub fn nash_foc_residuals(eq: &IntegratedEquilibrium, market: &Market) -> Result<Vec<f64>> {
    let d = &market.demand;
    let (b, slope) = (d.inverse(eq.total_demand)?, d.inverse_slope(eq.total_demand)?);
    (0..eq.platform_count())
        .map(|i| {
            let dn = share_sensitivity(eq, market, i)?;
            Ok(b + eq.demand[i] * slope + eq.shares[i] * market.beta * dn - eq.tau)
        })
        .collect()
}

/// `Σ (Nᵢ/N)·residualᵢ` of [`nash_foc_residuals`].
pub fn dispatch_foc_residual(eq: &IntegratedEquilibrium, market: &Market) -> Result<f64> {
    Ok(nash_foc_residuals(eq, market)?.iter().zip(&eq.shares).map(|(r, s)| r * s).sum())
}

/// Per-platform welfare residuals `B(Q̃) + (Nᵢ/N)β·dÑ^v/dq̃ᵢ` (HKD).
pub fn welfare_foc_residuals(eq: &IntegratedEquilibrium, market: &Market) -> Result<Vec<f64>> {
    let b = market.demand.inverse(eq.total_demand)?;
    (0..eq.platform_count()).map(|i| Ok(b + eq.shares[i] * market.beta * share_sensitivity(eq, market, i)?)).collect()
}
