//! Partial adoption at fixed fares: some passengers book through the
//! integrator, the rest directly with a platform.
//!
//! The interior state is parametrized by the common cost `c` and the
//! integrator load factor `k = q̃ᵢ₁(T + W(Ñ^v))/Ñᵢ^v`, equal across platforms
//! because dispatch is proportional to idle vehicles. A platform that still
//! serves direct passengers holds exactly the idle stock at which its direct
//! cost equals `c`; one that does not keeps `Nᵢ/(1 + k)` idle.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::demand::DemandCurve;
use crate::error::{Error, Result};
use crate::market::{check_fares, check_fleets, Flag, Market, RootPolicy};
use crate::numeric::{bisect, geomspace};
use crate::{fragmented, integrated};

const COST_SCAN: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MixedRegime {
    AllIntegrator,
    Mixed,
    NoIntegrator,
}

impl MixedRegime {
    pub fn label(self) -> &'static str {
        match self {
            MixedRegime::AllIntegrator => "all-integrator",
            MixedRegime::Mixed => "mixed",
            MixedRegime::NoIntegrator => "no-integrator",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedEquilibrium {
    pub fleets: Vec<f64>,
    pub fares: Vec<f64>,
    pub tau: f64,
    /// Trips each platform serves for the integrator.
    pub integrator_demand: Vec<f64>,
    /// Trips each platform serves from its own app.
    pub direct_demand: Vec<f64>,
    pub integrator_total: f64,
    pub direct_total: f64,
    pub total_demand: f64,
    /// Idle vehicles visible to the integrator, `ΣÑᵢ^v`.
    pub pooled_idle: f64,
    pub idle: Vec<f64>,
    /// Generalized cost through the integrator.
    pub integrator_cost: f64,
    /// Generalized cost of booking each platform directly.
    pub direct_costs: Vec<f64>,
    /// `B(Q̃)`.
    pub cost: f64,
    pub regime: MixedRegime,
    pub flags: Vec<Flag>,
}

impl MixedEquilibrium {
    pub fn min_direct_cost(&self) -> f64 {
        self.direct_costs.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Commission band that supports partial adoption at given fares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommissionRange {
    /// Largest commission at which everyone books through the integrator.
    pub tau_1: f64,
    /// Smallest commission at which nobody does.
    pub tau_2: f64,
    /// Fare spread `min Fᵢ − max Fᵢ`: below it integration always wins.
    pub sufficient_all: f64,
    /// `β·W(N_j^v)` of the cheapest platform without integration: above it
    /// integration always loses.
    pub sufficient_none: f64,
}

fn integrator_cost(market: &Market, fares: &[f64], idle: &[f64], tau: f64) -> f64 {
    let x: f64 = idle.iter().sum();
    let fare: f64 = fares.iter().zip(idle).map(|(f, n)| f * n / x).sum();
    fare + market.time_cost(x) + tau
}

fn direct_costs(market: &Market, fares: &[f64], idle: &[f64]) -> Vec<f64> {
    fares.iter().zip(idle).map(|(f, &n)| f + market.time_cost(n)).collect()
}

fn all_integrator(market: &Market, fleets: &[f64], fares: &[f64], tau: f64) -> Result<MixedEquilibrium> {
    let eq = integrated::evaluate_given_fares(market, fleets, fares, tau, RootPolicy::PreferNormal)?;
    let c1 = eq.effective_fare + market.time_cost(eq.pooled_idle) + tau;
    let c2 = direct_costs(market, fares, &eq.idle);
    Ok(MixedEquilibrium {
        fleets: fleets.to_vec(),
        fares: fares.to_vec(),
        tau,
        integrator_demand: eq.demand.clone(),
        direct_demand: vec![0.0; fleets.len()],
        integrator_total: eq.total_demand,
        direct_total: 0.0,
        total_demand: eq.total_demand,
        pooled_idle: eq.pooled_idle,
        idle: eq.idle,
        integrator_cost: c1,
        direct_costs: c2,
        cost: eq.cost,
        regime: MixedRegime::AllIntegrator,
        flags: eq.flags,
    })
}

fn no_integrator(market: &Market, fleets: &[f64], fares: &[f64], tau: f64) -> Result<MixedEquilibrium> {
    let eq = fragmented::evaluate_given_fares(market, fleets, fares, RootPolicy::PreferNormal)?;
    let c1 = integrator_cost(market, fares, &eq.idle, tau);
    let c2 = direct_costs(market, fares, &eq.idle);
    Ok(MixedEquilibrium {
        fleets: fleets.to_vec(),
        fares: fares.to_vec(),
        tau,
        integrator_demand: vec![0.0; fleets.len()],
        direct_demand: eq.demand.clone(),
        integrator_total: 0.0,
        direct_total: eq.total_demand,
        total_demand: eq.total_demand,
        pooled_idle: eq.total_idle(),
        idle: eq.idle,
        integrator_cost: c1,
        direct_costs: c2,
        cost: eq.cost,
        regime: MixedRegime::NoIntegrator,
        flags: eq.flags,
    })
}

/// Allocation at common cost `cost` and load factor `load`.
struct Split {
    idle: Vec<f64>,
    integrator: Vec<f64>,
    direct: Vec<f64>,
}

struct Interior<'a> {
    market: &'a Market,
    fleets: &'a [f64],
    fares: &'a [f64],
    tau: f64,
}

impl Interior<'_> {
    fn split(&self, cost: f64, load: f64) -> Split {
        let m = self.market;
        let mut idle = Vec::with_capacity(self.fleets.len());
        let mut direct = Vec::with_capacity(self.fleets.len());
        for (&n, &f) in self.fleets.iter().zip(self.fares) {
            let w = (cost - f) / m.beta - m.trip_time;
            let target =
                if w > 0.0 { m.matching.inverse_waiting_time(w).unwrap_or(f64::INFINITY) } else { f64::INFINITY };
            if target * (1.0 + load) < n {
                idle.push(target);
                direct.push((n - target * (1.0 + load)) / (m.trip_time + w));
            } else {
                idle.push(n / (1.0 + load));
                direct.push(0.0);
            }
        }
        let x: f64 = idle.iter().sum();
        let tw = m.trip_time + m.matching.w(x);
        let integrator = idle.iter().map(|&n| load * n / tw).collect();
        Split { idle, integrator, direct }
    }

    fn supply_gap(&self, cost: f64, load: f64) -> f64 {
        let s = self.split(cost, load);
        s.integrator.iter().chain(&s.direct).sum::<f64>() - self.market.demand.realized(cost)
    }

    fn cost_gap(&self, cost: f64, load: f64) -> f64 {
        integrator_cost(self.market, self.fares, &self.split(cost, load).idle, self.tau) - cost
    }

    /// Load factor at which the first platform runs out of vehicles for
    /// direct passengers.
    fn first_breakpoint(&self, cost: f64) -> f64 {
        let m = self.market;
        self.fleets
            .iter()
            .zip(self.fares)
            .map(|(&n, &f)| {
                let w = (cost - f) / m.beta - m.trip_time;
                match m.matching.inverse_waiting_time(w) {
                    Ok(target) if w > 0.0 => (n / target - 1.0).max(0.0),
                    _ => 0.0,
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Load factor at which the integrator cost equals `cost` with at least
    /// one platform carrying no direct passengers. While every platform
    /// still serves direct passengers the pooled idle stock does not depend
    /// on the load, so the integrator cost only starts rising past the first
    /// breakpoint.
    fn load_at(&self, cost: f64) -> f64 {
        if self.cost_gap(cost, 0.0) >= 0.0 {
            return 0.0;
        }
        let mut hi = 1.0;
        while self.cost_gap(cost, hi) < 0.0 && hi < 1e15 {
            hi *= 2.0;
        }
        bisect(|k| Ok(self.cost_gap(cost, k)), 0.0, hi, 0.0).unwrap_or(hi)
    }

    fn market_gap(&self, cost: f64) -> f64 {
        self.supply_gap(cost, self.load_at(cost))
    }

    /// Interior state in which every platform keeps direct passengers: the
    /// cost is pinned by the integrator cost alone and the load clears supply.
    fn all_direct(&self, lower: f64, upper: f64) -> Option<(f64, f64)> {
        if self.cost_gap(lower, 0.0) < 0.0 || self.cost_gap(upper, 0.0) >= 0.0 {
            return None;
        }
        let cost = bisect(|c| Ok(self.cost_gap(c, 0.0)), lower, upper, 0.0).ok()?;
        let k1 = self.first_breakpoint(cost);
        if !(k1 > 0.0) || self.supply_gap(cost, 0.0) > 0.0 || self.supply_gap(cost, k1) < 0.0 {
            return None;
        }
        let load = bisect(|k| Ok(self.supply_gap(cost, k)), 0.0, k1, 0.0).ok()?;
        Some((cost, load))
    }

    /// Interior state in which some platform serves only the integrator.
    fn some_pooled(&self, lower: f64, upper: f64) -> Option<(f64, f64)> {
        let span = upper - lower;
        let mut prev = (upper, self.market_gap(upper));
        for d in geomspace(span, 1e-12 * span, COST_SCAN).skip(1) {
            let c = lower + d;
            let g = self.market_gap(c);
            if (g < 0.0) != (prev.1 < 0.0) {
                let cost = bisect(|c| Ok(self.market_gap(c)), c, prev.0, 0.0).ok()?;
                let load = self.load_at(cost);
                let tol = 1e-9 * self.market.demand.realized(cost).max(1.0);
                return (self.supply_gap(cost, load).abs() <= tol).then_some((cost, load));
            }
            prev = (c, g);
        }
        None
    }

    fn solve(&self, upper: f64) -> Result<MixedEquilibrium> {
        let m = self.market;
        let lower = self.fleets.iter().zip(self.fares).map(|(&n, f)| f + m.time_cost(n)).fold(f64::INFINITY, f64::min);
        if !(upper > lower) {
            return Err(Error::NoEquilibrium("no cost range supports direct bookings".into()));
        }
        let (cost, load) = match self.all_direct(lower, upper) {
            Some(found) => found,
            None => {
                // Below the all-direct cost the integrator is left unused.
                let from = if self.cost_gap(lower, 0.0) < 0.0 {
                    lower
                } else {
                    bisect(|c| Ok(self.cost_gap(c, 0.0)), lower, upper, 0.0).unwrap_or(lower)
                };
                self.some_pooled(from, upper).ok_or_else(|| {
                    Error::NoEquilibrium(format!("no interior partial-adoption state at commission {}", self.tau))
                })?
            }
        };
        let s = self.split(cost, load);
        let integrator_total: f64 = s.integrator.iter().sum();
        let direct_total: f64 = s.direct.iter().sum();
        let total = integrator_total + direct_total;
        let b = m.demand.inverse(total.min(m.demand.potential()))?;
        let mut flags = Vec::new();
        let x: f64 = s.idle.iter().sum();
        if m.matching.wgc_classify(integrator_total, x, 1.0, crate::matching::IdleMode::PooledTotal)
            == crate::matching::Regime::Wgc
        {
            flags.push(Flag::WgcState { pool: None });
        }
        if b < 0.0 {
            flags.push(Flag::NegativeCost);
        }
        Ok(MixedEquilibrium {
            fleets: self.fleets.to_vec(),
            fares: self.fares.to_vec(),
            tau: self.tau,
            integrator_total,
            direct_total,
            total_demand: total,
            pooled_idle: x,
            integrator_cost: integrator_cost(m, self.fares, &s.idle, self.tau),
            direct_costs: direct_costs(m, self.fares, &s.idle),
            idle: s.idle,
            integrator_demand: s.integrator,
            direct_demand: s.direct,
            cost: b,
            regime: MixedRegime::Mixed,
            flags,
        })
    }
}

/// Equilibrium with fixed fares and commission `tau`.
///
/// Returns the all-integrator state when no passenger would rather book
/// directly, the no-integrator state when no passenger would rather use the
/// integrator, and otherwise the interior state where both costs are equal.
pub fn solve_mixed(market: &Market, fleets: &[f64], fares: &[f64], tau: f64) -> Result<MixedEquilibrium> {
    check_fleets(fleets)?;
    check_fares(fares, fleets)?;
    let ai = all_integrator(market, fleets, fares, tau)?;
    if ai.integrator_cost <= ai.min_direct_cost() {
        return Ok(ai);
    }
    let ni = no_integrator(market, fleets, fares, tau)?;
    if ni.integrator_cost >= ni.min_direct_cost() {
        return Ok(ni);
    }
    let upper = ni.cost;
    Interior { market, fleets, fares, tau }.solve(upper)
}

/// Largest commission at which the all-integrator state is stable.
pub fn all_integrator_threshold(market: &Market, fleets: &[f64], fares: &[f64]) -> Result<f64> {
    check_fleets(fleets)?;
    check_fares(fares, fleets)?;
    let stable = |tau: f64| -> Result<bool> {
        let ai = all_integrator(market, fleets, fares, tau)?;
        Ok(ai.integrator_cost <= ai.min_direct_cost())
    };
    let (mut lo, mut hi);
    let mut step = 1.0;
    if stable(0.0)? {
        lo = 0.0;
        loop {
            hi = lo + step;
            if !stable(hi)? {
                break;
            }
            lo = hi;
            step *= 2.0;
            if step > 1e9 {
                return Err(Error::no_convergence("all-integrator state stable for every commission"));
            }
        }
    } else {
        hi = 0.0;
        loop {
            lo = hi - step;
            if stable(lo)? {
                break;
            }
            hi = lo;
            step *= 2.0;
            if step > 1e9 {
                return Err(Error::no_convergence("all-integrator state never stable"));
            }
        }
    }
    while hi - lo > 1e-10 * lo.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if stable(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Smallest commission at which the no-integrator state is stable. The
/// integrator cost there is affine in the commission, so this is exact.
pub fn no_integrator_threshold(market: &Market, fleets: &[f64], fares: &[f64]) -> Result<f64> {
    check_fleets(fleets)?;
    check_fares(fares, fleets)?;
    let ni = no_integrator(market, fleets, fares, 0.0)?;
    Ok(ni.min_direct_cost() - ni.integrator_cost)
}

pub fn commission_range(market: &Market, fleets: &[f64], fares: &[f64]) -> Result<CommissionRange> {
    let tau_1 = all_integrator_threshold(market, fleets, fares)?;
    let tau_2 = no_integrator_threshold(market, fleets, fares)?;
    if tau_1 > tau_2 + 1e-6 {
        return Err(Error::DegenerateRange { tau_1, tau_2 });
    }
    let ni = fragmented::evaluate_given_fares(market, fleets, fares, RootPolicy::PreferNormal)?;
    let cheapest = (0..fares.len()).min_by(|&a, &b| fares[a].total_cmp(&fares[b])).unwrap_or(0);
    let max_fare = fares.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(CommissionRange {
        tau_1,
        tau_2,
        sufficient_all: fares[cheapest] - max_fare,
        sufficient_none: market.beta * market.matching.w(ni.idle[cheapest]),
    })
}

/// One row of a commission sweep.
#[derive(Debug, Clone)]
pub struct CommissionRow {
    pub tau: f64,
    pub outcome: Result<MixedEquilibrium>,
}

/// [`solve_mixed`] along an ascending commission grid.
pub fn sweep_commission(market: &Market, fleets: &[f64], fares: &[f64], taus: &[f64]) -> Vec<CommissionRow> {
    taus.par_iter().map(|&tau| CommissionRow { tau, outcome: solve_mixed(market, fleets, fares, tau) }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_fares_and_no_commission_pool_everyone() {
        let m = Market::baseline();
        let eq = solve_mixed(&m, &[2000.0; 3], &[70.0; 3], 0.0).unwrap();
        assert_eq!(eq.regime, MixedRegime::AllIntegrator);
    }

    #[test]
    fn prohibitive_commission_leaves_the_fragmented_market() {
        let m = Market::baseline();
        let eq = solve_mixed(&m, &[2000.0; 3], &[70.0; 3], 1e6).unwrap();
        assert_eq!(eq.regime, MixedRegime::NoIntegrator);
        let f = fragmented::evaluate_given_fares(&m, &[2000.0; 3], &[70.0; 3], RootPolicy::PreferNormal).unwrap();
        assert_eq!(eq.total_demand, f.total_demand);
    }

    #[test]
    fn interior_state_equalizes_costs() {
        let m = Market::baseline();
        let fleets = [2000.0; 3];
        let r = commission_range(&m, &fleets, &[70.0; 3]).unwrap();
        assert!(r.tau_1 < r.tau_2);
        let eq = solve_mixed(&m, &fleets, &[70.0; 3], 0.5 * (r.tau_1 + r.tau_2)).unwrap();
        assert_eq!(eq.regime, MixedRegime::Mixed);
        assert!((eq.integrator_cost - eq.min_direct_cost()).abs() < 1e-6);
        assert!((eq.cost - eq.integrator_cost).abs() < 1e-6);
        assert!(eq.integrator_total > 0.0 && eq.integrator_total < eq.total_demand);
        let n = eq.idle[0];
        assert!(eq.idle.iter().all(|&x| (x - n).abs() < 1e-9 * n));
    }

    #[test]
    fn equal_fares_interior_matches_the_waiting_gap() {
        let m = Market::baseline();
        let fleets = [3000.0; 3];
        let r = commission_range(&m, &fleets, &[70.0; 3]).unwrap();
        let tau = 0.5 * (r.tau_1 + r.tau_2);
        let eq = solve_mixed(&m, &fleets, &[70.0; 3], tau).unwrap();
        let n = eq.idle[0];
        let gap = m.beta * (m.matching.w(n) - m.matching.w(3.0 * n));
        assert!((gap - tau).abs() < 1e-6, "{gap} vs {tau}");
    }

    #[test]
    fn single_platform_threshold_is_zero() {
        let m = Market::baseline();
        let t = all_integrator_threshold(&m, &[2e4], &[60.0]).unwrap();
        assert!(t.abs() < 1e-8, "{t}");
    }
}
