//! The market without integration: every passenger requests from exactly one
//! platform and each platform dispatches only its own idle vehicles.

use serde::{Deserialize, Serialize};

use crate::demand::DemandCurve;
use crate::error::{Error, Result};
use crate::fixed_fare::Pools;
use crate::integrated::IntegratedEquilibrium;
use crate::market::{check_fares, check_fleets, consumer_surplus, Flag, Market, MarketMetrics, RootPolicy};
use crate::matching::{BranchPeak, IdleMode, Regime};
use crate::numeric::{all_roots, bisect, geomspace};

const AGGREGATE_SCAN: usize = 400;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FragmentedEquilibrium {
    pub fleets: Vec<f64>,
    /// Trips per hour served by each platform.
    pub demand: Vec<f64>,
    pub idle: Vec<f64>,
    /// Fares; for a platform with no demand, the highest fare at which it is
    /// still indifferent.
    pub fares: Vec<f64>,
    pub waiting: Vec<f64>,
    pub total_demand: f64,
    /// Generalized cost `B(Q)` faced by every active platform's passengers.
    pub cost: f64,
    pub regimes: Vec<Regime>,
    pub flags: Vec<Flag>,
}

impl FragmentedEquilibrium {
    pub fn platform_count(&self) -> usize {
        self.fleets.len()
    }

    pub fn total_idle(&self) -> f64 {
        self.idle.iter().sum()
    }

    fn assemble(
        market: &Market,
        fleets: &[f64],
        demand: Vec<f64>,
        idle: Vec<f64>,
        fares: Option<&[f64]>,
    ) -> Result<Self> {
        let total: f64 = demand.iter().sum();
        let cost = if total > 0.0 { market.demand.inverse(total.min(market.demand.potential()))? } else { f64::NAN };
        let waiting: Vec<f64> = idle.iter().map(|&n| market.matching.w(n)).collect();
        let fares = match fares {
            Some(f) => f.to_vec(),
            None => idle.iter().map(|&n| cost - market.time_cost(n)).collect(),
        };
        let regimes: Vec<Regime> = demand
            .iter()
            .zip(&idle)
            .map(|(&q, &n)| market.matching.wgc_classify(q, n, 1.0, IdleMode::Platform))
            .collect();
        let mut flags = Vec::new();
        if cost < 0.0 {
            flags.push(Flag::NegativeCost);
        }
        for (i, (r, &q)) in regimes.iter().zip(&demand).enumerate() {
            if *r == Regime::Wgc && q > 0.0 {
                flags.push(Flag::WgcState { pool: Some(i) });
            }
        }
        Ok(Self { fleets: fleets.to_vec(), demand, idle, fares, waiting, total_demand: total, cost, regimes, flags })
    }
}

/// Passenger split across platforms with fixed fares.
///
/// A platform whose fare plus zero-demand time cost exceeds the equilibrium
/// cost serves nobody.
pub fn evaluate_given_fares(
    market: &Market,
    fleets: &[f64],
    fares: &[f64],
    policy: RootPolicy,
) -> Result<FragmentedEquilibrium> {
    check_fleets(fleets)?;
    check_fares(fares, fleets)?;
    let state = Pools::new(market, fleets, fares).solve(policy)?;
    let mut eq = FragmentedEquilibrium::assemble(market, fleets, state.demand, state.idle, Some(fares))?;
    if eq.total_demand == 0.0 {
        eq.cost = state.cost;
    }
    Ok(eq)
}

/// A platform's idle-vehicle response to its own demand.
#[derive(Debug, Clone, Copy)]
struct Platform<'a> {
    market: &'a Market,
    fleet: f64,
    peak: BranchPeak,
}

impl<'a> Platform<'a> {
    fn new(market: &'a Market, fleet: f64) -> Self {
        Self { market, fleet, peak: market.matching.branch_peak(fleet, market.trip_time) }
    }

    fn idle(&self, q: f64) -> Result<f64> {
        let m = self.market;
        Ok(m.matching.solve_idle_with_peak(self.fleet, q, m.trip_time, self.peak)?.idle_vehicles)
    }

    /// Marginal passenger time cost of serving one more trip: `−β·dN^v/dq`.
    fn marginal_time_cost(&self, q: f64) -> Result<f64> {
        if q >= self.peak.demand {
            return Ok(f64::INFINITY);
        }
        let m = self.market;
        let x = self.idle(q)?;
        let denom = 1.0 + q * m.matching.dw(x);
        if denom <= 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(m.time_cost(x) / denom)
    }

    /// Root in `[0, peak)` of the increasing map `q ↦ marginal_time_cost(q) + extra(q) − level`,
    /// or 0 when the map already exceeds `level` at zero.
    fn solve_increasing(&self, level: f64, extra: impl Fn(f64) -> f64) -> Result<f64> {
        let g = |q: f64| Ok(self.marginal_time_cost(q)? + extra(q) - level);
        if g(0.0)? >= 0.0 {
            return Ok(0.0);
        }
        bisect(g, 0.0, self.peak.demand, 1e-15 * self.peak.demand)
    }

    /// Profit-maximizing quantity when total demand is `total`.
    fn reply(&self, total: f64) -> Result<f64> {
        let d = &self.market.demand;
        let (b, slope) = (d.inverse(total)?, d.inverse_slope(total)?);
        self.solve_increasing(b, |q| -q * slope)
    }

    /// Quantity at which the marginal time cost equals `level`.
    fn at_marginal_cost(&self, level: f64) -> Result<f64> {
        self.solve_increasing(level, |_| 0.0)
    }
}

/// Distinct fleets and how many platforms share each; identical platforms are
/// solved once so symmetric markets come out exactly symmetric.
fn group<'a>(market: &'a Market, fleets: &[f64]) -> (Vec<Platform<'a>>, Vec<usize>) {
    let mut distinct: Vec<f64> = Vec::new();
    let mut index = Vec::with_capacity(fleets.len());
    for &n in fleets {
        match distinct.iter().position(|&d| d == n) {
            Some(k) => index.push(k),
            None => {
                index.push(distinct.len());
                distinct.push(n);
            }
        }
    }
    (distinct.into_iter().map(|n| Platform::new(market, n)).collect(), index)
}

/// Nash equilibrium in quantities (equivalently fares).
///
/// For a trial total `Q` each platform's best reply satisfies its first-order
/// condition at `Q`; the equilibrium is a fixed point `Σ qᵢ(Q) = Q`. All fixed
/// points found on a scan of `Q` are reported in the flags.
pub fn solve_nash(market: &Market, fleets: &[f64]) -> Result<(FragmentedEquilibrium, MarketMetrics)> {
    check_fleets(fleets)?;
    let (platforms, index) = group(market, fleets);
    let d = &market.demand;
    let replies = |total: f64| -> Result<Vec<f64>> { platforms.iter().map(|p| p.reply(total)).collect() };
    let excess = |total: f64| -> Result<f64> {
        let r = replies(total)?;
        Ok(index.iter().map(|&k| r[k]).sum::<f64>() - total)
    };
    let peak_sum: f64 = index.iter().map(|&k| platforms[k].peak.demand).sum();
    let lo = d.q_min();
    let hi = peak_sum.min(d.potential());
    let grid: Vec<f64> = geomspace(lo, hi, AGGREGATE_SCAN).collect();
    let roots = all_roots(excess, &grid, 1e-15)?;
    let Some(&total) = roots.first() else {
        return Err(Error::ConvergenceFailure {
            message: "no fixed point of the aggregate best-reply map".into(),
            trace: grid.iter().map(|&q| excess(q).unwrap_or(f64::NAN)).collect(),
        });
    };
    let r = replies(total)?;
    let demand: Vec<f64> = index.iter().map(|&k| r[k]).collect();
    let idle = demand.iter().zip(&index).map(|(&q, &k)| platforms[k].idle(q)).collect::<Result<Vec<_>>>()?;
    let mut eq = FragmentedEquilibrium::assemble(market, fleets, demand, idle, None)?;
    if roots.len() > 1 {
        eq.flags.push(Flag::MultipleEquilibria { other_totals: roots[1..].to_vec() });
    }
    let m = metrics(&eq, market)?;
    Ok((eq, m))
}

/// Welfare-maximizing quantities.
///
/// Every active platform's marginal time cost equals `B(Q)`. Parametrized by
/// that common level `λ`, total demand is increasing in `λ`, so `B(Q(λ)) = λ`
/// has a single root.
pub fn solve_social_optimum(market: &Market, fleets: &[f64]) -> Result<(FragmentedEquilibrium, MarketMetrics)> {
    check_fleets(fleets)?;
    let (platforms, index) = group(market, fleets);
    let d = &market.demand;
    let total_at = |level: f64| -> Result<f64> {
        let r: Vec<f64> = platforms.iter().map(|p| p.at_marginal_cost(level)).collect::<Result<_>>()?;
        Ok(index.iter().map(|&k| r[k]).sum())
    };
    let gap = |level: f64| -> Result<f64> {
        let q = total_at(level)?;
        if q <= 0.0 {
            return Ok(f64::INFINITY);
        }
        if q >= d.potential() {
            return Ok(-level.abs() - 1.0);
        }
        Ok(d.inverse(q)? - level)
    };
    let lo = platforms
        .iter()
        .map(|p| p.marginal_time_cost(0.0))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let mut hi = 2.0 * lo;
    let mut steps = 0;
    while gap(hi)? > 0.0 {
        hi *= 2.0;
        steps += 1;
        if steps > 200 {
            return Err(Error::no_convergence("could not bracket the welfare-optimal marginal cost"));
        }
    }
    let level = bisect(gap, lo, hi, 1e-15 * hi)?;
    let demand = index.iter().map(|&k| platforms[k].at_marginal_cost(level)).collect::<Result<Vec<_>>>()?;
    let idle = demand.iter().zip(&index).map(|(&q, &k)| platforms[k].idle(q)).collect::<Result<Vec<_>>>()?;
    let eq = FragmentedEquilibrium::assemble(market, fleets, demand, idle, None)?;
    let m = metrics(&eq, market)?;
    Ok((eq, m))
}

pub fn metrics(eq: &FragmentedEquilibrium, market: &Market) -> Result<MarketMetrics> {
    let c = market.operating_cost;
    let t = market.trip_time;
    let profits: Vec<f64> = eq
        .demand
        .iter()
        .zip(&eq.fares)
        .zip(&eq.fleets)
        .map(|((&q, &f), &n)| if q > 0.0 { q * f - c * n } else { -c * n })
        .collect();
    let total_fleet: f64 = eq.fleets.iter().sum();
    let time_cost: f64 = eq.demand.iter().zip(&eq.idle).map(|(&q, &n)| q * market.time_cost(n)).sum();
    let gross = if eq.total_demand > 0.0 { market.demand.gross_surplus(eq.total_demand)? } else { 0.0 };
    Ok(MarketMetrics {
        total_profit: profits.iter().sum(),
        profits,
        consumer_surplus: consumer_surplus(market, eq.total_demand)?,
        welfare: gross - time_cost - c * total_fleet,
        utilization: eq.demand.iter().zip(&eq.fleets).map(|(&q, &n)| q * t / n).collect(),
        integrator_revenue: 0.0,
    })
}

/// Profit first-order residuals `B(Q) + qᵢB'(Q) + β·dNᵢ^v/dqᵢ` (HKD).
///
/// For a platform with no demand, the positive part of the same expression
/// at zero, which must vanish.
pub fn nash_foc_residuals(eq: &FragmentedEquilibrium, market: &Market) -> Result<Vec<f64>> {
    let d = &market.demand;
    let (b, slope) = (d.inverse(eq.total_demand)?, d.inverse_slope(eq.total_demand)?);
    foc(eq, market, |q| b + q * slope)
}

/// Welfare first-order residuals `B(Q) + β·dNᵢ^v/dqᵢ` (HKD).
pub fn welfare_foc_residuals(eq: &FragmentedEquilibrium, market: &Market) -> Result<Vec<f64>> {
    let b = market.demand.inverse(eq.total_demand)?;
    foc(eq, market, |_| b)
}

fn foc(eq: &FragmentedEquilibrium, market: &Market, marginal_revenue: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
    (0..eq.platform_count())
        .map(|i| {
            let (q, n) = (eq.demand[i], eq.idle[i]);
            let (dn, _) = market.matching.idle_sensitivity(q, n, market.trip_time, 1.0, IdleMode::Platform)?;
            let r = marginal_revenue(q) + market.beta * dn;
            Ok(if q > 0.0 { r } else { r.max(0.0) })
        })
        .collect()
}

/// Commission below which integration is guaranteed to raise Nash demand:
/// `B(Q̃) + Q̃B'(Q̃)/I − B(Q) − QB'(Q)/I`, evaluated at the two Nash states.
pub fn demand_gain_threshold(
    fragmented: &FragmentedEquilibrium,
    integrated: &IntegratedEquilibrium,
    market: &Market,
    platforms: usize,
) -> Result<f64> {
    let d = &market.demand;
    let i = platforms as f64;
    let side = |q: f64| -> Result<f64> { Ok(d.inverse(q)? + q * d.inverse_slope(q)? / i) };
    Ok(side(integrated.total_demand)? - side(fragmented.total_demand)?)
}
