//! Brute-force checks for solver output.
//!
//! Nothing here calls the solvers' numerical routines: idle vehicles are
//! recovered by a golden-section peak search and plain bisection written
//! locally, and profits and welfare are evaluated from their definitions.

use rayon::prelude::*;
use serde::Serialize;

use crate::demand::DemandCurve;
use crate::error::{Error, Result};
use crate::fragmented::FragmentedEquilibrium;
use crate::integrated::IntegratedEquilibrium;
use crate::market::Market;
use crate::mixed::MixedEquilibrium;

/// Market structure an oracle evaluates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Structure {
    Fragmented,
    Integrated { tau: f64 },
}

/// Central difference `(f(x + h) − f(x − h)) / 2h`.
pub fn finite_difference<F>(f: F, x: f64, h: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(h > 0.0) {
        return Err(Error::domain(format!("step must be positive, got {h}")));
    }
    Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Peak `(x, value)` of the branch curve `(N − x)/(T + W(x))` by golden section.
pub fn golden_peak(market: &Market, fleet: f64) -> (f64, f64) {
    let f = |x: f64| (fleet - x) / (market.trip_time + market.matching.a * x.powf(-market.matching.kappa));
    let (mut a, mut b) = (0.0_f64, fleet);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if b - a < 1e-14 * fleet {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Larger root of `N = x + q(T + W(x))`, or `None` past the peak.
fn idle_root(market: &Market, fleet: f64, q: f64, peak_x: f64) -> Option<f64> {
    if q == 0.0 {
        return Some(fleet);
    }
    let m = &market.matching;
    let r = |x: f64| fleet - x - q * (market.trip_time + m.a * x.powf(-m.kappa));
    let (mut lo, mut hi) = (peak_x, fleet);
    if r(lo) < 0.0 {
        return None;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if r(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

fn time_cost(market: &Market, idle: f64) -> f64 {
    let m = &market.matching;
    market.beta * (market.trip_time + m.a * idle.powf(-m.kappa))
}

/// Profit-maximizing own quantity of `platform` on a uniform grid of
/// `grid_size` points over `[0, 0.999·max feasible]`, others held at `others`
/// (the entry at `platform` is ignored).
///
/// Under integration the platform's idle stock follows from its own
/// conservation identity against the pool, so its feasible range is its fleet
/// share of the pooled peak.
pub fn grid_best_response(
    structure: Structure,
    platform: usize,
    others: &[f64],
    fleets: &[f64],
    market: &Market,
    grid_size: usize,
) -> f64 {
    let rest: f64 = others.iter().enumerate().filter(|&(j, _)| j != platform).map(|(_, q)| q).sum();
    let n_i = fleets[platform];
    let c = market.operating_cost;
    let d = &market.demand;
    let (pool, share, tau) = match structure {
        Structure::Fragmented => (n_i, 1.0, 0.0),
        Structure::Integrated { tau } => {
            let n: f64 = fleets.iter().sum();
            (n, n_i / n, tau)
        }
    };
    let (peak_x, peak_q) = golden_peak(market, pool);
    let top = 0.999 * share * peak_q;
    let profit = |q: f64| -> f64 {
        if q == 0.0 {
            return -c * n_i;
        }
        let total = q + rest;
        if total > d.potential() {
            return f64::NEG_INFINITY;
        }
        let Some(x) = idle_root(market, pool, q / share, peak_x) else {
            return f64::NEG_INFINITY;
        };
        let Ok(b) = d.inverse(total) else {
            return f64::NEG_INFINITY;
        };
        q * (b - time_cost(market, x) - tau) - c * n_i
    };
    let step = top / (grid_size - 1) as f64;
    (0..grid_size)
        .into_par_iter()
        .map(|k| {
            let q = k as f64 * step;
            (q, profit(q))
        })
        .reduce(|| (0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a })
        .0
}

/// Welfare-maximizing quantities on a grid: one dimension (total demand) under
/// integration, one per platform (at most three) without.
///
/// The fragmented search starts on a full grid of `grid_size` points per axis
/// and then re-grids a few cells around the incumbent until the cell is tiny.
pub fn grid_welfare_max(structure: Structure, fleets: &[f64], market: &Market, grid_size: usize) -> Result<Vec<f64>> {
    let d = &market.demand;
    let c = market.operating_cost;
    let n: f64 = fleets.iter().sum();
    match structure {
        Structure::Integrated { .. } => {
            let (peak_x, peak_q) = golden_peak(market, n);
            let top = 0.999 * peak_q.min(d.potential());
            let step = top / (grid_size - 1) as f64;
            let welfare = |q: f64| -> f64 {
                if q == 0.0 {
                    return -c * n;
                }
                let Some(x) = idle_root(market, n, q, peak_x) else {
                    return f64::NEG_INFINITY;
                };
                d.gross_surplus(q).unwrap_or(f64::NEG_INFINITY) - q * time_cost(market, x) - c * n
            };
            let (q, _) = (0..grid_size)
                .into_par_iter()
                .map(|k| {
                    let q = k as f64 * step;
                    (q, welfare(q))
                })
                .reduce(|| (0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
            Ok(fleets.iter().map(|f| f / n * q).collect())
        }
        Structure::Fragmented => {
            if fleets.len() > 3 {
                return Err(Error::Dimension { max: 3, got: fleets.len() });
            }
            let peaks: Vec<(f64, f64)> = fleets.iter().map(|&f| golden_peak(market, f)).collect();
            let time = |i: usize, q: f64| -> f64 {
                if q == 0.0 {
                    return 0.0;
                }
                match idle_root(market, fleets[i], q, peaks[i].0) {
                    Some(x) => q * time_cost(market, x),
                    None => f64::INFINITY,
                }
            };
            let mut lo: Vec<f64> = vec![0.0; fleets.len()];
            let mut hi: Vec<f64> = peaks.iter().map(|p| 0.999 * p.1).collect();
            let mut points = grid_size;
            let mut best = vec![0.0; fleets.len()];
            for _level in 0..8 {
                let axes: Vec<Vec<(f64, f64)>> = (0..fleets.len())
                    .map(|i| {
                        let step = (hi[i] - lo[i]) / (points - 1) as f64;
                        (0..points).map(|k| lo[i] + k as f64 * step).map(|q| (q, time(i, q))).collect()
                    })
                    .collect();
                let gross =
                    |q: f64| if q > d.potential() { f64::NEG_INFINITY } else { d.gross_surplus(q).unwrap_or(0.0) };
                let (arg, _) = (0..axes[0].len())
                    .into_par_iter()
                    .map(|a| {
                        let mut best = (vec![], f64::NEG_INFINITY);
                        let (qa, ta) = axes[0][a];
                        let rest: Vec<&Vec<(f64, f64)>> = axes.iter().skip(1).collect();
                        let mut visit = |qs: Vec<f64>, total: f64, t: f64| {
                            let w = gross(total) - t;
                            if w > best.1 {
                                best = (qs, w);
                            }
                        };
                        match rest.len() {
                            0 => visit(vec![qa], qa, ta),
                            1 => {
                                for &(qb, tb) in rest[0] {
                                    visit(vec![qa, qb], qa + qb, ta + tb);
                                }
                            }
                            _ => {
                                for &(qb, tb) in rest[0] {
                                    for &(qc, tc) in rest[1] {
                                        visit(vec![qa, qb, qc], qa + qb + qc, ta + tb + tc);
                                    }
                                }
                            }
                        }
                        best
                    })
                    .reduce(|| (vec![], f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
                for i in 0..fleets.len() {
                    let cell = (hi[i] - lo[i]) / (points - 1) as f64;
                    best[i] = arg[i];
                    lo[i] = (arg[i] - 2.0 * cell).max(0.0);
                    hi[i] = (arg[i] + 2.0 * cell).min(0.999 * peaks[i].1);
                }
                points = 41;
            }
            Ok(best)
        }
    }
}

/// One defining equation evaluated at a solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
}

impl Residual {
    pub fn passes(&self) -> bool {
        self.value.abs() <= self.tolerance
    }

    fn severity(&self) -> f64 {
        self.value.abs() / self.tolerance.max(f64::MIN_POSITIVE)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub residuals: Vec<Residual>,
    pub max_abs: f64,
    pub pass: bool,
}

impl ResidualReport {
    fn new(residuals: Vec<Residual>) -> Self {
        let max_abs = residuals.iter().map(|r| r.value.abs()).fold(0.0, f64::max);
        let pass = residuals.iter().all(Residual::passes) && residuals.iter().all(|r| r.value.is_finite());
        Self { residuals, max_abs, pass }
    }

    /// The residual furthest outside its tolerance.
    pub fn worst(&self) -> Option<&Residual> {
        self.residuals.iter().max_by(|a, b| a.severity().total_cmp(&b.severity()))
    }

    pub fn get(&self, name: &str) -> Option<&Residual> {
        self.residuals.iter().find(|r| r.name == name)
    }
}

/// A solution of any market structure.
#[derive(Debug, Clone, Copy)]
pub enum Solution<'a> {
    Fragmented(&'a FragmentedEquilibrium),
    Integrated(&'a IntegratedEquilibrium),
    Mixed(&'a MixedEquilibrium),
}

const COST_TOL: f64 = 1e-6;
const REL_TOL: f64 = 1e-9;

/// Evaluates every defining equation of the solution's market structure.
pub fn check_residuals(solution: Solution<'_>, market: &Market) -> ResidualReport {
    let mut out = Vec::new();
    let mut push = |name: String, value: f64, tolerance: f64| out.push(Residual { name, value, tolerance });
    let d = &market.demand;
    let b_of = |q: f64| if q > 0.0 { d.inverse(q).unwrap_or(f64::NAN) } else { f64::NAN };
    let tw = |n: f64| market.trip_time + market.matching.a * n.powf(-market.matching.kappa);
    match solution {
        Solution::Fragmented(eq) => {
            let sum: f64 = eq.demand.iter().sum();
            push("demand_sum".into(), eq.total_demand - sum, REL_TOL * sum.max(1.0));
            let b = b_of(eq.total_demand);
            for i in 0..eq.fleets.len() {
                let (q, n, f) = (eq.demand[i], eq.idle[i], eq.fares[i]);
                push(format!("nonnegative_demand[{i}]"), q.min(0.0), 0.0);
                push(format!("vehicle_conservation[{i}]"), eq.fleets[i] - n - q * tw(n), REL_TOL * eq.fleets[i]);
                if eq.total_demand > 0.0 {
                    let own = f + market.beta * tw(n);
                    let v = if q > 0.0 { own - b } else { (b - own).max(0.0) };
                    push(format!("cost_indifference[{i}]"), v, COST_TOL);
                }
            }
        }
        Solution::Integrated(eq) => {
            let n = eq.total_fleet();
            let sum: f64 = eq.demand.iter().sum();
            let idle_sum: f64 = eq.idle.iter().sum();
            push("demand_sum".into(), eq.total_demand - sum, REL_TOL * sum.max(1.0));
            push("idle_sum".into(), eq.pooled_idle - idle_sum, REL_TOL * n);
            let shares = eq.market_shares();
            push("market_share_sum".into(), shares.iter().sum::<f64>() - 1.0, 1e-12);
            let fare: f64 = eq.fleets.iter().zip(&eq.fares).map(|(f, p)| f / n * p).sum();
            if eq.total_demand > 0.0 {
                push(
                    "cost_balance".into(),
                    b_of(eq.total_demand) - fare - market.beta * tw(eq.pooled_idle) - eq.tau,
                    COST_TOL,
                );
            }
            push("pooled_conservation".into(), n - eq.pooled_idle - eq.total_demand * tw(eq.pooled_idle), REL_TOL * n);
            for i in 0..eq.fleets.len() {
                let s = eq.fleets[i] / n;
                push(format!("nonnegative_demand[{i}]"), eq.demand[i].min(0.0), 0.0);
                push(
                    format!("vehicle_conservation[{i}]"),
                    eq.fleets[i] - eq.idle[i] - eq.demand[i] * tw(eq.pooled_idle),
                    REL_TOL * eq.fleets[i],
                );
                push(format!("proportional_idle[{i}]"), eq.idle[i] - s * eq.pooled_idle, REL_TOL * eq.fleets[i]);
                push(
                    format!("proportional_demand[{i}]"),
                    eq.demand[i] - s * eq.total_demand,
                    REL_TOL * eq.total_demand.max(1.0),
                );
            }
        }
        Solution::Mixed(eq) => {
            let q1: f64 = eq.integrator_demand.iter().sum();
            let q2: f64 = eq.direct_demand.iter().sum();
            let scale = eq.total_demand.max(1.0);
            push("integrator_sum".into(), eq.integrator_total - q1, REL_TOL * scale);
            push("direct_sum".into(), eq.direct_total - q2, REL_TOL * scale);
            push("demand_sum".into(), eq.total_demand - eq.integrator_total - eq.direct_total, REL_TOL * scale);
            let x: f64 = eq.idle.iter().sum();
            push("idle_sum".into(), eq.pooled_idle - x, REL_TOL * eq.fleets.iter().sum::<f64>());
            let fare: f64 = eq.fares.iter().zip(&eq.idle).map(|(f, n)| f * n / x).sum();
            let c1 = fare + market.beta * tw(x) + eq.tau;
            let c2: Vec<f64> = eq.fares.iter().zip(&eq.idle).map(|(f, &n)| f + market.beta * tw(n)).collect();
            let cheapest = c2.iter().copied().fold(c1, f64::min);
            if eq.total_demand > 0.0 {
                push("cost_minimum".into(), b_of(eq.total_demand) - cheapest, COST_TOL);
            }
            for i in 0..eq.fleets.len() {
                let (a, b) = (eq.integrator_demand[i], eq.direct_demand[i]);
                push(format!("nonnegative_demand[{i}]"), a.min(0.0) + b.min(0.0), 0.0);
                push(
                    format!("vehicle_conservation[{i}]"),
                    eq.fleets[i] - eq.idle[i] - a * tw(x) - b * tw(eq.idle[i]),
                    REL_TOL * eq.fleets[i],
                );
                let integrator_ok = if a > 0.0 { (c1 - c2[i]).max(0.0) } else { 0.0 };
                push(format!("integrator_complementarity[{i}]"), integrator_ok, COST_TOL);
                let direct_ok = if b > 0.0 { (c2[i] - c1).max(0.0) + (c2[i] - cheapest) } else { 0.0 };
                push(format!("direct_complementarity[{i}]"), direct_ok, COST_TOL);
                if eq.integrator_total > 0.0 {
                    push(format!("dispatch_ratio[{i}]"), a - eq.integrator_total * eq.idle[i] / x, REL_TOL * scale);
                }
            }
        }
    }
    ResidualReport::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_difference_is_exact_on_quadratics() {
        let d = finite_difference(|x| Ok(x * x), 3.0, 1e-4).unwrap();
        assert!((d - 6.0).abs() < 1e-8);
        assert!(finite_difference(Ok, 1.0, 0.0).is_err());
    }

    #[test]
    fn golden_peak_agrees_with_closed_indicator() {
        let m = Market::baseline();
        let (x, q) = golden_peak(&m, 500.0);
        let p = m.matching.branch_peak(500.0, m.trip_time);
        assert!((q - p.demand).abs() < 1e-9 * q);
        assert!((x - p.idle).abs() < 1e-4 * x);
    }

    #[test]
    fn pooled_fixture_passes() {
        let m = Market::baseline();
        let q = 1e4 / 0.45;
        let fare = m.demand.inverse(q).unwrap() - m.time_cost(1e4);
        let eq = IntegratedEquilibrium {
            fleets: vec![2e4],
            shares: vec![1.0],
            fares: vec![fare],
            effective_fare: fare,
            tau: 0.0,
            demand: vec![q],
            total_demand: q,
            pooled_idle: 1e4,
            idle: vec![1e4],
            waiting: 0.05,
            cost: fare + m.time_cost(1e4),
            regime: crate::matching::Regime::Normal,
            flags: vec![],
        };
        let r = check_residuals(Solution::Integrated(&eq), &m);
        assert!(r.pass, "{r:?}");
        assert!(r.get("pooled_conservation").unwrap().value.abs() < 1e-9 * 2e4);
    }
}
