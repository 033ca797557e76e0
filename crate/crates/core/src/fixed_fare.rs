//! Stationary state of independent idle pools at fixed prices.
//!
//! Parametrized by the common generalized cost `C`: a pool with price `p`
//! and fleet `N` that is active at cost `C` holds `n = W⁻¹((C − p)/β − T)`
//! idle vehicles and serves `(N − n)/(T + W(n))` trips. The equilibrium is
//! the smallest `C` at which supply meets `f(C)`, i.e. the root with the most
//! idle vehicles.

use crate::demand::DemandCurve;
use crate::error::{Error, Result};
use crate::market::{Market, RootPolicy};
use crate::matching::{IdleMode, Regime};
use crate::numeric::{bisect, geomspace};

const SCAN_POINTS: usize = 4000;

#[derive(Debug, Clone)]
pub(crate) struct PoolState {
    pub cost: f64,
    pub demand: Vec<f64>,
    pub idle: Vec<f64>,
}

pub(crate) struct Pools<'a> {
    market: &'a Market,
    fleets: &'a [f64],
    prices: &'a [f64],
}

impl<'a> Pools<'a> {
    pub fn new(market: &'a Market, fleets: &'a [f64], prices: &'a [f64]) -> Self {
        Self { market, fleets, prices }
    }

    /// Cost below which no pool can serve anyone.
    pub fn entry_cost(&self) -> f64 {
        self.fleets.iter().zip(self.prices).map(|(&n, &p)| p + self.market.time_cost(n)).fold(f64::INFINITY, f64::min)
    }

    /// `(demand, idle)` of pool `i` when passengers face cost `cost`.
    pub fn pool_at(&self, i: usize, cost: f64) -> (f64, f64) {
        let m = self.market;
        let n_i = self.fleets[i];
        let w = (cost - self.prices[i]) / m.beta - m.trip_time;
        if w <= m.matching.w(n_i) {
            return (0.0, n_i);
        }
        let n = m.matching.inverse_waiting_time(w).expect("positive waiting time").min(n_i);
        ((n_i - n) / (m.trip_time + w), n)
    }

    pub fn supply(&self, cost: f64) -> f64 {
        (0..self.fleets.len()).map(|i| self.pool_at(i, cost).0).sum()
    }

    fn excess(&self, cost: f64) -> f64 {
        self.market.demand.realized(cost) - self.supply(cost)
    }

    pub fn solve(&self, policy: RootPolicy) -> Result<PoolState> {
        let c0 = self.entry_cost();
        let scale = c0.abs().max(1.0);
        let root = if self.excess(c0) <= 0.0 {
            c0
        } else {
            let mut hi = scale;
            let mut doublings = 0;
            while self.excess(c0 + hi) > 0.0 {
                hi *= 2.0;
                doublings += 1;
                if doublings > 200 {
                    return Err(Error::NoEquilibrium("supply never reaches demand".into()));
                }
            }
            let lo = 1e-13 * scale;
            if self.excess(c0 + lo) <= 0.0 {
                bisect(|c| Ok(self.excess(c)), c0, c0 + lo, 0.0)?
            } else {
                let mut prev = lo;
                let mut bracket = None;
                for d in geomspace(lo, hi, SCAN_POINTS).skip(1) {
                    if self.excess(c0 + d) <= 0.0 {
                        bracket = Some((prev, d));
                        break;
                    }
                    prev = d;
                }
                let (a, b) = bracket.expect("excess is negative at the top of the scan");
                bisect(|c| Ok(self.excess(c)), c0 + a, c0 + b, 0.0)?
            }
        };
        let (demand, idle): (Vec<f64>, Vec<f64>) = (0..self.fleets.len()).map(|i| self.pool_at(i, root)).unzip();
        let matching = &self.market.matching;
        let wgc = demand
            .iter()
            .zip(&idle)
            .any(|(&q, &n)| q > 0.0 && matching.wgc_classify(q, n, 1.0, IdleMode::Platform) == Regime::Wgc);
        if policy == RootPolicy::NormalOnly && wgc {
            return Err(Error::NoEquilibrium(format!(
                "the fixed-price stationary state at cost {root:.6} is on the wild-goose-chase branch"
            )));
        }
        Ok(PoolState { cost: root, demand, idle })
    }
}
