//! Reproducible experiment sweeps and their CSV / plot-data output.
//!
//! Every row is solved independently (rows run in parallel, output order is
//! the sweep index) and gated by [`check_residuals`]: the `status` column is
//! `ok`, `residual:<regime>:<name>` or `error:<regime>:<message>`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::MarketConfig;
use crate::error::{Error, Result};
use crate::market::{Flag, Market, MarketMetrics};
use crate::mixed::{self, MixedEquilibrium};
use crate::oracle::{check_residuals, ResidualReport, Solution};
use crate::{fragmented, integrated};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    /// A value that could not be computed; rendered as `error`.
    Error,
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            _ => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_number(*v),
            Cell::Text(s) => s.clone(),
            Cell::Error => "error".into(),
        }
    }
}

/// Twelve significant digits in scientific notation.
pub fn format_number(v: f64) -> String {
    format!("{v:.11e}")
}

/// A figure panel: one x column against several series. With `group` set,
/// plot data gets one block per distinct value of that column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Panel {
    pub title: String,
    pub x: String,
    pub series: Vec<String>,
    pub group: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub sweep: String,
    pub config_hash: String,
    pub regimes: Vec<String>,
    pub parameters: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub panels: Vec<Panel>,
    pub metadata: Metadata,
}

impl SweepTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of a column (`None` for error cells).
    pub fn values(&self, name: &str) -> Vec<Option<f64>> {
        let Some(j) = self.column(name) else { return Vec::new() };
        self.rows.iter().map(|r| r[j].as_f64()).collect()
    }

    pub fn text(&self, name: &str) -> Vec<String> {
        let Some(j) = self.column(name) else { return Vec::new() };
        self.rows.iter().map(|r| r[j].render()).collect()
    }

    /// Rows whose status is not `ok`.
    pub fn failed_rows(&self) -> Vec<usize> {
        self.text("status").iter().enumerate().filter(|(_, s)| *s != "ok").map(|(i, _)| i).collect()
    }

    pub fn metadata_json(&self) -> String {
        serde_json::to_string_pretty(&self.metadata).expect("metadata serializes") + "\n"
    }

    fn is_rectangular(&self) -> bool {
        self.rows.iter().all(|r| r.len() == self.columns.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Plotdata,
}

/// Writes `table` to `path`.
pub fn emit(table: &SweepTable, format: Format, path: impl AsRef<Path>) -> Result<()> {
    if !table.is_rectangular() {
        return Err(Error::domain("sweep table is not rectangular"));
    }
    let bytes = match format {
        Format::Csv => to_csv(table)?,
        Format::Plotdata => to_plotdata(table).into_bytes(),
    };
    let mut file = std::fs::File::create(path.as_ref())?;
    file.write_all(&bytes)?;
    Ok(())
}

pub fn to_csv(table: &SweepTable) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(&table.columns).map_err(io)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::render)).map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

/// Whitespace-separated blocks separated by two blank lines (gnuplot `index`).
pub fn to_plotdata(table: &SweepTable) -> String {
    let mut out = String::new();
    let cell = |row: &[Cell], name: &str| -> String {
        match table.column(name).map(|j| &row[j]) {
            Some(Cell::Num(v)) => format_number(*v),
            Some(Cell::Text(s)) => s.replace(char::is_whitespace, "_"),
            _ => "NaN".into(),
        }
    };
    let mut first = true;
    for panel in &table.panels {
        let groups: Vec<Option<String>> = match &panel.group {
            None => vec![None],
            Some(g) => {
                let mut seen: Vec<String> = Vec::new();
                for v in table.text(g) {
                    if !seen.contains(&v) {
                        seen.push(v);
                    }
                }
                seen.into_iter().map(Some).collect()
            }
        };
        for group in groups {
            if !first {
                out.push_str("\n\n");
            }
            first = false;
            let _ = write!(out, "# {}", panel.title);
            if let (Some(g), Some(v)) = (&panel.group, &group) {
                let _ = write!(out, " [{g}={v}]");
            }
            out.push('\n');
            let _ = writeln!(out, "# {} {}", panel.x, panel.series.join(" "));
            for row in &table.rows {
                if let (Some(g), Some(v)) = (&panel.group, &group) {
                    if cell(row, g) != v.replace(char::is_whitespace, "_") {
                        continue;
                    }
                }
                let mut line = cell(row, &panel.x);
                for s in &panel.series {
                    line.push(' ');
                    line.push_str(&cell(row, s));
                }
                out.push_str(&line);
                out.push('\n');
            }
        }
    }
    out
}

/// Accumulates the cells and status of one row.
struct Row {
    cells: Vec<Cell>,
    problems: Vec<String>,
}

impl Row {
    fn new(lead: Vec<Cell>) -> Self {
        Self { cells: lead, problems: Vec::new() }
    }

    fn push(&mut self, values: impl IntoIterator<Item = f64>) {
        self.cells.extend(values.into_iter().map(|v| if v.is_finite() { Cell::Num(v) } else { Cell::Error }));
    }

    fn gate(&mut self, regime: &str, report: ResidualReport) {
        if !report.pass {
            let name = report.worst().map_or("unknown", |r| r.name.as_str()).to_string();
            self.problems.push(format!("residual:{regime}:{name}"));
        }
    }

    fn fail(&mut self, regime: &str, width: usize, e: &Error) {
        self.cells.extend(std::iter::repeat_n(Cell::Error, width));
        self.problems.push(format!("error:{regime}:{e}"));
    }

    fn finish(mut self) -> Vec<Cell> {
        let status = if self.problems.is_empty() { "ok".to_string() } else { self.problems.join(";") };
        self.cells.push(Cell::Text(status));
        self.cells
    }
}

const SUMMARY: [&str; 5] = ["Q", "F", "profit", "CS", "S"];
const PLATFORM_REGIMES: [&str; 5] = ["frag_ne", "frag_so", "integ_ne", "integ_so", "unchanged"];

fn summary(fare: f64, total: f64, m: &MarketMetrics) -> [f64; 5] {
    [total, fare, m.total_profit, m.consumer_surplus, m.welfare]
}

fn mean_fare(fares: &[f64], demand: &[f64]) -> f64 {
    let q: f64 = demand.iter().sum();
    if q > 0.0 {
        fares.iter().zip(demand).map(|(f, d)| f * d).sum::<f64>() / q
    } else {
        fares.iter().sum::<f64>() / fares.len() as f64
    }
}

fn metadata(sweep: &str, config: &MarketConfig, regimes: &[&str], parameters: &[(&str, String)]) -> Metadata {
    Metadata {
        sweep: sweep.into(),
        config_hash: config.hash(),
        regimes: regimes.iter().map(|s| s.to_string()).collect(),
        parameters: parameters.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
    }
}

/// Equal split of the configured total fleet over `counts` platforms; per
/// count the fragmented and integrated Nash and social optima plus the
/// integrated market at unchanged fragmented Nash fares.
pub fn sweep_platform_count(config: &MarketConfig, counts: std::ops::RangeInclusive<usize>) -> SweepTable {
    let market = config.market;
    let tau = config.tau;
    let total: f64 = config.fleets().iter().sum();
    let counts: Vec<usize> = counts.filter(|&i| i > 0).collect();

    let mut columns = vec!["I".to_string(), "fleet_per_platform".to_string()];
    for r in PLATFORM_REGIMES {
        columns.extend(SUMMARY.iter().map(|s| format!("{r}_{s}")));
    }
    columns.push("demand_gain_threshold".into());
    columns.push("status".into());

    let rows = counts
        .par_iter()
        .map(|&i| {
            let fleets = vec![total / i as f64; i];
            let mut row = Row::new(vec![Cell::Num(i as f64), Cell::Num(fleets[0])]);
            let w = SUMMARY.len();
            let frag_ne = fragmented::solve_nash(&market, &fleets);
            match &frag_ne {
                Ok((eq, m)) => {
                    row.push(summary(mean_fare(&eq.fares, &eq.demand), eq.total_demand, m));
                    row.gate("frag_ne", check_residuals(Solution::Fragmented(eq), &market));
                }
                Err(e) => row.fail("frag_ne", w, e),
            }
            match fragmented::solve_social_optimum(&market, &fleets) {
                Ok((eq, m)) => {
                    row.push(summary(mean_fare(&eq.fares, &eq.demand), eq.total_demand, &m));
                    row.gate("frag_so", check_residuals(Solution::Fragmented(&eq), &market));
                }
                Err(e) => row.fail("frag_so", w, &e),
            }
            let integ_ne = integrated::solve_nash(&market, &fleets, tau);
            match &integ_ne {
                Ok((eq, m)) => {
                    row.push(summary(eq.effective_fare, eq.total_demand, m));
                    row.gate("integ_ne", check_residuals(Solution::Integrated(eq), &market));
                }
                Err(e) => row.fail("integ_ne", w, e),
            }
            match integrated::solve_social_optimum(&market, &fleets) {
                Ok((eq, m)) => {
                    row.push(summary(eq.effective_fare, eq.total_demand, &m));
                    row.gate("integ_so", check_residuals(Solution::Integrated(&eq), &market));
                }
                Err(e) => row.fail("integ_so", w, &e),
            }
            let unchanged = match &frag_ne {
                Ok((eq, _)) => integrated::unchanged_fare_outcome(&market, &eq.fares, tau, &fleets),
                Err(e) => Err(e.clone()),
            };
            match unchanged {
                Ok((eq, m)) => {
                    row.push(summary(eq.effective_fare, eq.total_demand, &m));
                    row.gate("unchanged", check_residuals(Solution::Integrated(&eq), &market));
                }
                Err(e) => row.fail("unchanged", w, &e),
            }
            match (&frag_ne, &integ_ne) {
                (Ok((f, _)), Ok((g, _))) => match fragmented::demand_gain_threshold(f, g, &market, i) {
                    Ok(t) => row.push([t]),
                    Err(e) => row.fail("demand_gain_threshold", 1, &e),
                },
                _ => row.push([f64::NAN]),
            }
            row.finish()
        })
        .collect();

    let series = |s: &str| PLATFORM_REGIMES.iter().map(|r| format!("{r}_{s}")).collect::<Vec<_>>();
    let panels =
        [("total realized demand", "Q"), ("trip fare", "F"), ("total profit", "profit"), ("social welfare", "S")]
            .into_iter()
            .map(|(title, s)| Panel { title: title.into(), x: "I".into(), series: series(s), group: None })
            .collect();
    SweepTable {
        columns,
        rows,
        panels,
        metadata: metadata(
            "platforms",
            config,
            &PLATFORM_REGIMES,
            &[("total_fleet", format_number(total)), ("tau", format_number(tau)), ("counts", format!("{:?}", counts))],
        ),
    }
}

const FLEET_REGIMES: [&str; 4] = ["frag_ne", "frag_so", "integ_ne", "unchanged"];
const PER_PLATFORM: [&str; 3] = ["U", "q", "profit"];

/// Scales every configured fleet by 1.1 per step, `steps + 1` rows.
pub fn sweep_fleet_scaling(config: &MarketConfig, steps: usize) -> SweepTable {
    let market = config.market;
    let tau = config.tau;
    let base = config.fleets();
    let k = base.len();

    let mut columns = vec!["step".to_string(), "scale".to_string()];
    columns.extend((0..k).map(|i| format!("N_{}", i + 1)));
    for r in FLEET_REGIMES {
        for s in PER_PLATFORM {
            columns.extend((0..k).map(|i| format!("{r}_{s}_{}", i + 1)));
        }
    }
    columns.push("status".into());

    let rows = (0..=steps)
        .into_par_iter()
        .map(|step| {
            let scale = 1.1f64.powi(step as i32);
            let fleets: Vec<f64> = base.iter().map(|n| n * scale).collect();
            let mut row = Row::new(vec![Cell::Num(step as f64), Cell::Num(scale)]);
            row.push(fleets.iter().copied());
            let w = PER_PLATFORM.len() * k;
            let push = |row: &mut Row, demand: &[f64], m: &MarketMetrics| {
                row.push(m.utilization.iter().copied());
                row.push(demand.iter().copied());
                row.push(m.profits.iter().copied());
            };
            let frag_ne = fragmented::solve_nash(&market, &fleets);
            match &frag_ne {
                Ok((eq, m)) => {
                    push(&mut row, &eq.demand, m);
                    row.gate("frag_ne", check_residuals(Solution::Fragmented(eq), &market));
                }
                Err(e) => row.fail("frag_ne", w, e),
            }
            match fragmented::solve_social_optimum(&market, &fleets) {
                Ok((eq, m)) => {
                    push(&mut row, &eq.demand, &m);
                    row.gate("frag_so", check_residuals(Solution::Fragmented(&eq), &market));
                }
                Err(e) => row.fail("frag_so", w, &e),
            }
            match integrated::solve_nash(&market, &fleets, tau) {
                Ok((eq, m)) => {
                    push(&mut row, &eq.demand, &m);
                    row.gate("integ_ne", check_residuals(Solution::Integrated(&eq), &market));
                }
                Err(e) => row.fail("integ_ne", w, &e),
            }
            let unchanged = match &frag_ne {
                Ok((eq, _)) => integrated::unchanged_fare_outcome(&market, &eq.fares, tau, &fleets),
                Err(e) => Err(e.clone()),
            };
            match unchanged {
                Ok((eq, m)) => {
                    push(&mut row, &eq.demand, &m);
                    row.gate("unchanged", check_residuals(Solution::Integrated(&eq), &market));
                }
                Err(e) => row.fail("unchanged", w, &e),
            }
            row.finish()
        })
        .collect();

    let series = |regimes: &[&str], s: &str| -> Vec<String> {
        regimes.iter().flat_map(|r| (0..k).map(move |i| format!("{r}_{s}_{}", i + 1))).collect()
    };
    let panels = vec![
        Panel {
            title: "vehicle utilization".into(),
            x: "step".into(),
            series: series(&["frag_ne", "frag_so", "integ_ne"], "U"),
            group: None,
        },
        Panel {
            title: "realized demand".into(),
            x: "step".into(),
            series: series(&["frag_ne", "integ_ne", "unchanged"], "q"),
            group: None,
        },
        Panel {
            title: "profit".into(),
            x: "step".into(),
            series: series(&["frag_ne", "integ_ne", "unchanged"], "profit"),
            group: None,
        },
    ];
    SweepTable {
        columns,
        rows,
        panels,
        metadata: metadata(
            "fleet",
            config,
            &FLEET_REGIMES,
            &[("base_fleets", format!("{base:?}")), ("steps", steps.to_string()), ("tau", format_number(tau))],
        ),
    }
}

/// Fleet scenarios of the commission experiment.
pub const COMMISSION_SCENARIOS: [[f64; 3]; 4] =
    [[2000.0; 3], [3000.0; 3], [3000.0, 2000.0, 1000.0], [4000.0, 3000.0, 2000.0]];

pub fn scenario_label(fleets: &[f64]) -> String {
    fleets.iter().map(|n| format!("{n}")).collect::<Vec<_>>().join("-")
}

/// Commission sweep output: the per-commission table and the thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct CommissionSweep {
    pub table: SweepTable,
    pub thresholds: SweepTable,
}

/// For each scenario, `points` commissions spread uniformly over
/// `[τ̃₁ − 2, τ̃₂ + 2]` at common fare `fare`.
pub fn sweep_commission_cli(
    config: &MarketConfig,
    scenarios: &[Vec<f64>],
    fare: f64,
    points: usize,
) -> CommissionSweep {
    let market = config.market;
    let columns: Vec<String> = [
        "scenario",
        "tau",
        "Q",
        "Q_integrator",
        "Q_direct",
        "C_integrator",
        "C_direct_min",
        "regime",
        "pool",
        "status",
    ]
    .map(String::from)
    .to_vec();
    let mut rows = Vec::new();
    let mut marker_rows = Vec::new();
    for fleets in scenarios {
        let label = scenario_label(fleets);
        let fares = vec![fare; fleets.len()];
        let range = mixed::commission_range(&market, fleets, &fares);
        let mut marker = Row::new(vec![Cell::Text(label.clone())]);
        let Ok(r) = range else {
            marker.fail("commission_range", 4, range.as_ref().unwrap_err());
            marker_rows.push(marker.finish());
            continue;
        };
        marker.push([r.tau_1, r.tau_2, r.sufficient_all, r.sufficient_none]);
        marker_rows.push(marker.finish());
        let (lo, hi) = (r.tau_1 - 2.0, r.tau_2 + 2.0);
        let taus: Vec<f64> = (0..points)
            .map(|j| if points > 1 { lo + (hi - lo) * j as f64 / (points - 1) as f64 } else { lo })
            .collect();
        for row in mixed::sweep_commission(&market, fleets, &fares, &taus) {
            let mut out = Row::new(vec![Cell::Text(label.clone()), Cell::Num(row.tau)]);
            match row.outcome {
                Ok(eq) => {
                    push_mixed(&mut out, &eq);
                    out.gate(eq.regime.label(), check_residuals(Solution::Mixed(&eq), &market));
                }
                Err(e) => {
                    out.fail("mixed", 5, &e);
                    out.cells.extend([Cell::Error, Cell::Error]);
                }
            }
            rows.push(out.finish());
        }
    }
    let labels: Vec<String> = scenarios.iter().map(|s| scenario_label(s)).collect();
    let meta = |sweep: &str| {
        metadata(
            sweep,
            config,
            &["all-integrator", "mixed", "no-integrator"],
            &[("fare", format_number(fare)), ("points", points.to_string()), ("scenarios", labels.join(","))],
        )
    };
    CommissionSweep {
        table: SweepTable {
            columns,
            rows,
            panels: vec![Panel {
                title: "realized demand against commission".into(),
                x: "tau".into(),
                series: vec!["Q".into(), "Q_integrator".into(), "Q_direct".into()],
                group: Some("scenario".into()),
            }],
            metadata: meta("commission"),
        },
        thresholds: SweepTable {
            columns: ["scenario", "tau_1", "tau_2", "sufficient_all", "sufficient_none", "status"]
                .map(String::from)
                .to_vec(),
            rows: marker_rows,
            panels: Vec::new(),
            metadata: meta("commission_thresholds"),
        },
    }
}

fn push_mixed(row: &mut Row, eq: &MixedEquilibrium) {
    row.push([eq.total_demand, eq.integrator_total, eq.direct_total, eq.integrator_cost, eq.min_direct_cost()]);
    row.cells.push(Cell::Text(eq.regime.label().into()));
    let wgc = eq.flags.iter().any(|f| matches!(f, Flag::WgcState { .. }));
    row.cells.push(Cell::Text(if wgc { "wgc" } else { "normal" }.into()));
}

/// Residual report of a solved market, for the `verify` command.
pub fn verify_market(market: &Market, fleets: &[f64], tau: f64) -> Vec<(String, Result<ResidualReport>)> {
    vec![
        (
            "fragmented-ne".to_string(),
            fragmented::solve_nash(market, fleets).map(|(eq, _)| check_residuals(Solution::Fragmented(&eq), market)),
        ),
        (
            "fragmented-so".to_string(),
            fragmented::solve_social_optimum(market, fleets)
                .map(|(eq, _)| check_residuals(Solution::Fragmented(&eq), market)),
        ),
        (
            "integrated-ne".to_string(),
            integrated::solve_nash(market, fleets, tau)
                .map(|(eq, _)| check_residuals(Solution::Integrated(&eq), market)),
        ),
        (
            "integrated-so".to_string(),
            integrated::solve_social_optimum(market, fleets)
                .map(|(eq, _)| check_residuals(Solution::Integrated(&eq), market)),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SweepTable {
        SweepTable {
            columns: vec!["x".into(), "y".into(), "status".into()],
            rows: vec![
                vec![Cell::Num(1.0), Cell::Num(1.0 / 3.0), Cell::Text("ok".into())],
                vec![Cell::Num(2.0), Cell::Error, Cell::Text("error:a:b, c".into())],
            ],
            panels: vec![Panel { title: "t".into(), x: "x".into(), series: vec!["y".into()], group: None }],
            metadata: Metadata {
                sweep: "tiny".into(),
                config_hash: String::new(),
                regimes: Vec::new(),
                parameters: BTreeMap::new(),
            },
        }
    }

    #[test]
    fn numbers_carry_twelve_significant_digits() {
        assert_eq!(format_number(1.0 / 3.0), "3.33333333333e-1");
        assert_eq!(format_number(-20000.0), "-2.00000000000e4");
        let v: f64 = format_number(std::f64::consts::PI).parse().unwrap();
        assert_eq!(format_number(v), format_number(std::f64::consts::PI));
    }

    #[test]
    fn csv_uses_lf_and_quotes_text() {
        let text = String::from_utf8(to_csv(&tiny()).unwrap()).unwrap();
        assert!(!text.contains('\r'));
        assert_eq!(text.lines().count(), 3);
        assert!(text.contains("\"error:a:b, c\""));
        assert!(text.contains(",error,"));
    }

    #[test]
    fn plotdata_marks_missing_values() {
        let text = to_plotdata(&tiny());
        assert!(text.starts_with("# t\n# x y\n"));
        assert!(text.contains("2.00000000000e0 NaN"));
    }

    #[test]
    fn failed_rows_are_listed() {
        assert_eq!(tiny().failed_rows(), vec![1]);
    }
}
