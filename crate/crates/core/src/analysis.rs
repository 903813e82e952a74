//! Post-processing of sweep tables: grouping and aggregation, Pearson and
//! Spearman correlation, log-pair filtering, and OLS residualisation.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::records::RunRow;

/// Parameter tuple that identifies one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupKey {
    gamma: u64,
    beta: u64,
    mu: u64,
    epsilon: u64,
    epi_interval: u64,
}

impl GroupKey {
    fn of(row: &RunRow) -> Self {
        // order-preserving bit pattern for nonnegative floats
        GroupKey {
            gamma: row.gamma.to_bits(),
            beta: row.beta.to_bits(),
            mu: row.mu.to_bits(),
            epsilon: row.epsilon.to_bits(),
            epi_interval: row.epi_interval,
        }
    }
}

/// Scenario identity: everything but γ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ScenarioKey {
    beta: u64,
    mu: u64,
    epsilon: u64,
    epi_interval: u64,
}

impl ScenarioKey {
    pub fn of(row: &RunRow) -> Self {
        ScenarioKey {
            beta: row.beta.to_bits(),
            mu: row.mu.to_bits(),
            epsilon: row.epsilon.to_bits(),
            epi_interval: row.epi_interval,
        }
    }

    pub fn beta(&self) -> f64 {
        f64::from_bits(self.beta)
    }

    pub fn mu(&self) -> f64 {
        f64::from_bits(self.mu)
    }

    pub fn epsilon(&self) -> f64 {
        f64::from_bits(self.epsilon)
    }

    pub fn epi_interval(&self) -> u64 {
        self.epi_interval
    }

    /// Comma-free label, e.g. `beta=0.005;mu=0.1;epsilon=0;epi_interval=1`.
    pub fn label(&self) -> String {
        format!(
            "beta={};mu={};epsilon={};epi_interval={}",
            self.beta(),
            self.mu(),
            self.epsilon(),
            self.epi_interval
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub sd: f64,
    pub n: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Summary { mean, sd, n })
    }
}

/// Per-grid-point means and standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub gamma: f64,
    pub beta: f64,
    pub mu: f64,
    pub epsilon: f64,
    pub epi_interval: u64,
    pub runs: usize,
    /// `None` when every run in the group had an undefined ψ.
    pub psi: Option<Summary>,
    pub rho_a: Summary,
    pub rho_i: Summary,
}

/// Groups rows by `(gamma, beta, mu, epsilon, epi_interval)` and summarises
/// each group. Output is sorted by key, so it does not depend on row order.
pub fn aggregate(rows: &[RunRow]) -> Vec<Aggregate> {
    let mut groups: BTreeMap<GroupKey, Vec<&RunRow>> = BTreeMap::new();
    for r in rows {
        groups.entry(GroupKey::of(r)).or_default().push(r);
    }
    let mut out: Vec<Aggregate> = groups
        .into_values()
        .map(|group| {
            let first = group[0];
            // sum in seed order so the result is independent of input order
            let mut group = group;
            group.sort_by(|a, b| a.canonical_cmp(b));
            let psi: Vec<f64> = group.iter().filter_map(|r| r.psi).collect();
            let rho_a: Vec<f64> = group.iter().map(|r| r.rho_a).collect();
            let rho_i: Vec<f64> = group.iter().map(|r| r.rho_i).collect();
            Aggregate {
                gamma: first.gamma,
                beta: first.beta,
                mu: first.mu,
                epsilon: first.epsilon,
                epi_interval: first.epi_interval,
                runs: group.len(),
                psi: Summary::of(&psi),
                rho_a: Summary::of(&rho_a).expect("group is non-empty"),
                rho_i: Summary::of(&rho_i).expect("group is non-empty"),
            }
        })
        .collect();
    out.sort_by(|a, b| {
        a.beta
            .total_cmp(&b.beta)
            .then(a.mu.total_cmp(&b.mu))
            .then(a.epsilon.total_cmp(&b.epsilon))
            .then(a.epi_interval.cmp(&b.epi_interval))
            .then(a.gamma.total_cmp(&b.gamma))
    });
    out
}

/// Splits rows by scenario (all parameters except γ).
pub fn by_scenario(rows: &[RunRow]) -> BTreeMap<ScenarioKey, Vec<RunRow>> {
    let mut out: BTreeMap<ScenarioKey, Vec<RunRow>> = BTreeMap::new();
    for r in rows {
        out.entry(ScenarioKey::of(r)).or_default().push(*r);
    }
    out
}

/// Pearson product-moment correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::UndefinedMetric(format!(
            "pearson: length mismatch ({} vs {})",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 3 {
        return Err(Error::UndefinedMetric(format!(
            "pearson: need at least 3 points, got {}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedMetric("pearson: zero variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Average ranks, ties sharing the mean of their positions (1-based).
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            out[o] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation (Pearson on average ranks).
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    pearson(&ranks(xs), &ranks(ys))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogPairs {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub dropped: usize,
}

/// Natural logs of the strictly positive pairs.
pub fn log_pairs(xs: &[f64], ys: &[f64]) -> Result<LogPairs> {
    let mut out = LogPairs {
        xs: Vec::with_capacity(xs.len()),
        ys: Vec::with_capacity(ys.len()),
        dropped: 0,
    };
    for (&x, &y) in xs.iter().zip(ys) {
        if x > 0.0 && y > 0.0 {
            out.xs.push(x.ln());
            out.ys.push(y.ln());
        } else {
            out.dropped += 1;
        }
    }
    if out.xs.len() < 3 {
        return Err(Error::UndefinedMetric(format!(
            "log pairs: only {} positive pairs ({} dropped)",
            out.xs.len(),
            out.dropped
        )));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::UndefinedMetric(format!(
            "regression needs two equal-length series of at least 3 points ({} / {})",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::UndefinedMetric(
            "regression: zero predictor variance".into(),
        ));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok(LinearFit {
        intercept: my - slope * mx,
        slope,
    })
}

/// Residuals `y - (a + b x)` of the OLS fit of `ys` on `xs`.
pub fn residualise(xs: &[f64], ys: &[f64]) -> Result<Vec<f64>> {
    let fit = linear_fit(xs, ys)?;
    Ok(xs
        .iter()
        .zip(ys)
        .map(|(x, y)| y - (fit.intercept + fit.slope * x))
        .collect())
}

/// One line of the analysis report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportLine {
    pub metric: String,
    pub scenario: String,
    /// `None` when the metric is undefined for this scenario.
    pub value: Option<f64>,
    pub n: usize,
    pub dropped: usize,
}

pub const METRIC_LOG_PSI_RHO_I: &str = "pearson_log_psi_log_rho_i";
pub const METRIC_PSI_RHO_I: &str = "pearson_psi_rho_i";
pub const METRIC_PSI_RHO_A: &str = "pearson_psi_rho_a";
pub const METRIC_RESID_RHO_A_GIVEN_PSI: &str = "pearson_resid_rho_a_given_psi_vs_rho_i";
pub const METRIC_RESID_PSI_GIVEN_RHO_A: &str = "pearson_resid_psi_given_rho_a_vs_rho_i";
pub const METRIC_SPEARMAN_GAMMA_PSI: &str = "spearman_gamma_psi";
pub const METRIC_SPEARMAN_GAMMA_RHO_I: &str = "spearman_gamma_rho_i";

/// Per-scenario correlation table computed on per-γ means, the way the
/// scatter plots are built.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub lines: Vec<ReportLine>,
    pub aggregates: Vec<Aggregate>,
}

impl Report {
    pub fn value(&self, metric: &str, scenario: &str) -> Option<f64> {
        self.lines
            .iter()
            .find(|l| l.metric == metric && l.scenario == scenario)
            .and_then(|l| l.value)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,scenario,value,n,dropped\n");
        for l in &self.lines {
            let value = l.value.map(|v| format!("{v:?}")).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{},{}", l.metric, l.scenario, value, l.n, l.dropped);
        }
        out
    }

    pub fn aggregates_csv(&self) -> String {
        let mut out = String::from(
            "gamma,beta,mu,epsilon,epi_interval,runs,psi_mean,psi_sd,rho_a_mean,rho_a_sd,rho_i_mean,rho_i_sd\n",
        );
        for a in &self.aggregates {
            let (pm, ps) = a
                .psi
                .map(|s| (format!("{:?}", s.mean), format!("{:?}", s.sd)))
                .unwrap_or_default();
            let _ = writeln!(
                out,
                "{:?},{:?},{:?},{:?},{},{},{},{},{:?},{:?},{:?},{:?}",
                a.gamma,
                a.beta,
                a.mu,
                a.epsilon,
                a.epi_interval,
                a.runs,
                pm,
                ps,
                a.rho_a.mean,
                a.rho_a.sd,
                a.rho_i.mean,
                a.rho_i.sd
            );
        }
        out
    }

    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        let mut current = "";
        for l in &self.lines {
            if l.scenario != current {
                current = &l.scenario;
                let _ = writeln!(out, "scenario {current}");
            }
            let value = l
                .value
                .map(|v| format!("{v:+.4}"))
                .unwrap_or_else(|| "undefined".into());
            let _ = write!(out, "  {:<44} {value:>9}  (n={}", l.metric, l.n);
            if l.dropped > 0 {
                let _ = write!(out, ", dropped={}", l.dropped);
            }
            out.push_str(")\n");
        }
        out
    }
}

fn line(metric: &str, scenario: &str, r: Result<f64>, n: usize, dropped: usize) -> ReportLine {
    ReportLine {
        metric: metric.to_string(),
        scenario: scenario.to_string(),
        value: r.ok(),
        n,
        dropped,
    }
}

/// Builds the correlation report for every scenario present in `rows`.
///
/// Both residual orientations are reported: residuals of ρ^A after regressing
/// on ψ, and residuals of ψ after regressing on ρ^A, each correlated with ρ^I.
pub fn analyze(rows: &[RunRow]) -> Report {
    let aggregates = aggregate(rows);
    let mut lines = Vec::new();
    let mut scenarios: BTreeMap<ScenarioKey, Vec<&Aggregate>> = BTreeMap::new();
    for a in &aggregates {
        let key = ScenarioKey {
            beta: a.beta.to_bits(),
            mu: a.mu.to_bits(),
            epsilon: a.epsilon.to_bits(),
            epi_interval: a.epi_interval,
        };
        scenarios.entry(key).or_default().push(a);
    }
    for (key, points) in scenarios {
        let label = key.label();
        let defined: Vec<&&Aggregate> = points.iter().filter(|a| a.psi.is_some()).collect();
        let dropped_undefined = points.len() - defined.len();
        let gamma: Vec<f64> = defined.iter().map(|a| a.gamma).collect();
        let psi: Vec<f64> = defined.iter().map(|a| a.psi.unwrap().mean).collect();
        let rho_a: Vec<f64> = defined.iter().map(|a| a.rho_a.mean).collect();
        let rho_i: Vec<f64> = defined.iter().map(|a| a.rho_i.mean).collect();
        let n = psi.len();

        let (log_r, log_n, log_dropped) = match log_pairs(&psi, &rho_i) {
            Ok(lp) => (pearson(&lp.xs, &lp.ys), lp.xs.len(), lp.dropped),
            Err(e) => {
                let positive = psi
                    .iter()
                    .zip(&rho_i)
                    .filter(|(x, y)| **x > 0.0 && **y > 0.0)
                    .count();
                (Err(e), positive, n - positive)
            }
        };
        lines.push(line(
            METRIC_LOG_PSI_RHO_I,
            &label,
            log_r,
            log_n,
            log_dropped + dropped_undefined,
        ));
        lines.push(line(
            METRIC_PSI_RHO_I,
            &label,
            pearson(&psi, &rho_i),
            n,
            dropped_undefined,
        ));
        lines.push(line(
            METRIC_PSI_RHO_A,
            &label,
            pearson(&psi, &rho_a),
            n,
            dropped_undefined,
        ));
        let resid_a = residualise(&psi, &rho_a).and_then(|r| pearson(&r, &rho_i));
        lines.push(line(
            METRIC_RESID_RHO_A_GIVEN_PSI,
            &label,
            resid_a,
            n,
            dropped_undefined,
        ));
        let resid_psi = residualise(&rho_a, &psi).and_then(|r| pearson(&r, &rho_i));
        lines.push(line(
            METRIC_RESID_PSI_GIVEN_RHO_A,
            &label,
            resid_psi,
            n,
            dropped_undefined,
        ));
        lines.push(line(
            METRIC_SPEARMAN_GAMMA_PSI,
            &label,
            spearman(&gamma, &psi),
            n,
            dropped_undefined,
        ));
        let all_gamma: Vec<f64> = points.iter().map(|a| a.gamma).collect();
        let all_rho_i: Vec<f64> = points.iter().map(|a| a.rho_i.mean).collect();
        lines.push(line(
            METRIC_SPEARMAN_GAMMA_RHO_I,
            &label,
            spearman(&all_gamma, &all_rho_i),
            all_gamma.len(),
            0,
        ));
    }
    Report { lines, aggregates }
}
