//! Seeded Monte Carlo experiments over random subsets of Z_N.
//!
//! Every experiment is a grid of `(N, p)` cells. Trials of a cell run in
//! parallel and are folded in trial-index order, so output depends only on
//! the configuration. Trial `t` samples its set from the substream
//! `(master_seed, t)`; cells with the same N therefore share uniforms and
//! the sets are coupled monotonically in p.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boolean_poly::{dist2_ratios, dist4_constants, ReducedBooleanPolynomial};
use crate::error::{Error, Result};
use crate::hom_space::{find_isolated_element, freiman_rank, indicator_hom_from_isolated};
use crate::lambda::{degenerate_count, lambda_levels, Degeneracy, LambdaMode, DEFAULT_LEVEL_CAP};
use crate::pair_complex::{is_additive_pair, is_linear_via_pairs};
use crate::zn::{count_additive_quadruples, sample_subset, CyclicGroup, RandomModel, SubsetOfZn};

/// Largest modulus for the exact `E[X]` column.
pub const EXACT_EXPECTATION_MAX_MODULUS: u32 = 31;

/// Largest modulus for [`dist_bound_report`].
pub const DIST_REPORT_MAX_MODULUS: u32 = 17;

/// Bucket sizes `|B|` reported by [`dist_bound_report`].
pub const DIST4_BUCKETS: [usize; 5] = [1, 2, 3, 4, 9];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PSpec {
    /// `p = N^(-α)` for each α.
    Alpha(Vec<f64>),
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModeFlags {
    /// Compare the rank verdict with the pair-complex verdict per trial.
    pub cross_check: bool,
    /// Append a `p = 1` cell (A = Z_N) per modulus.
    pub full_set_control: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "N_list")]
    pub n_list: Vec<u32>,
    pub p_spec: PSpec,
    pub trials: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub level: usize,
    #[serde(default)]
    pub mode: ModeFlags,
    /// `(a, b, c)` for the Λ̃^1 reports.
    #[serde(default = "default_params")]
    pub params: (u32, u32, u32),
}

fn default_params() -> (u32, u32, u32) {
    (0, 1, 3)
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_list: vec![101],
            p_spec: PSpec::Alpha(vec![0.4, 0.8]),
            trials: 200,
            master_seed: 1,
            level: 1,
            mode: ModeFlags::default(),
            params: default_params(),
        }
    }
}

/// One `(N, α, p)` grid point; α is absent for explicit densities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub modulus: u32,
    pub alpha: Option<f64>,
    pub p: f64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(Error::InvalidConfig(m));
        if self.n_list.is_empty() {
            return invalid("N_list is empty".into());
        }
        for &n in &self.n_list {
            CyclicGroup::prime(n)?;
        }
        if self.trials == 0 {
            return invalid("trials must be at least 1".into());
        }
        match &self.p_spec {
            PSpec::Alpha(v) if v.is_empty() => return invalid("alpha list is empty".into()),
            PSpec::Alpha(v) => {
                if let Some(a) = v.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
                    return invalid(format!("alpha {a} is outside (0, 1)"));
                }
            }
            PSpec::Explicit(v) if v.is_empty() => return invalid("explicit p list is empty".into()),
            PSpec::Explicit(v) => {
                if let Some(p) = v.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                    return invalid(format!("p {p} is outside [0, 1]"));
                }
            }
        }
        if self.level > DEFAULT_LEVEL_CAP {
            return Err(Error::LevelCapExceeded {
                level: self.level,
                cap: DEFAULT_LEVEL_CAP,
            });
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &modulus in &self.n_list {
            match &self.p_spec {
                PSpec::Alpha(v) => out.extend(v.iter().map(|&a| Cell {
                    modulus,
                    alpha: Some(a),
                    p: f64::from(modulus).powf(-a),
                })),
                PSpec::Explicit(v) => out.extend(v.iter().map(|&p| Cell {
                    modulus,
                    alpha: None,
                    p,
                })),
            }
            if self.mode.full_set_control {
                out.push(Cell {
                    modulus,
                    alpha: None,
                    p: 1.0,
                });
            }
        }
        out
    }
}

/// Everything measured on one sampled set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    #[serde(rename = "N")]
    pub modulus: u32,
    pub alpha: Option<f64>,
    pub p: f64,
    pub trial_index: u64,
    pub size: usize,
    pub diff_set_full: bool,
    /// Absent when `|A| < 3`.
    pub rank: Option<usize>,
    pub linear: Option<bool>,
    pub isolated_found: bool,
    /// The indicator hom of the isolated element passed re-verification and
    /// is not affine.
    pub hom_verified: Option<bool>,
    pub quadruple_count: u64,
    /// Positivity of all distinct triangles at levels `0..=i`.
    pub lambda_levels: Vec<bool>,
    /// Every pair with `d1, d2, d1 + d2` nonzero is additive.
    pub all_pairs_additive: Option<bool>,
    /// Rank verdict equals the pair-complex verdict (when `A - A = Z_N`).
    pub pairs_agree: Option<bool>,
}

#[derive(Debug, Clone, Copy, Default)]
struct TrialOptions {
    lambda_level: Option<usize>,
    cross_check: bool,
}

fn all_pairs_additive(a: &SubsetOfZn) -> bool {
    let g = a.group();
    (1..g.modulus()).all(|d1| {
        (1..g.modulus())
            .filter(|&d2| g.add(d1, d2) != 0)
            .all(|d2| is_additive_pair(a, d1, d2))
    })
}

fn run_trial(cell: Cell, seed: u64, t: u64, opts: TrialOptions) -> Result<TrialRecord> {
    let group = CyclicGroup::prime(cell.modulus)?;
    let a = sample_subset(group, RandomModel::new(cell.p, seed)?, t);
    let eligible = a.len() >= 3;
    let rank = if eligible { Some(freiman_rank(&a)?) } else { None };
    let linear = rank.map(|r| r == 1);
    let isolated = if eligible { find_isolated_element(&a) } else { None };
    let hom_verified = isolated.map(|x0| match indicator_hom_from_isolated(&a, x0) {
        Ok(h) => h.verify().is_ok() && !h.is_linear_restriction(),
        Err(_) => false,
    });
    let diff_set_full = a.has_full_difference_set();
    let (lambda_flags, pairs) = match opts.lambda_level {
        Some(level) => (
            lambda_levels(&a, level, LambdaMode::Positivity)?
                .iter()
                .map(|t| t.all_distinct_positive())
                .collect(),
            Some(all_pairs_additive(&a)),
        ),
        None => (Vec::new(), None),
    };
    let pairs_agree = if opts.cross_check && eligible && diff_set_full {
        Some(is_linear_via_pairs(&a)? == linear.unwrap_or(false))
    } else {
        None
    };
    Ok(TrialRecord {
        modulus: cell.modulus,
        alpha: cell.alpha,
        p: cell.p,
        trial_index: t,
        size: a.len(),
        diff_set_full,
        rank,
        linear,
        isolated_found: isolated.is_some(),
        hom_verified,
        quadruple_count: count_additive_quadruples(&a),
        lambda_levels: lambda_flags,
        all_pairs_additive: pairs,
        pairs_agree,
    })
}

fn run_cell(cell: Cell, config: &ExperimentConfig, opts: TrialOptions) -> Result<Vec<TrialRecord>> {
    (0..config.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(cell, config.master_seed, t, opts))
        .collect()
}

/// Aggregated rows plus the per-trial records behind them.
#[derive(Debug, Clone)]
pub struct Report<R> {
    pub rows: Vec<R>,
    pub records: Vec<TrialRecord>,
}

impl<R: CsvRow> Report<R> {
    pub fn to_csv(&self) -> Result<String> {
        to_csv(R::HEADER, self.rows.iter().map(CsvRow::fields))
    }
}

impl<R> Report<R> {
    /// One JSON object per trial.
    pub fn records_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).map_err(|e| Error::Parse(e.to_string()))?);
            out.push('\n');
        }
        Ok(out)
    }
}

pub trait CsvRow {
    const HEADER: &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

fn to_csv<I: IntoIterator<Item = Vec<String>>>(header: &[&str], rows: I) -> Result<String> {
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// Six decimals; empty for undefined values.
fn f6(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6}")
    } else {
        String::new()
    }
}

fn opt_f6(x: Option<f64>) -> String {
    x.map(f6).unwrap_or_default()
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        f64::NAN
    } else {
        num as f64 / den as f64
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub cell: Cell,
    pub trials: usize,
    /// Trials with `|A| < 3`.
    pub small_sets: usize,
    pub mean_size: f64,
    pub fraction_diff_full: f64,
    /// Linear trials over all trials.
    pub fraction_linear: f64,
    /// Trials with a verified non-affine indicator hom over trials with
    /// `|A| >= 3`.
    pub fraction_isolated: f64,
    pub mean_rank: f64,
    /// Trials whose rank and pair verdicts differ (cross-check only).
    pub disagreements: usize,
}

impl CsvRow for SweepRow {
    const HEADER: &'static [&'static str] = &[
        "N",
        "alpha",
        "p",
        "trials",
        "small_sets",
        "mean_size",
        "fraction_diff_full",
        "fraction_linear",
        "fraction_isolated",
        "mean_rank",
        "disagreements",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.cell.modulus.to_string(),
            opt_f6(self.cell.alpha),
            f6(self.cell.p),
            self.trials.to_string(),
            self.small_sets.to_string(),
            f6(self.mean_size),
            f6(self.fraction_diff_full),
            f6(self.fraction_linear),
            f6(self.fraction_isolated),
            f6(self.mean_rank),
            self.disagreements.to_string(),
        ]
    }
}

fn sweep_row(cell: Cell, recs: &[TrialRecord]) -> SweepRow {
    let n = recs.len();
    let eligible = recs.iter().filter(|r| r.size >= 3).count();
    SweepRow {
        cell,
        trials: n,
        small_sets: n - eligible,
        mean_size: mean(recs.iter().map(|r| r.size as f64)),
        fraction_diff_full: ratio(recs.iter().filter(|r| r.diff_set_full).count(), n),
        fraction_linear: ratio(recs.iter().filter(|r| r.linear == Some(true)).count(), n),
        fraction_isolated: ratio(recs.iter().filter(|r| r.hom_verified == Some(true)).count(), eligible),
        mean_rank: mean(recs.iter().filter_map(|r| r.rank.map(|x| x as f64))),
        disagreements: recs.iter().filter(|r| r.pairs_agree == Some(false)).count(),
    }
}

/// Linearity, difference-set coverage and rank per cell.
pub fn sweep_linearity(config: &ExperimentConfig) -> Result<Report<SweepRow>> {
    config.validate()?;
    let opts = TrialOptions {
        lambda_level: None,
        cross_check: config.mode.cross_check,
    };
    let mut report = Report {
        rows: Vec::new(),
        records: Vec::new(),
    };
    for cell in config.cells() {
        let recs = run_cell(cell, config, opts)?;
        report.rows.push(sweep_row(cell, &recs));
        report.records.extend(recs);
    }
    Ok(report)
}

/// `E[X] = Σ p^{#distinct}` over all `(a, b, c, d)` in `Z_N^4` with
/// `a - b = c - d`, by translating `a` to 0: `N Σ_{b,c} p^{#{0, b, c, b+c}}`.
pub fn exact_quadruple_expectation(modulus: u32, p: f64) -> f64 {
    let n = modulus as u64;
    let mut by_distinct = [0u64; 5];
    for b in 0..n {
        for c in 0..n {
            let d = (b + c) % n;
            let mut v = [0, b, c, d];
            v.sort_unstable();
            let distinct = 1 + v.windows(2).filter(|w| w[0] != w[1]).count();
            by_distinct[distinct] += 1;
        }
    }
    by_distinct
        .iter()
        .enumerate()
        .map(|(k, &count)| (n * count) as f64 * p.powi(k as i32))
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundRow {
    pub cell: Cell,
    pub trials: usize,
    pub empty_sets: usize,
    /// Trials with `|A| >= 3`.
    pub eligible: usize,
    pub isolated_found: usize,
    pub homs_verified: usize,
    pub fraction_isolated: f64,
    pub mean_x: f64,
    pub se_x: f64,
    /// Present for `N <= 31`.
    pub exact_ex: Option<f64>,
    pub bound_n3p4: f64,
}

impl CsvRow for LowerBoundRow {
    const HEADER: &'static [&'static str] = &[
        "N",
        "alpha",
        "p",
        "trials",
        "empty_sets",
        "eligible",
        "isolated_found",
        "homs_verified",
        "fraction_isolated",
        "mean_X",
        "se_X",
        "exact_EX",
        "bound_N3p4",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.cell.modulus.to_string(),
            opt_f6(self.cell.alpha),
            f6(self.cell.p),
            self.trials.to_string(),
            self.empty_sets.to_string(),
            self.eligible.to_string(),
            self.isolated_found.to_string(),
            self.homs_verified.to_string(),
            f6(self.fraction_isolated),
            f6(self.mean_x),
            f6(self.se_x),
            opt_f6(self.exact_ex),
            f6(self.bound_n3p4),
        ]
    }
}

/// Isolated-element homs and the quadruple count X per cell.
pub fn lower_bound_experiment(config: &ExperimentConfig) -> Result<Report<LowerBoundRow>> {
    config.validate()?;
    let mut report = Report {
        rows: Vec::new(),
        records: Vec::new(),
    };
    for cell in config.cells() {
        let recs = run_cell(cell, config, TrialOptions::default())?;
        let n = recs.len();
        let xs: Vec<f64> = recs.iter().map(|r| r.quadruple_count as f64).collect();
        let mean_x = mean(xs.iter().copied());
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean_x).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let eligible = recs.iter().filter(|r| r.size >= 3).count();
        let homs_verified = recs.iter().filter(|r| r.hom_verified == Some(true)).count();
        let nf = f64::from(cell.modulus);
        report.rows.push(LowerBoundRow {
            cell,
            trials: n,
            empty_sets: recs.iter().filter(|r| r.size == 0).count(),
            eligible,
            isolated_found: recs.iter().filter(|r| r.isolated_found).count(),
            homs_verified,
            fraction_isolated: ratio(homs_verified, eligible),
            mean_x,
            se_x: (var / n as f64).sqrt(),
            exact_ex: (cell.modulus <= EXACT_EXPECTATION_MAX_MODULUS)
                .then(|| exact_quadruple_expectation(cell.modulus, cell.p)),
            bound_n3p4: nf.powi(3) * cell.p.powi(4),
        });
        report.records.extend(recs);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaRow {
    pub cell: Cell,
    pub level: usize,
    pub trials: usize,
    pub fraction_positive: f64,
    pub fraction_linear: f64,
    pub fraction_pairs_additive: f64,
    /// Trials positive at this level but not linear; the implication says 0.
    pub positive_not_linear: usize,
}

impl CsvRow for LambdaRow {
    const HEADER: &'static [&'static str] = &[
        "N",
        "alpha",
        "p",
        "level",
        "trials",
        "fraction_positive",
        "fraction_linear",
        "fraction_pairs_additive",
        "positive_not_linear",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.cell.modulus.to_string(),
            opt_f6(self.cell.alpha),
            f6(self.cell.p),
            self.level.to_string(),
            self.trials.to_string(),
            f6(self.fraction_positive),
            f6(self.fraction_linear),
            f6(self.fraction_pairs_additive),
            self.positive_not_linear.to_string(),
        ]
    }
}

/// Positivity of Λ^i on all distinct triangles, one row per level.
pub fn lambda_threshold_experiment(config: &ExperimentConfig) -> Result<Report<LambdaRow>> {
    config.validate()?;
    let opts = TrialOptions {
        lambda_level: Some(config.level),
        cross_check: config.mode.cross_check,
    };
    let mut report = Report {
        rows: Vec::new(),
        records: Vec::new(),
    };
    for cell in config.cells() {
        let recs = run_cell(cell, config, opts)?;
        let n = recs.len();
        let linear = recs.iter().filter(|r| r.linear == Some(true)).count();
        let pairs = recs.iter().filter(|r| r.all_pairs_additive == Some(true)).count();
        for level in 0..=config.level {
            let positive = |r: &TrialRecord| r.lambda_levels[level];
            report.rows.push(LambdaRow {
                cell,
                level,
                trials: n,
                fraction_positive: ratio(recs.iter().filter(|r| positive(r)).count(), n),
                fraction_linear: ratio(linear, n),
                fraction_pairs_additive: ratio(pairs, n),
                positive_not_linear: recs
                    .iter()
                    .filter(|r| positive(r) && r.linear != Some(true))
                    .count(),
            });
        }
        report.records.extend(recs);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistRow {
    pub modulus: u32,
    pub p: Option<f64>,
    pub metric: &'static str,
    pub j: Option<usize>,
    pub value: f64,
}

impl CsvRow for DistRow {
    const HEADER: &'static [&'static str] = &["N", "p", "metric", "j", "value"];

    fn fields(&self) -> Vec<String> {
        vec![
            self.modulus.to_string(),
            opt_f6(self.p),
            self.metric.to_string(),
            self.j.map(|j| j.to_string()).unwrap_or_default(),
            f6(self.value),
        ]
    }
}

/// Measured dist4 constants per bucket, dist2 ratios `E_j / shape_j` per
/// density, and the degenerate fraction, for the exact Λ̃^1 expansion.
pub fn dist_bound_report(config: &ExperimentConfig) -> Result<Vec<DistRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    for &n in &config.n_list {
        if n > DIST_REPORT_MAX_MODULUS {
            return Err(Error::TooLarge {
                what: "modulus for the exact Λ̃^1 expansion",
                size: n as u128,
                limit: DIST_REPORT_MAX_MODULUS as u128,
            });
        }
        let params = config.params;
        let poly = ReducedBooleanPolynomial::from_lambda1(params, n, Some(Degeneracy::FormCollision))?;
        let row = |p, metric, j, value| DistRow {
            modulus: n,
            p,
            metric,
            j,
            value,
        };
        rows.push(row(None, "terms", None, poly.m(&[], None) as f64));
        let group = CyclicGroup::prime(n)?;
        let degenerate = degenerate_count(group, 1, params, Degeneracy::FormCollision)?;
        let nf = f64::from(n);
        rows.push(row(None, "degenerate_fraction", None, degenerate as f64 / nf.powi(4)));
        rows.push(row(None, "degenerate_over_N3", None, degenerate as f64 / nf.powi(3)));
        for (size, c) in dist4_constants(&poly, n, &DIST4_BUCKETS)? {
            rows.push(row(None, "dist4_C", Some(size), c));
        }
        for cell in config.cells().into_iter().filter(|c| c.modulus == n) {
            for (j, r) in dist2_ratios(&poly, n, cell.p)?.into_iter().enumerate() {
                rows.push(row(Some(cell.p), "dist2_ratio", Some(j), r));
            }
        }
    }
    Ok(rows)
}

pub fn dist_rows_csv(rows: &[DistRow]) -> Result<String> {
    to_csv(DistRow::HEADER, rows.iter().map(CsvRow::fields))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(n: Vec<u32>, p: PSpec, trials: usize) -> ExperimentConfig {
        ExperimentConfig {
            n_list: n,
            p_spec: p,
            trials,
            master_seed: 1,
            level: 1,
            mode: ModeFlags::default(),
            params: (0, 1, 3),
        }
    }

    #[test]
    fn config_parsing_and_validation() {
        let cfg = ExperimentConfig::from_json(
            r#"{"N_list": [101, 199], "p_spec": {"alpha": [0.4, 0.8]}, "trials": 10, "master_seed": 1}"#,
        )
        .unwrap();
        assert_eq!(cfg.cells().len(), 4);
        assert_eq!(cfg.level, 0);
        let bad = [
            r#"{"N_list": [100], "p_spec": {"alpha": [0.4]}, "trials": 10, "master_seed": 1}"#,
            r#"{"N_list": [101], "p_spec": {"alpha": [1.0]}, "trials": 10, "master_seed": 1}"#,
            r#"{"N_list": [101], "p_spec": {"explicit": [0.5]}, "trials": 0, "master_seed": 1}"#,
            r#"{"N_list": [101], "p_spec": {"alpha": [0.5]}, "trials": 1, "master_seed": 1, "extra": 2}"#,
        ];
        for b in bad {
            assert!(ExperimentConfig::from_json(b).is_err(), "{b}");
        }
        let capped = r#"{"N_list": [11], "p_spec": {"explicit": [0.5]}, "trials": 1, "master_seed": 1, "level": 4}"#;
        assert!(matches!(ExperimentConfig::from_json(capped), Err(Error::LevelCapExceeded { .. })));
    }

    #[test]
    fn exact_expectation_matches_brute_force() {
        for n in [5u32, 7, 11] {
            for p in [0.1f64, 0.5, 0.9] {
                let mut total = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            for d in 0..n {
                                if (a + n - b) % n == (c + n - d) % n {
                                    let mut v = vec![a, b, c, d];
                                    v.sort_unstable();
                                    v.dedup();
                                    total += p.powi(v.len() as i32);
                                }
                            }
                        }
                    }
                }
                let got = exact_quadruple_expectation(n, p);
                assert!((got - total).abs() < 1e-9 * total, "{n} {p}");
            }
        }
        // p = 1 counts every quadruple: N^3
        assert!((exact_quadruple_expectation(13, 1.0) - 2197.0).abs() < 1e-9);
    }

    #[test]
    fn full_density_is_linear() {
        let cfg = config(vec![13], PSpec::Explicit(vec![1.0]), 5);
        let report = sweep_linearity(&cfg).unwrap();
        let row = &report.rows[0];
        assert_eq!(row.fraction_linear, 1.0);
        assert_eq!(row.fraction_diff_full, 1.0);
        assert_eq!(row.mean_rank, 1.0);
    }

    #[test]
    fn zero_density_reports_empty_sets() {
        let cfg = config(vec![31], PSpec::Explicit(vec![0.0]), 7);
        let report = lower_bound_experiment(&cfg).unwrap();
        let row = &report.rows[0];
        assert_eq!((row.empty_sets, row.eligible, row.mean_x), (7, 0, 0.0));
        assert!(row.fraction_isolated.is_nan());
        let csv = report.to_csv().unwrap();
        assert!(csv.lines().nth(1).unwrap().contains(",7,0,0,0,,"));
    }

    #[test]
    fn trial_invariants_hold() {
        let mut cfg = config(vec![31], PSpec::Alpha(vec![0.3, 0.5, 0.7]), 60);
        cfg.mode.cross_check = true;
        let report = lambda_threshold_experiment(&cfg).unwrap();
        for r in &report.records {
            assert_eq!(r.linear, r.rank.map(|x| x == 1));
            if r.isolated_found {
                assert_eq!(r.linear, Some(false));
                assert_eq!(r.hom_verified, Some(true));
            }
            assert_ne!(r.pairs_agree, Some(false));
            // level 0 positivity is exactly "every pair additive"
            assert_eq!(Some(r.lambda_levels[0]), r.all_pairs_additive);
        }
        assert!(report.rows.iter().all(|r| r.positive_not_linear == 0));
        assert!(report.rows.iter().all(|r| r.fraction_positive <= r.fraction_linear));
    }

    #[test]
    fn control_row_is_all_ones() {
        let mut cfg = config(vec![11], PSpec::Alpha(vec![0.5]), 3);
        cfg.mode.full_set_control = true;
        let report = lambda_threshold_experiment(&cfg).unwrap();
        let control: Vec<_> = report.rows.iter().filter(|r| r.cell.p == 1.0).collect();
        assert_eq!(control.len(), 2);
        for r in control {
            assert_eq!(
                (r.fraction_positive, r.fraction_linear, r.fraction_pairs_additive),
                (1.0, 1.0, 1.0)
            );
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let cfg = config(vec![31, 37], PSpec::Alpha(vec![0.4, 0.7]), 40);
        let a = sweep_linearity(&cfg).unwrap();
        let b = sweep_linearity(&cfg).unwrap();
        assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
        assert_eq!(a.records_jsonl().unwrap(), b.records_jsonl().unwrap());
        let header = a.to_csv().unwrap().lines().next().unwrap().to_string();
        assert_eq!(header, SweepRow::HEADER.join(","));
    }

    #[test]
    fn dist_report_shape() {
        let cfg = config(vec![11], PSpec::Explicit(vec![0.5]), 1);
        let rows = dist_bound_report(&cfg).unwrap();
        let get = |metric: &str, j: Option<usize>| {
            rows.iter().find(|r| r.metric == metric && r.j == j).unwrap().value
        };
        assert_eq!(get("terms", None), 264.0);
        assert!((get("degenerate_fraction", None) - (14641.0 - 264.0) / 14641.0).abs() < 1e-12);
        assert_eq!(rows.iter().filter(|r| r.metric == "dist2_ratio").count(), 10);
        assert!(get("dist4_C", Some(1)) > 0.0);
        let too_big = config(vec![19], PSpec::Explicit(vec![0.5]), 1);
        assert!(matches!(dist_bound_report(&too_big), Err(Error::TooLarge { .. })));
    }
}
