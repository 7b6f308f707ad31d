//! Pooled estimates, the JSON report, the text summary and the plot-ready files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use mc2_core::diagnostics::{batch_means_se, mean, Histogram};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::problem::{ProblemFile, SCHEMA_VERSION};
use crate::run::ChainOutput;

pub const TOP_DRAWS: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub name: String,
    pub mean: f64,
    pub se: f64,
    /// Midpoint of the fullest histogram bin.
    pub mode: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopDraw {
    pub chain: usize,
    pub sweep: usize,
    pub x: Vec<f64>,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelDiag {
    pub chain: usize,
    pub kappa: Option<f64>,
    pub sweeps: usize,
    pub kept: usize,
    pub mean_objective: Option<f64>,
    pub se_objective: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub schema_version: u32,
    pub config: RunConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub problem: String,
    pub problem_type: String,
    pub solver: String,
    pub estimates: Vec<Estimate>,
    /// Mean objective over the kept draws, when the solver records one.
    pub value: Option<Estimate>,
    pub top_draws: Vec<TopDraw>,
    pub levels: Vec<LevelDiag>,
    /// Per-chain acceptance rates and solver statistics.
    pub chain_stats: Vec<BTreeMap<String, f64>>,
    /// Exact reference values and derived comparisons.
    pub checks: BTreeMap<String, f64>,
    pub provenance: Provenance,
}

/// Pooled mean; the standard error combines the per-chain batch-means errors.
fn pooled(chains: &[ChainOutput], col: impl Fn(&ChainOutput) -> usize) -> (f64, f64, usize, Vec<f64>) {
    let mut all = Vec::new();
    let mut var = 0.0;
    for ch in chains {
        let v = ch.column(col(ch));
        let se = if v.len() >= 4 { batch_means_se(&v) } else { 0.0 };
        var += se * se;
        all.extend(v);
    }
    let se = var.sqrt() / chains.len() as f64;
    (mean(&all), se, all.len(), all)
}

pub fn histogram_for(chains: &[ChainOutput], i: usize, data: &[f64]) -> Histogram {
    match chains[0].hist_layout.as_ref().map(|h| h[i]) {
        Some((bins, lo, hi)) => Histogram::fixed(data, bins, lo, hi),
        None => Histogram::freedman_diaconis(data),
    }
}

pub fn build_report(pf: &ProblemFile, cfg: &RunConfig, chains: &[ChainOutput], mut checks: BTreeMap<String, f64>) -> Result<RunReport, CliError> {
    let first = chains.first().ok_or_else(|| CliError::Config("no chains were run".into()))?;
    if chains.iter().any(|c| c.kept().is_empty()) {
        return Err(CliError::Config("a chain kept no draws; raise --sweeps or lower --burnin".into()));
    }
    let mut estimates = Vec::new();
    for (i, &c) in first.x_cols.iter().enumerate() {
        let (m, se, n, data) = pooled(chains, |ch| ch.x_cols[i]);
        let (_, lo, hi) = histogram_for(chains, i, &data).mode_bin();
        estimates.push(Estimate { name: first.columns[c].clone(), mean: m, se, mode: 0.5 * (lo + hi), n });
    }
    let value = first.objective_col.map(|c| {
        let (m, se, n, data) = pooled(chains, |ch| ch.objective_col.expect("same solver"));
        let mode = if first.minimize { data.iter().copied().fold(f64::INFINITY, f64::min) } else { data.iter().copied().fold(f64::NEG_INFINITY, f64::max) };
        Estimate { name: first.columns[c].clone(), mean: m, se, mode, n }
    });

    let mut top_draws = Vec::new();
    if let Some(oc) = first.objective_col {
        let sign = if first.minimize { -1.0 } else { 1.0 };
        let mut cand: Vec<(usize, usize, &Vec<f64>)> = Vec::new();
        for ch in chains {
            let off = ch.levels.last().map_or(0, |l| l.burnin_end);
            cand.extend(ch.kept().iter().enumerate().map(|(i, r)| (ch.chain, ch.first_sweep + off + i, r)));
        }
        cand.sort_by(|a, b| (sign * b.2[oc]).total_cmp(&(sign * a.2[oc])));
        for (chain, sweep, r) in cand {
            let x: Vec<f64> = first.x_cols.iter().map(|&c| r[c]).collect();
            let scale = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let distinct = top_draws.iter().all(|t: &TopDraw| t.x.iter().zip(&x).any(|(a, b)| (a - b).abs() > 1e-9 * scale));
            if distinct {
                top_draws.push(TopDraw { chain, sweep, x, objective: r[oc] });
                if top_draws.len() == TOP_DRAWS {
                    break;
                }
            }
        }
    }

    let mut levels = Vec::new();
    for ch in chains {
        for l in &ch.levels {
            let vals: Option<Vec<f64>> = ch.objective_col.map(|c| ch.rows[l.burnin_end..l.end].iter().map(|r| r[c]).collect());
            levels.push(LevelDiag {
                chain: ch.chain,
                kappa: l.kappa,
                sweeps: l.sweeps,
                kept: l.end - l.burnin_end,
                mean_objective: vals.as_ref().map(|v| mean(v)),
                se_objective: vals.as_ref().map(|v| if v.len() >= 4 { batch_means_se(v) } else { 0.0 }),
            });
        }
    }

    if let (Some(v), Some(o)) = (&value, checks.get("oracle_value").copied()) {
        checks.insert("relative_gap".into(), (v.mean - o).abs() / o.abs().max(f64::MIN_POSITIVE));
    }
    for e in &estimates {
        if let Some(a) = checks.get(&format!("analytic_optimum_{}", e.name)).copied() {
            checks.insert(format!("relative_error_{}", e.name), (e.mean - a).abs() / a.abs().max(f64::MIN_POSITIVE));
        }
    }
    if let Some(a) = checks.get("oracle_argmax").copied() {
        let (_, _, _, data) = pooled(chains, |ch| ch.x_cols[0]);
        let h = histogram_for(chains, 0, &data);
        let (mode, lo, hi) = h.mode_bin();
        checks.insert("modal_bin_lo".into(), lo);
        checks.insert("modal_bin_hi".into(), hi);
        let hit = h.bin_of(a).is_some_and(|b| b.abs_diff(mode) <= 1);
        checks.insert("oracle_within_one_bin".into(), if hit { 1.0 } else { 0.0 });
    }

    Ok(RunReport {
        problem: pf.name.clone(),
        problem_type: pf.problem.kind().into(),
        solver: cfg.solver.name().into(),
        estimates,
        value,
        top_draws,
        levels,
        chain_stats: chains.iter().map(|c| c.stats.clone()).collect(),
        checks,
        provenance: Provenance { version: env!("CARGO_PKG_VERSION").into(), schema_version: SCHEMA_VERSION, config: cfg.clone() },
    })
}

fn num(v: f64) -> String {
    if v.is_nan() { "nan".into() } else { format!("{v}") }
}

/// Human-readable table of estimates with their standard errors.
pub fn report_summary(r: &RunReport) -> Result<String, CliError> {
    if r.estimates.is_empty() || r.estimates.iter().any(|e| e.n == 0) {
        return Err(CliError::Config("report has no draws to summarize".into()));
    }
    let mut s = String::new();
    let cfg = &r.provenance.config;
    let _ = writeln!(s, "problem  {} ({})", r.problem, r.problem_type);
    let _ = writeln!(s, "solver   {}  seed {}  chains {}", r.solver, cfg.seed, cfg.chains);
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<12} {:>14} {:>12} {:>14} {:>9}", "estimate", "mean", "se", "mode", "draws");
    for e in r.estimates.iter().chain(&r.value) {
        let _ = writeln!(s, "{:<12} {:>14.6} {:>12.2e} {:>14.6} {:>9}", e.name, e.mean, e.se, e.mode, e.n);
    }
    if !r.top_draws.is_empty() {
        let _ = writeln!(s, "\ntop draws by objective");
        for t in &r.top_draws {
            let x: Vec<String> = t.x.iter().map(|v| format!("{v:.6}")).collect();
            let _ = writeln!(s, "  {:>12.6}  at ({})  chain {} sweep {}", t.objective, x.join(", "), t.chain, t.sweep);
        }
    }
    if r.levels.iter().any(|l| l.kappa.is_some()) {
        let _ = writeln!(s, "\n{:<6} {:>10} {:>8} {:>8} {:>14} {:>12}", "chain", "kappa", "sweeps", "kept", "mean obj", "se");
        for l in &r.levels {
            let k = l.kappa.map_or("-".into(), num);
            let m = l.mean_objective.map_or("-".into(), |v| format!("{v:.6}"));
            let e = l.se_objective.map_or("-".into(), |v| format!("{v:.2e}"));
            let _ = writeln!(s, "{:<6} {:>10} {:>8} {:>8} {:>14} {:>12}", l.chain, k, l.sweeps, l.kept, m, e);
        }
    }
    for (c, st) in r.chain_stats.iter().enumerate() {
        if !st.is_empty() {
            let kv: Vec<String> = st.iter().map(|(k, v)| format!("{k}={}", num(*v))).collect();
            let _ = writeln!(s, "chain {c}: {}", kv.join("  "));
        }
    }
    if !r.checks.is_empty() {
        let _ = writeln!(s, "\nchecks");
        for (k, v) in &r.checks {
            let _ = writeln!(s, "  {k:<26} {}", num(*v));
        }
    }
    Ok(s)
}

/// Tab-separated trace: a `sweep` column and then the chain's columns, one draw per line.
pub fn write_trace(path: &Path, ch: &ChainOutput) -> Result<(), CliError> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "sweep\t{}", ch.columns.join("\t"))?;
    for (i, r) in ch.rows.iter().enumerate() {
        write!(f, "{}", ch.first_sweep + i)?;
        for v in r {
            write!(f, "\t{}", num(*v))?;
        }
        writeln!(f)?;
    }
    f.flush()?;
    Ok(())
}

pub fn write_histogram(path: &Path, h: &Histogram) -> Result<(), CliError> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "edge_lo\tedge_hi\tcount")?;
    for (i, c) in h.counts.iter().enumerate() {
        writeln!(f, "{}\t{}\t{c}", num(h.edges[i]), num(h.edges[i + 1]))?;
    }
    f.flush()?;
    Ok(())
}

/// Writes traces, histograms, `report.json` and `summary.txt` into `dir`, one file at a time.
pub fn write_artifacts(dir: &Path, report: &RunReport, chains: &[ChainOutput]) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    for ch in chains {
        write_trace(&dir.join(format!("trace_chain{}.tsv", ch.chain)), ch)?;
    }
    let first = &chains[0];
    for (i, &c) in first.x_cols.iter().enumerate() {
        let data: Vec<f64> = chains.iter().flat_map(|ch| ch.column(ch.x_cols[i])).collect();
        write_histogram(&dir.join(format!("histogram_{}.tsv", first.columns[c])), &histogram_for(chains, i, &data))?;
    }
    let json = serde_json::to_string_pretty(report).map_err(|e| CliError::Config(format!("cannot serialize report: {e}")))?;
    fs::write(dir.join("report.json"), json + "\n")?;
    fs::write(dir.join("summary.txt"), report_summary(report)?)?;
    Ok(())
}
