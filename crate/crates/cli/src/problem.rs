//! Problem files: versioned JSON, one problem per file.

use std::fs;
use std::path::Path;

use mc2_core::stochprog::{FarmerInstance, OmegaLaw, PortfolioInstance, RecourseData, TwoStageProblem, TwoStageVariant};
use mc2_core::Polytope;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema_version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub problem: ProblemSpec,
    /// Run settings used when the command line leaves them out.
    #[serde(default)]
    pub defaults: RunDefaults,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunDefaults {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_schedule: Option<Vec<f64>>,
    #[serde(default, rename = "J", skip_serializing_if = "Option::is_none")]
    pub copies: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweeps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level_sweeps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burnin: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chains: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ProblemSpec {
    Lp(LpSpec),
    OneStage(OneStageSpec),
    Portfolio(PortfolioSpec),
    Farmer(FarmerSpec),
    TwoStage(TwoStageSpec),
}

/// Either the allocation form `max c·x, x₁ + b·x₂ = t, 0 ≤ x ≤ upper` (give `b`, `t`) or the
/// inequality form `c·x` subject to `a·x ≤ rhs` (give `a`, `rhs`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpSpec {
    pub c: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonneg: Option<Vec<bool>>,
    #[serde(default)]
    pub sense: LpSense,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpSense {
    #[default]
    Max,
    Min,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OneStageSpec {
    /// Name of a built-in payoff.
    pub payoff: String,
}

pub const ONE_STAGE_PAYOFFS: &[&str] = &["quadratic-toy"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortfolioSpec {
    pub mu: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
    pub gamma: f64,
    #[serde(default)]
    pub r_f: f64,
    pub k_shift: f64,
    pub x_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FarmerSpec {
    pub k: f64,
    pub x_range: [f64; 2],
    pub omega: OmegaSpec,
    /// Fixed first stage and scenario for the inner solvers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<FarmerInnerSpec>,
    /// Random-walk step for x in the outer chain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
pub enum OmegaSpec {
    Uniform { w1: [f64; 2], w2: [f64; 2] },
    Fixed([f64; 2]),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FarmerInnerSpec {
    pub x: f64,
    pub omega: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoStageSpec {
    pub c: Vec<f64>,
    pub first_stage: ConstraintSpec,
    pub w: Vec<Vec<f64>>,
    pub scenarios: Vec<ScenarioSpec>,
    pub probs: Vec<f64>,
    pub shift: f64,
    #[serde(default)]
    pub variant: VariantSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSpec {
    pub a: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonneg: Option<Vec<bool>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub q: Vec<f64>,
    pub h: Vec<f64>,
    pub t: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantSpec {
    #[default]
    Sliced,
    PayoffWeighted,
}

impl ProblemSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ProblemSpec::Lp(_) => "lp",
            ProblemSpec::OneStage(_) => "one-stage",
            ProblemSpec::Portfolio(_) => "portfolio",
            ProblemSpec::Farmer(_) => "farmer",
            ProblemSpec::TwoStage(_) => "two-stage",
        }
    }
}

pub fn parse_problem_str(text: &str) -> Result<ProblemFile, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let pf: ProblemFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        CliError::Config(format!(
            "line {} column {}: field `{path}`: {inner}",
            inner.line(),
            inner.column()
        ))
    })?;
    if pf.schema_version != SCHEMA_VERSION {
        return Err(CliError::Config(format!(
            "field `schema_version`: unsupported version {} (this build reads {SCHEMA_VERSION})",
            pf.schema_version
        )));
    }
    pf.problem.validate()?;
    Ok(pf)
}

pub fn parse_problem(path: &Path) -> Result<ProblemFile, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_problem_str(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn cfg(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Row-major matrix from nested rows; every row must have `cols` entries when given.
fn matrix(field: &str, rows: &[Vec<f64>], cols: Option<usize>) -> Result<DMatrix<f64>, CliError> {
    if rows.is_empty() {
        return Err(cfg(format!("field `{field}`: matrix has no rows")));
    }
    let n = cols.unwrap_or(rows[0].len());
    for (i, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(cfg(format!("field `{field}[{i}]`: row has {} entries, expected {n}", r.len())));
        }
    }
    Ok(DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]))
}

fn finite(field: &str, v: &[f64]) -> Result<(), CliError> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(cfg(format!("field `{field}[{i}]` is not finite"))),
        None => Ok(()),
    }
}

impl ProblemSpec {
    /// Dimension and range checks that the JSON schema cannot express.
    pub fn validate(&self) -> Result<(), CliError> {
        match self {
            ProblemSpec::Lp(s) => s.validate(),
            ProblemSpec::OneStage(s) => {
                if ONE_STAGE_PAYOFFS.contains(&s.payoff.as_str()) {
                    Ok(())
                } else {
                    Err(cfg(format!(
                        "field `problem.payoff`: unknown built-in `{}`; available: {}",
                        s.payoff,
                        ONE_STAGE_PAYOFFS.join(", ")
                    )))
                }
            }
            ProblemSpec::Portfolio(s) => s.instance(1).map(|_| ()),
            ProblemSpec::Farmer(s) => s.instance().map(|_| ()),
            ProblemSpec::TwoStage(s) => s.problem(1.0, 1).map(|_| ()),
        }
    }
}

/// The LP in one of its two forms.
pub enum LpForm {
    Allocation(mc2_core::anneal::PincusParams),
    Inequality { c: DVector<f64>, poly: Polytope, sense: LpSense },
}

impl LpSpec {
    pub fn is_allocation(&self) -> bool {
        self.b.is_some() || self.t.is_some()
    }

    fn validate(&self) -> Result<(), CliError> {
        self.form().map(|_| ())
    }

    pub fn form(&self) -> Result<LpForm, CliError> {
        finite("problem.c", &self.c)?;
        if self.is_allocation() {
            if self.a.is_some() || self.rhs.is_some() || self.nonneg.is_some() {
                return Err(cfg("fields `problem.a`/`problem.rhs`/`problem.nonneg` cannot be mixed with the allocation form (`b`, `t`)"));
            }
            if self.sense != LpSense::Max {
                return Err(cfg("field `problem.sense`: the allocation form is a maximization"));
            }
            let (Some(b), Some(t)) = (self.b, self.t) else {
                return Err(cfg("fields `problem.b` and `problem.t` must both be given"));
            };
            if self.c.len() != 2 {
                return Err(cfg(format!("field `problem.c`: allocation form needs 2 entries, got {}", self.c.len())));
            }
            let p = match self.upper {
                Some([u1, u2]) => mc2_core::anneal::PincusParams::with_box(t, b, self.c[0], self.c[1], u1, u2),
                None => mc2_core::anneal::PincusParams::new(t, b, self.c[0], self.c[1]),
            }
            .map_err(|e| cfg(format!("fields `problem.b`/`problem.t`/`problem.upper`: {e}")))?;
            return Ok(LpForm::Allocation(p));
        }
        let (Some(a), Some(rhs)) = (&self.a, &self.rhs) else {
            return Err(cfg("give either `b` and `t` (allocation form) or `a` and `rhs` (inequality form)"));
        };
        if self.upper.is_some() {
            return Err(cfg("field `problem.upper` belongs to the allocation form"));
        }
        let k = self.c.len();
        let am = matrix("problem.a", a, Some(k))?;
        if rhs.len() != am.nrows() {
            return Err(cfg(format!("field `problem.rhs` has {} entries but `problem.a` has {} rows", rhs.len(), am.nrows())));
        }
        finite("problem.rhs", rhs)?;
        let nonneg = self.nonneg.clone().unwrap_or_else(|| vec![true; k]);
        if nonneg.len() != k {
            return Err(cfg(format!("field `problem.nonneg` has {} entries but `problem.c` has {k}", nonneg.len())));
        }
        let poly = Polytope::with_search(am, DVector::from_column_slice(rhs), nonneg, None).map_err(CliError::Solver)?;
        Ok(LpForm::Inequality { c: DVector::from_column_slice(&self.c), poly, sense: self.sense })
    }
}

impl PortfolioSpec {
    pub fn instance(&self, copies: usize) -> Result<PortfolioInstance, CliError> {
        let n = self.mu.len();
        finite("problem.mu", &self.mu)?;
        if self.sigma.len() != n {
            return Err(cfg(format!("field `problem.sigma` has {} rows but `problem.mu` has {n} entries", self.sigma.len())));
        }
        let sigma = matrix("problem.sigma", &self.sigma, Some(n))?;
        if (&sigma - sigma.transpose()).amax() > 1e-12 * (1.0 + sigma.amax()) {
            return Err(cfg("field `problem.sigma` is not symmetric"));
        }
        PortfolioInstance::new(DVector::from_column_slice(&self.mu), sigma, self.gamma, self.r_f, self.k_shift, copies, self.x_bound)
            .map_err(|e| cfg(format!("portfolio fields: {e}")))
    }
}

impl FarmerSpec {
    pub fn instance(&self) -> Result<FarmerInstance, CliError> {
        let omega = match self.omega {
            OmegaSpec::Uniform { w1, w2 } => OmegaLaw::Uniform { w1: (w1[0], w1[1]), w2: (w2[0], w2[1]) },
            OmegaSpec::Fixed(w) => OmegaLaw::Fixed(w),
        };
        if let Some(s) = self.step {
            if !(s > 0.0) || !s.is_finite() {
                return Err(cfg(format!("field `problem.step`: {s} must be positive")));
            }
        }
        FarmerInstance::new(self.k, (self.x_range[0], self.x_range[1]), omega)
            .map_err(|e| cfg(format!("farmer fields: {e}")))
    }

    pub fn inner_or_default(&self) -> FarmerInnerSpec {
        self.inner.unwrap_or(FarmerInnerSpec { x: 75.0, omega: [4000.0, 15000.0] })
    }
}

impl TwoStageSpec {
    pub fn problem(&self, kappa: f64, copies: usize) -> Result<TwoStageProblem, CliError> {
        let nx = self.c.len();
        finite("problem.c", &self.c)?;
        let a = matrix("problem.first_stage.a", &self.first_stage.a, Some(nx))?;
        if self.first_stage.rhs.len() != a.nrows() {
            return Err(cfg(format!(
                "field `problem.first_stage.rhs` has {} entries but `problem.first_stage.a` has {} rows",
                self.first_stage.rhs.len(),
                a.nrows()
            )));
        }
        let nonneg = self.first_stage.nonneg.clone().unwrap_or_else(|| vec![true; nx]);
        if nonneg.len() != nx {
            return Err(cfg(format!("field `problem.first_stage.nonneg` has {} entries, expected {nx}", nonneg.len())));
        }
        let first = Polytope::with_search(a, DVector::from_column_slice(&self.first_stage.rhs), nonneg, None).map_err(CliError::Solver)?;
        let w = matrix("problem.w", &self.w, None)?;
        let (m, ny) = w.shape();
        let mut scenarios = Vec::with_capacity(self.scenarios.len());
        for (s, sc) in self.scenarios.iter().enumerate() {
            if sc.q.len() != ny {
                return Err(cfg(format!("field `problem.scenarios[{s}].q` has {} entries but `problem.w` has {ny} columns", sc.q.len())));
            }
            if sc.h.len() != m {
                return Err(cfg(format!("field `problem.scenarios[{s}].h` has {} entries but `problem.w` has {m} rows", sc.h.len())));
            }
            if sc.t.len() != m {
                return Err(cfg(format!("field `problem.scenarios[{s}].t` has {} rows but `problem.w` has {m}", sc.t.len())));
            }
            let t = matrix(&format!("problem.scenarios[{s}].t"), &sc.t, Some(nx))?;
            scenarios.push(RecourseData { q: DVector::from_column_slice(&sc.q), h: DVector::from_column_slice(&sc.h), t });
        }
        if self.probs.len() != scenarios.len() {
            return Err(cfg(format!(
                "field `problem.probs` has {} entries but `problem.scenarios` has {}",
                self.probs.len(),
                scenarios.len()
            )));
        }
        let variant = match self.variant {
            VariantSpec::Sliced => TwoStageVariant::Sliced,
            VariantSpec::PayoffWeighted => TwoStageVariant::PayoffWeighted,
        };
        TwoStageProblem::new(DVector::from_column_slice(&self.c), first, w, scenarios, self.probs.clone(), kappa, copies, self.shift)
            .map(|p| p.with_variant(variant))
            .map_err(|e| match e {
                e if e.is_infeasibility() => CliError::Solver(e),
                e => cfg(format!("two-stage fields: {e}")),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ragged_rows_name_the_row() {
        let e = matrix("problem.a", &[vec![1.0, 2.0], vec![3.0]], None).unwrap_err();
        assert!(e.to_string().contains("problem.a[1]"), "{e}");
    }

    #[test]
    fn unknown_field_is_located() {
        let text = "{\n  \"schema_version\": 1,\n  \"name\": \"x\",\n  \"problem\": {\"type\": \"lp\", \"c\": [1, 3], \"b\": 2, \"t\": 5, \"bogus\": 1}\n}";
        let e = parse_problem_str(text).unwrap_err().to_string();
        // tagged enums are buffered, so the position is the end of the object; the path still names it
        assert!(e.contains("line 5") && e.contains("field `problem`") && e.contains("bogus"), "{e}");
    }
}
