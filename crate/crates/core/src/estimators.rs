//! The six analytical approaches, the summary-level difference-in-difference,
//! and a name-keyed registry of them.
//!
//! Every estimator reports the boy-vs-girl contrast in outcome units. Sex is
//! recoded to 0 = girl, 1 = boy before fitting so that the exposure
//! coefficient is the contrast itself.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::dgp::cols;
use crate::error::{LabError, Result};
use crate::ols::{ols, FitResult};
use crate::scm::Dataset;

pub const INTERACTION: &str = "X:Y0";

/// 0/1 boy indicator from the +-1 sex column.
pub fn boy_indicator(ds: &Dataset) -> Result<Vec<f64>> {
    Ok(ds
        .column(cols::X)?
        .iter()
        .map(|&x| if x > 0.0 { 1.0 } else { 0.0 })
        .collect())
}

fn change_score(ds: &Dataset) -> Result<Vec<f64>> {
    let (y0, y1) = (ds.column(cols::Y0)?, ds.column(cols::Y1)?);
    Ok(y1.iter().zip(y0).map(|(a, b)| a - b).collect())
}

/// Regression of the change score on sex.
pub fn approach1_change_score(ds: &Dataset) -> Result<f64> {
    let x = boy_indicator(ds)?;
    let dy = change_score(ds)?;
    Ok(ols(&dy, &[(cols::X, &x)])?.coef(cols::X))
}

/// Follow-up regressed on sex and baseline (ANCOVA), optionally with the
/// sex-by-baseline interaction.
pub fn approach2_ancova(ds: &Dataset, with_interaction: bool) -> Result<FitResult> {
    let x = boy_indicator(ds)?;
    let y0 = ds.column(cols::Y0)?;
    let y1 = ds.column(cols::Y1)?;
    if with_interaction {
        let xy0: Vec<f64> = x.iter().zip(y0).map(|(a, b)| a * b).collect();
        ols(y1, &[(cols::X, &x), (cols::Y0, y0), (INTERACTION, &xy0)])
    } else {
        ols(y1, &[(cols::X, &x), (cols::Y0, y0)])
    }
}

/// Change score regressed on sex and baseline.
pub fn approach4_change_adjusted(ds: &Dataset) -> Result<FitResult> {
    let x = boy_indicator(ds)?;
    let y0 = ds.column(cols::Y0)?;
    let dy = change_score(ds)?;
    ols(&dy, &[(cols::X, &x), (cols::Y0, y0)])
}

/// Follow-up regressed on sex alone.
pub fn approach5_follow_up(ds: &Dataset) -> Result<f64> {
    let x = boy_indicator(ds)?;
    Ok(ols(ds.column(cols::Y1)?, &[(cols::X, &x)])?.coef(cols::X))
}

/// Outcome model shared by both g-computation estimators:
/// Y1 on {X, Y0, M0} without interactions.
fn gcomp_outcome_model(ds: &Dataset, x: &[f64]) -> Result<FitResult> {
    ols(
        ds.column(cols::Y1)?,
        &[(cols::X, x), (cols::Y0, ds.column(cols::Y0)?), (cols::M0, ds.column(cols::M0)?)],
    )
}

/// Row indices of girls (arm 0) and boys (arm 1).
fn arms(x: &[f64]) -> Result<[Vec<usize>; 2]> {
    let mut out = [Vec::new(), Vec::new()];
    for (i, &v) in x.iter().enumerate() {
        out[(v > 0.5) as usize].push(i);
    }
    if out[0].is_empty() {
        return Err(LabError::EmptyArm("girls"));
    }
    if out[1].is_empty() {
        return Err(LabError::EmptyArm("boys"));
    }
    Ok(out)
}

/// Parametric g-formula for the controlled direct effect with Y0 fixed at
/// `y0_fixed`.
///
/// Each arm's mean prediction sets X to the arm value and Y0 to `y0_fixed`,
/// averaging over the arm's own observed M0 values (the empirical stand-in
/// for P[M0 = m | X = x]).
pub fn gcomp_cde(ds: &Dataset, y0_fixed: f64) -> Result<f64> {
    let x = boy_indicator(ds)?;
    let groups = arms(&x)?;
    let fit = gcomp_outcome_model(ds, &x)?;
    let m0 = ds.column(cols::M0)?;
    let arm_mean = |arm: usize| {
        let rows = &groups[arm];
        let total: f64 = rows
            .iter()
            .map(|&i| {
                fit.predict(&[(cols::X, arm as f64), (cols::Y0, y0_fixed), (cols::M0, m0[i])])
            })
            .sum();
        total / rows.len() as f64
    };
    Ok(arm_mean(1) - arm_mean(0))
}

/// Parametric g-formula for the total effect: (Y0, M0) drawn jointly from
/// each arm's empirical distribution.
pub fn gcomp_tce(ds: &Dataset) -> Result<f64> {
    let x = boy_indicator(ds)?;
    let groups = arms(&x)?;
    let fit = gcomp_outcome_model(ds, &x)?;
    let (y0, m0) = (ds.column(cols::Y0)?, ds.column(cols::M0)?);
    let arm_mean = |arm: usize| {
        let rows = &groups[arm];
        let total: f64 = rows
            .iter()
            .map(|&i| fit.predict(&[(cols::X, arm as f64), (cols::Y0, y0[i]), (cols::M0, m0[i])]))
            .sum();
        total / rows.len() as f64
    };
    Ok(arm_mean(1) - arm_mean(0))
}

/// Summary-level difference-in-difference:
/// (mean Y1 - mean Y0 | boys) - (mean Y1 - mean Y0 | girls).
pub fn did_means(ds: &Dataset) -> Result<f64> {
    let x = boy_indicator(ds)?;
    let groups = arms(&x)?;
    let (y0, y1) = (ds.column(cols::Y0)?, ds.column(cols::Y1)?);
    let mean = |rows: &[usize], col: &[f64]| {
        rows.iter().map(|&i| col[i]).sum::<f64>() / rows.len() as f64
    };
    let change = |rows: &[usize]| mean(rows, y1) - mean(rows, y0);
    Ok(change(&groups[1]) - change(&groups[0]))
}

/// The six Table-1 style estimates from one dataset, in kg.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateSet {
    pub approach1_kg: f64,
    pub approach2_kg: f64,
    pub gcomp_cde_kg: f64,
    pub approach4_kg: f64,
    pub approach5_kg: f64,
    pub gcomp_tce_kg: f64,
}

impl EstimateSet {
    /// Column names, also the registry names, in table order.
    pub const NAMES: [&'static str; 6] = [
        "approach1",
        "approach2",
        "gcomp_cde",
        "approach4",
        "approach5",
        "gcomp_tce",
    ];

    pub fn compute(ds: &Dataset, y0_fixed: f64) -> Result<Self> {
        Ok(EstimateSet {
            approach1_kg: approach1_change_score(ds)?,
            approach2_kg: approach2_ancova(ds, false)?.coef(cols::X),
            gcomp_cde_kg: gcomp_cde(ds, y0_fixed)?,
            approach4_kg: approach4_change_adjusted(ds)?.coef(cols::X),
            approach5_kg: approach5_follow_up(ds)?,
            gcomp_tce_kg: gcomp_tce(ds)?,
        })
    }

    pub fn values(&self) -> [f64; 6] {
        [
            self.approach1_kg,
            self.approach2_kg,
            self.gcomp_cde_kg,
            self.approach4_kg,
            self.approach5_kg,
            self.gcomp_tce_kg,
        ]
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        Self::NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| self.values()[i])
    }

    pub const CSV_HEADER: &'static str =
        "rep,approach1,approach2,gcomp_cde,approach4,approach5,gcomp_tce";

    pub fn csv_row(&self, rep: usize) -> String {
        let mut row = rep.to_string();
        for v in self.values() {
            row.push_str(&format!(",{:.4}", v));
        }
        row
    }
}

/// Writes the per-replication estimates CSV.
pub fn estimates_csv(estimates: &[EstimateSet]) -> String {
    let mut out = String::from(EstimateSet::CSV_HEADER);
    out.push('\n');
    for (rep, e) in estimates.iter().enumerate() {
        out.push_str(&e.csv_row(rep));
        out.push('\n');
    }
    out
}

/// What an approach's coefficient targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimand {
    /// No clear causal interpretation when X and Y0 are correlated.
    Obscure,
    ControlledDirect,
    Total,
}

impl Estimand {
    pub fn label(self) -> &'static str {
        match self {
            Estimand::Obscure => "Obscure when X and Y0 are correlated",
            Estimand::ControlledDirect => {
                "Controlled direct causal effect of X on Y1 not mediated through Y0, for a fixed value of Y0"
            }
            Estimand::Total => "Total causal effect of X on Y1",
        }
    }
}

/// Settings shared by every approach.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationContext {
    /// Baseline value (kg) at which controlled direct effects are evaluated.
    pub y0_fixed_kg: f64,
}

impl Default for EstimationContext {
    fn default() -> Self {
        EstimationContext { y0_fixed_kg: 80.0 }
    }
}

/// One analytical approach producing a boy-vs-girl contrast.
pub trait Approach: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn formula(&self) -> &'static str;
    fn estimand(&self) -> Estimand;
    fn estimate(&self, ds: &Dataset, ctx: &EstimationContext) -> Result<f64>;
}

macro_rules! approach {
    ($ty:ident, $name:literal, $desc:literal, $formula:literal, $estimand:expr, |$ds:ident, $ctx:ident| $body:expr) => {
        pub struct $ty;

        impl Approach for $ty {
            fn name(&self) -> &'static str {
                $name
            }
            fn description(&self) -> &'static str {
                $desc
            }
            fn formula(&self) -> &'static str {
                $formula
            }
            fn estimand(&self) -> Estimand {
                $estimand
            }
            #[allow(unused_variables)]
            fn estimate(&self, $ds: &Dataset, $ctx: &EstimationContext) -> Result<f64> {
                $body
            }
        }
    };
}

approach!(
    ChangeScore,
    "approach1",
    "Analysis of the outcome change score by linear regression",
    "E[Y1 - Y0 | X] = a0 + a1 X",
    Estimand::Obscure,
    |ds, ctx| approach1_change_score(ds)
);
approach!(
    Ancova,
    "approach2",
    "Analysis of the follow-up outcome adjusted for the baseline outcome by linear regression",
    "E[Y1 | X, Y0 = y0] = b0 + b1 X + b2 Y0",
    Estimand::ControlledDirect,
    |ds, ctx| Ok(approach2_ancova(ds, false)?.coef(cols::X))
);
approach!(
    GcompCde,
    "gcomp_cde",
    "Joint effects of exposure and baseline outcome by g-computation, accounting for the mediator-outcome confounder",
    "E[Y1(X=1, Y0=y0)] - E[Y1(X=0, Y0=y0)]",
    Estimand::ControlledDirect,
    |ds, ctx| gcomp_cde(ds, ctx.y0_fixed_kg)
);
approach!(
    ChangeAdjusted,
    "approach4",
    "Analysis of the outcome change score adjusted for the baseline outcome by linear regression",
    "E[Y1 - Y0 | X, Y0 = y0] = g0 + g1 X + g2 Y0",
    Estimand::ControlledDirect,
    |ds, ctx| Ok(approach4_change_adjusted(ds)?.coef(cols::X))
);
approach!(
    FollowUp,
    "approach5",
    "Analysis of the follow-up outcome by linear regression",
    "E[Y1 | X] = d0 + d1 X",
    Estimand::Total,
    |ds, ctx| approach5_follow_up(ds)
);
approach!(
    GcompTce,
    "gcomp_tce",
    "Total effect of the exposure by g-computation, accounting for the mediator-outcome confounder",
    "E[Y1(X=1)] - E[Y1(X=0)]",
    Estimand::Total,
    |ds, ctx| gcomp_tce(ds)
);
approach!(
    DidMeans,
    "did_means",
    "Simple difference-in-difference of group means",
    "(mean Y1 - mean Y0 | boys) - (mean Y1 - mean Y0 | girls)",
    Estimand::Obscure,
    |ds, ctx| did_means(ds)
);

/// Approaches keyed by name, iterated in registration order.
pub struct ApproachRegistry {
    entries: IndexMap<&'static str, Box<dyn Approach>>,
}

impl ApproachRegistry {
    pub fn empty() -> Self {
        ApproachRegistry {
            entries: IndexMap::new(),
        }
    }

    /// The six table approaches in table order.
    pub fn table1() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(ChangeScore));
        r.register(Box::new(Ancova));
        r.register(Box::new(GcompCde));
        r.register(Box::new(ChangeAdjusted));
        r.register(Box::new(FollowUp));
        r.register(Box::new(GcompTce));
        r
    }

    /// Table approaches plus the summary-level difference-in-difference.
    pub fn with_extras() -> Self {
        let mut r = Self::table1();
        r.register(Box::new(DidMeans));
        r
    }

    /// Adds or replaces an approach under its own name.
    pub fn register(&mut self, approach: Box<dyn Approach>) {
        self.entries.insert(approach.name(), approach);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Approach> {
        self.entries
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| LabError::UnknownApproach(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Approach> {
        self.entries.values().map(|b| b.as_ref())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Runs the named approaches (all of them for an empty selection).
    pub fn run(
        &self,
        selection: &[&str],
        ds: &Dataset,
        ctx: &EstimationContext,
    ) -> Result<IndexMap<&'static str, f64>> {
        let chosen: Vec<&dyn Approach> = if selection.is_empty() {
            self.iter().collect()
        } else {
            selection.iter().map(|s| self.get(s)).collect::<Result<_>>()?
        };
        chosen
            .into_iter()
            .map(|a| Ok((a.name(), a.estimate(ds, ctx)?)))
            .collect()
    }
}
