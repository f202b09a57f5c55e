//! The sex / physical activity / weight data-generating process, its
//! standardizing noise scales, and path-traced ground-truth effects.
//!
//! Every variable is generated on a mean-0 / sd-1 scale. Sex is coded
//! girls = -1, boys = +1. Hall and Diet are exact copies of sex, so their
//! effects can never be separated from it; the "effect of sex" reported
//! everywhere is the joint sex + hall + diet contrast.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::scm::{validate_scm, NodeKind, NodeSpec, Scm, ScmSpec};

/// Column names used by the model and by every estimator.
pub mod cols {
    pub const X: &str = "X";
    pub const M0: &str = "M0";
    pub const Y0: &str = "Y0";
    pub const HALL: &str = "Hall";
    pub const DIET: &str = "Diet";
    pub const Y1: &str = "Y1";
    pub const DY: &str = "dY";

    /// Column order of exported datasets.
    pub const EXPORT_ORDER: [&str; 7] = [X, M0, Y0, Y1, HALL, DIET, DY];
}

/// Standardized path coefficients of the generating model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaperCoefficients {
    pub x_to_m0: f64,
    pub x_to_y0: f64,
    pub m0_to_y0: f64,
    pub x_to_y1: f64,
    pub m0_to_y1: f64,
    pub y0_to_y1: f64,
    pub diet_to_y1: f64,
}

impl PaperCoefficients {
    pub const PAPER: PaperCoefficients = PaperCoefficients {
        x_to_m0: 0.5,
        x_to_y0: 0.7,
        m0_to_y0: -0.4,
        x_to_y1: 0.2,
        m0_to_y1: -0.2,
        y0_to_y1: 0.5,
        diet_to_y1: 0.15,
    };

    pub fn zero() -> Self {
        PaperCoefficients {
            x_to_m0: 0.0,
            x_to_y0: 0.0,
            m0_to_y0: 0.0,
            x_to_y1: 0.0,
            m0_to_y1: 0.0,
            y0_to_y1: 0.0,
            diet_to_y1: 0.0,
        }
    }
}

impl Default for PaperCoefficients {
    fn default() -> Self {
        Self::PAPER
    }
}

/// Natural-unit (mean, sd) targets.
pub const Y_MEAN_SD: (f64, f64) = (80.0, 10.0);
pub const M0_MEAN_SD: (f64, f64) = (30.0, 10.0);

/// Boy-vs-girl contrasts implied by the structural equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Contrast in Y1 under do(X=+1) vs do(X=-1).
    pub tce_kg: f64,
    /// Same contrast with Y0 held fixed.
    pub cde_kg: f64,
    /// Contrast in Y0.
    pub y0_contrast_kg: f64,
}

impl GroundTruth {
    /// Part of the total effect that travels through Y0.
    pub fn y0_mediated_kg(&self) -> f64 {
        self.tce_kg - self.cde_kg
    }
}

/// Population covariance matrix implied by a validated linear model,
/// indexed in the model's topological order.
#[allow(clippy::needless_range_loop)]
pub fn implied_covariance(scm: &Scm) -> Vec<Vec<f64>> {
    let count = scm.nodes().len();
    let mut cov = vec![vec![0.0; count]; count];
    for j in 0..count {
        let node = &scm.nodes()[j];
        let parents = scm.parents_of(j);
        for k in 0..j {
            let c: f64 = parents
                .iter()
                .zip(&node.coefficients)
                .map(|(&p, &a)| a * cov[p][k])
                .sum();
            cov[j][k] = c;
            cov[k][j] = c;
        }
        cov[j][j] = signal_variance(&cov, parents, &node.coefficients) + own_variance(node);
    }
    cov
}

fn own_variance(node: &NodeSpec) -> f64 {
    match node.kind {
        NodeKind::SymmetricBinary => 1.0,
        NodeKind::LinearGaussian => node.noise_sd * node.noise_sd,
        NodeKind::CopyOfParent | NodeKind::Difference => 0.0,
    }
}

fn signal_variance(cov: &[Vec<f64>], parents: &[usize], coefs: &[f64]) -> f64 {
    let mut v = 0.0;
    for (&p, &a) in parents.iter().zip(coefs) {
        for (&q, &b) in parents.iter().zip(coefs) {
            v += a * b * cov[p][q];
        }
    }
    v
}

/// Sets the noise sd of every linear-Gaussian node so that its population
/// variance is exactly one, sweeping in topological order.
#[allow(clippy::needless_range_loop)]
pub fn standardize_noise(spec: ScmSpec) -> Result<ScmSpec> {
    let scm = validate_scm(spec)?;
    let mut spec = scm.spec().clone();
    let count = spec.nodes.len();
    let mut cov = vec![vec![0.0; count]; count];
    for j in 0..count {
        let parents = scm.parents_of(j).to_vec();
        let node = &mut spec.nodes[j];
        for k in 0..j {
            let c: f64 = parents
                .iter()
                .zip(&node.coefficients)
                .map(|(&p, &a)| a * cov[p][k])
                .sum();
            cov[j][k] = c;
            cov[k][j] = c;
        }
        let signal = signal_variance(&cov, &parents, &node.coefficients);
        if node.kind == NodeKind::LinearGaussian {
            let noise_var = 1.0 - signal;
            if noise_var < 0.0 {
                return Err(LabError::InfeasibleStandardization {
                    node: node.name.clone(),
                    variance: noise_var,
                });
            }
            node.noise_sd = noise_var.sqrt();
        }
        cov[j][j] = signal + own_variance(node);
    }
    Ok(spec)
}

fn structural_nodes(c: &PaperCoefficients) -> Vec<NodeSpec> {
    fn terms<'a>(raw: &[(&'a str, f64)]) -> Vec<(&'a str, f64)> {
        raw.iter().copied().filter(|&(_, a)| a != 0.0).collect()
    }
    vec![
        NodeSpec::symmetric_binary(cols::X),
        NodeSpec::linear_gaussian(cols::M0, &terms(&[(cols::X, c.x_to_m0)]), 0.0),
        NodeSpec::linear_gaussian(
            cols::Y0,
            &terms(&[(cols::X, c.x_to_y0), (cols::M0, c.m0_to_y0)]),
            0.0,
        ),
        NodeSpec::copy_of(cols::HALL, cols::X),
        NodeSpec::copy_of(cols::DIET, cols::X),
        NodeSpec::linear_gaussian(
            cols::Y1,
            &terms(&[
                (cols::X, c.x_to_y1),
                (cols::M0, c.m0_to_y1),
                (cols::Y0, c.y0_to_y1),
                (cols::DIET, c.diet_to_y1),
            ]),
            0.0,
        ),
        NodeSpec::difference(cols::DY, cols::Y1, cols::Y0),
    ]
}

/// Noise sds that give M0, Y0 and Y1 unit population variance.
pub fn derive_noise_sds(coeffs: &PaperCoefficients) -> Result<IndexMap<String, f64>> {
    let spec = standardize_noise(ScmSpec {
        nodes: structural_nodes(coeffs),
        rescale: IndexMap::new(),
    })?;
    Ok(spec
        .nodes
        .into_iter()
        .filter(|n| n.kind == NodeKind::LinearGaussian)
        .map(|n| (n.name, n.noise_sd))
        .collect())
}

/// Builds the full model for arbitrary coefficients. Zero coefficients drop
/// their edge.
pub fn build_scm(coeffs: &PaperCoefficients) -> Result<ScmSpec> {
    let mut rescale = IndexMap::new();
    rescale.insert(cols::Y0.to_string(), Y_MEAN_SD);
    rescale.insert(cols::Y1.to_string(), Y_MEAN_SD);
    rescale.insert(cols::M0.to_string(), M0_MEAN_SD);
    standardize_noise(ScmSpec {
        nodes: structural_nodes(coeffs),
        rescale,
    })
}

pub fn build_paper_scm() -> ScmSpec {
    build_scm(&PaperCoefficients::PAPER).expect("built-in coefficients are feasible")
}

/// Variant with sex assigned independently of everything before baseline:
/// the X->M0 and X->Y0 edges are removed while every path into Y1 stays.
pub fn build_randomized_scm() -> ScmSpec {
    build_scm(&randomized_coefficients()).expect("randomized coefficients are feasible")
}

pub fn randomized_coefficients() -> PaperCoefficients {
    PaperCoefficients {
        x_to_m0: 0.0,
        x_to_y0: 0.0,
        ..PaperCoefficients::PAPER
    }
}

/// Per-unit-X path-traced effect on every node, with `held` nodes fixed.
fn traced_effects(scm: &Scm, exposure: usize, held: &[usize]) -> Vec<f64> {
    let mut effect = vec![0.0; scm.nodes().len()];
    effect[exposure] = 1.0;
    for j in exposure + 1..effect.len() {
        if held.contains(&j) {
            continue;
        }
        effect[j] = scm
            .parents_of(j)
            .iter()
            .zip(&scm.nodes()[j].coefficients)
            .map(|(&p, &a)| a * effect[p])
            .sum();
    }
    effect
}

/// Ground-truth boy-vs-girl effects obtained by summing coefficient
/// products over directed paths; no data involved.
pub fn ground_truth(spec: &ScmSpec) -> Result<GroundTruth> {
    let scm = validate_scm(spec.clone())?;
    let find = |name: &str| {
        scm.index_of(name)
            .ok_or_else(|| LabError::GroundTruth(format!("a `{name}` node")))
    };
    let (x, y0, y1) = (find(cols::X)?, find(cols::Y0)?, find(cols::Y1)?);
    if scm.nodes()[x].kind != NodeKind::SymmetricBinary {
        return Err(LabError::GroundTruth(
            "a symmetric_binary exposure (the +1 vs -1 contrast)".into(),
        ));
    }
    let sd = |name: &str| spec.rescale.get(name).map_or(1.0, |&(_, s)| s);
    // +1 vs -1 contrast: factor 2.
    let total = traced_effects(&scm, x, &[]);
    let direct = traced_effects(&scm, x, &[y0]);
    Ok(GroundTruth {
        tce_kg: 2.0 * total[y1] * sd(cols::Y1),
        cde_kg: 2.0 * direct[y1] * sd(cols::Y1),
        y0_contrast_kg: 2.0 * total[y0] * sd(cols::Y0),
    })
}
