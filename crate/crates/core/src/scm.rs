//! Linear-Gaussian structural causal models.
//!
//! An [`ScmSpec`] is the serializable description (nodes, parents, path
//! coefficients, noise scales, natural-unit rescaling). [`Scm`] is the
//! validated form: nodes in topological order with parent indices resolved.
//! Sampling is column-wise in topological order; every node draws from its
//! own ChaCha stream keyed by (seed, node index), so forcing one node never
//! perturbs the random draws of any other.

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    /// Parentless, -1 or +1 with probability one half each.
    SymmetricBinary,
    /// Weighted sum of parents plus Gaussian noise.
    LinearGaussian,
    /// Exact copy of its single parent.
    CopyOfParent,
    /// First parent minus second parent.
    Difference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub name: String,
    pub kind: NodeKind,
    #[serde(default)]
    pub parents: Vec<String>,
    #[serde(default)]
    pub coefficients: Vec<f64>,
    #[serde(default)]
    pub noise_sd: f64,
}

impl NodeSpec {
    pub fn symmetric_binary(name: &str) -> Self {
        NodeSpec {
            name: name.to_string(),
            kind: NodeKind::SymmetricBinary,
            parents: vec![],
            coefficients: vec![],
            noise_sd: 0.0,
        }
    }

    pub fn linear_gaussian(name: &str, terms: &[(&str, f64)], noise_sd: f64) -> Self {
        NodeSpec {
            name: name.to_string(),
            kind: NodeKind::LinearGaussian,
            parents: terms.iter().map(|(p, _)| p.to_string()).collect(),
            coefficients: terms.iter().map(|(_, c)| *c).collect(),
            noise_sd,
        }
    }

    pub fn copy_of(name: &str, parent: &str) -> Self {
        NodeSpec {
            name: name.to_string(),
            kind: NodeKind::CopyOfParent,
            parents: vec![parent.to_string()],
            coefficients: vec![1.0],
            noise_sd: 0.0,
        }
    }

    pub fn difference(name: &str, minuend: &str, subtrahend: &str) -> Self {
        NodeSpec {
            name: name.to_string(),
            kind: NodeKind::Difference,
            parents: vec![minuend.to_string(), subtrahend.to_string()],
            coefficients: vec![1.0, -1.0],
            noise_sd: 0.0,
        }
    }

    fn check_kind(&self) -> Result<()> {
        let fail = |reason: &str| {
            Err(LabError::KindMismatch {
                node: self.name.clone(),
                reason: reason.to_string(),
            })
        };
        if self.coefficients.len() != self.parents.len() {
            return fail("coefficients and parents differ in length");
        }
        if self.coefficients.iter().any(|c| !c.is_finite()) {
            return fail("non-finite coefficient");
        }
        if !self.noise_sd.is_finite() || self.noise_sd < 0.0 {
            return fail("noise_sd must be finite and non-negative");
        }
        match self.kind {
            NodeKind::SymmetricBinary if !self.parents.is_empty() => {
                fail("symmetric_binary takes no parents")
            }
            NodeKind::CopyOfParent
                if self.parents.len() != 1
                    || self.coefficients[0] != 1.0
                    || self.noise_sd != 0.0 =>
            {
                fail("copy_of_parent needs one parent, coefficient 1 and noise_sd 0")
            }
            NodeKind::Difference
                if self.parents.len() != 2
                    || self.coefficients != [1.0, -1.0]
                    || self.noise_sd != 0.0 =>
            {
                fail("difference needs two parents with coefficients (1, -1) and noise_sd 0")
            }
            _ => Ok(()),
        }
    }
}

/// Serializable structural model. Rescale targets are `(mean, sd)` pairs in
/// natural units applied by [`to_natural_units`].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScmSpec {
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub rescale: IndexMap<String, (f64, f64)>,
}

impl ScmSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn node(&self, name: &str) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.name == name)
    }
}

/// A validated model with nodes in topological order.
#[derive(Debug, Clone, PartialEq)]
pub struct Scm {
    spec: ScmSpec,
    parent_index: Vec<Vec<usize>>,
}

/// Validates `spec` and returns it with nodes in topological order.
///
/// Among nodes that are ready at the same time the original listing order
/// wins, so an already-ordered spec comes back unchanged.
pub fn validate_scm(spec: ScmSpec) -> Result<Scm> {
    let mut position = HashMap::with_capacity(spec.nodes.len());
    for (i, node) in spec.nodes.iter().enumerate() {
        if position.insert(node.name.as_str(), i).is_some() {
            return Err(LabError::DuplicateNode(node.name.clone()));
        }
    }
    for node in &spec.nodes {
        node.check_kind()?;
        for p in &node.parents {
            if !position.contains_key(p.as_str()) {
                return Err(LabError::UnknownParent {
                    node: node.name.clone(),
                    parent: p.clone(),
                });
            }
        }
    }
    for key in spec.rescale.keys() {
        if !position.contains_key(key.as_str()) {
            return Err(LabError::UnknownRescale(key.clone()));
        }
    }

    // Kahn's algorithm, lowest original position first.
    let count = spec.nodes.len();
    let mut indegree = vec![0usize; count];
    let mut children = vec![Vec::new(); count];
    for (i, node) in spec.nodes.iter().enumerate() {
        for p in &node.parents {
            let pi = position[p.as_str()];
            indegree[i] += 1;
            children[pi].push(i);
        }
    }
    let mut ready: BTreeSet<usize> = (0..count).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(count);
    while let Some(i) = ready.pop_first() {
        order.push(i);
        for &c in &children[i] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.insert(c);
            }
        }
    }
    if order.len() != count {
        let stuck = (0..count)
            .filter(|&i| indegree[i] > 0)
            .map(|i| spec.nodes[i].name.clone())
            .collect();
        return Err(LabError::Cycle(stuck));
    }

    let ScmSpec { nodes, rescale } = spec;
    let mut slots: Vec<Option<NodeSpec>> = nodes.into_iter().map(Some).collect();
    let nodes: Vec<NodeSpec> = order.iter().map(|&i| slots[i].take().unwrap()).collect();
    let new_pos: HashMap<&str, usize> = nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.name.as_str(), i))
        .collect();
    let parent_index = nodes
        .iter()
        .map(|n| n.parents.iter().map(|p| new_pos[p.as_str()]).collect())
        .collect();
    Ok(Scm {
        spec: ScmSpec { nodes, rescale },
        parent_index,
    })
}

impl Scm {
    pub fn spec(&self) -> &ScmSpec {
        &self.spec
    }

    pub fn into_spec(self) -> ScmSpec {
        self.spec
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.spec.nodes
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.spec.nodes.iter().map(|n| n.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.spec.nodes.iter().position(|n| n.name == name)
    }

    pub fn parents_of(&self, index: usize) -> &[usize] {
        &self.parent_index[index]
    }

    /// Indices of `root` and every node reachable from it.
    pub fn descendants(&self, root: usize) -> Vec<bool> {
        let mut reached = vec![false; self.spec.nodes.len()];
        reached[root] = true;
        // Topological order: one forward sweep suffices.
        for i in root + 1..reached.len() {
            if self.parent_index[i].iter().any(|&p| reached[p]) {
                reached[i] = true;
            }
        }
        reached
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    Standardized,
    Natural,
}

/// Rectangular table of `n` observations over named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    columns: IndexMap<String, Vec<f64>>,
    units: Units,
}

impl Dataset {
    pub fn new(columns: IndexMap<String, Vec<f64>>, units: Units) -> Result<Self> {
        let n = columns.values().next().map_or(0, Vec::len);
        if n == 0 {
            return Err(LabError::EmptyDataset);
        }
        for (name, col) in &columns {
            if col.len() != n {
                return Err(LabError::RaggedColumn {
                    name: name.clone(),
                    got: col.len(),
                    expected: n,
                });
            }
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(LabError::NonFinite {
                    name: name.clone(),
                    row,
                });
            }
        }
        Ok(Dataset { n, columns, units })
    }

    pub fn from_columns<'a>(
        columns: impl IntoIterator<Item = (&'a str, Vec<f64>)>,
        units: Units,
    ) -> Result<Self> {
        Self::new(
            columns
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            units,
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn units(&self) -> Units {
        self.units
    }

    pub fn columns(&self) -> &IndexMap<String, Vec<f64>> {
        &self.columns
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.columns
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| LabError::MissingColumn(name.to_string()))
    }

    /// Replaces (or appends) one column, keeping the other invariants.
    pub fn with_column(mut self, name: &str, values: Vec<f64>) -> Result<Self> {
        self.columns.insert(name.to_string(), values);
        Self::new(self.columns, self.units)
    }

    /// Writes a CSV with a header row. `order` picks and orders the columns;
    /// `None` writes all of them in storage order.
    pub fn write_csv<W: Write>(&self, writer: W, order: Option<&[&str]>) -> Result<()> {
        let names: Vec<&str> = match order {
            Some(o) => o.to_vec(),
            None => self.column_names().collect(),
        };
        let cols = names
            .iter()
            .map(|n| self.column(n))
            .collect::<Result<Vec<_>>>()?;
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&names)?;
        let mut row = Vec::with_capacity(cols.len());
        for i in 0..self.n {
            row.clear();
            row.extend(cols.iter().map(|c| format_sig(c[i], 6)));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, units: Units) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let mut cols = vec![Vec::new(); headers.len()];
        for record in r.records() {
            let record = record?;
            for (j, field) in record.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| {
                    LabError::Config(format!("column `{}`: cannot parse `{field}`", headers[j]))
                })?;
                cols[j].push(v);
            }
        }
        Self::new(headers.into_iter().zip(cols).collect(), units)
    }
}

/// Formats `v` with `digits` significant digits in the style of C's `%g`.
pub fn format_sig(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let digits = digits.max(1);
    let exp = v.abs().log10().floor() as i32;
    // Rounding can bump the exponent (9.999995 -> 10.0000).
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, e) = sci.split_once('e').unwrap();
    let exp_rounded: i32 = e.parse().unwrap_or(exp);
    if exp_rounded < -4 || exp_rounded >= digits as i32 {
        let m = trim_zeros(mantissa);
        return format!("{m}e{exp_rounded}");
    }
    let decimals = (digits as i32 - 1 - exp_rounded).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn node_rng(seed: u64, node: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(node as u64);
    rng
}

fn sample_node(
    scm: &Scm,
    index: usize,
    n: usize,
    seed: u64,
    done: &[Vec<f64>],
) -> Vec<f64> {
    let node = &scm.spec.nodes[index];
    let parents = &scm.parent_index[index];
    match node.kind {
        NodeKind::SymmetricBinary => {
            let mut rng = node_rng(seed, index);
            (0..n)
                .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                .collect()
        }
        NodeKind::CopyOfParent => done[parents[0]].clone(),
        NodeKind::Difference => done[parents[0]]
            .iter()
            .zip(&done[parents[1]])
            .map(|(a, b)| a - b)
            .collect(),
        NodeKind::LinearGaussian => {
            let mut values = vec![0.0; n];
            for (&p, &c) in parents.iter().zip(&node.coefficients) {
                for (v, x) in values.iter_mut().zip(&done[p]) {
                    *v += c * x;
                }
            }
            if node.noise_sd > 0.0 {
                let mut rng = node_rng(seed, index);
                for v in values.iter_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    *v += node.noise_sd * z;
                }
            }
            values
        }
    }
}

fn run(scm: &Scm, n: usize, seed: u64, forced: &[Option<f64>]) -> Result<Dataset> {
    if n == 0 {
        return Err(LabError::EmptyDataset);
    }
    let mut done: Vec<Vec<f64>> = Vec::with_capacity(scm.spec.nodes.len());
    for (i, f) in forced.iter().enumerate() {
        let col = match *f {
            Some(v) => vec![v; n],
            None => sample_node(scm, i, n, seed, &done),
        };
        done.push(col);
    }
    let columns = scm
        .spec
        .nodes
        .iter()
        .map(|n| n.name.clone())
        .zip(done)
        .collect();
    Dataset::new(columns, Units::Standardized)
}

/// Draws `n` observational rows on the standardized scale.
pub fn simulate(scm: &Scm, n: usize, seed: u64) -> Result<Dataset> {
    run(scm, n, seed, &vec![None; scm.spec.nodes.len()])
}

/// Draws `n` rows with the `forced` nodes held at fixed standardized values.
///
/// Descendants of forced nodes respond; everything else is bit-identical to
/// [`simulate`] with the same seed.
pub fn simulate_intervention(
    scm: &Scm,
    n: usize,
    seed: u64,
    forced: &IndexMap<String, f64>,
) -> Result<Dataset> {
    let mut slots = vec![None; scm.spec.nodes.len()];
    for (name, &value) in forced {
        let i = scm
            .index_of(name)
            .ok_or_else(|| LabError::UnknownNode(name.clone()))?;
        if !value.is_finite() {
            return Err(LabError::Config(format!("forced value for `{name}` is not finite")));
        }
        slots[i] = Some(value);
    }
    run(scm, n, seed, &slots)
}

/// Applies the model's affine rescaling, then recomputes deterministic
/// (copy/difference) columns that are not themselves rescaled so they stay
/// consistent with their rescaled parents.
pub fn to_natural_units(ds: &Dataset, scm: &Scm) -> Result<Dataset> {
    if ds.units == Units::Natural {
        return Err(LabError::AlreadyNatural);
    }
    let mut columns = ds.columns.clone();
    for (name, &(mean, sd)) in &scm.spec.rescale {
        let col = columns
            .get_mut(name)
            .ok_or_else(|| LabError::MissingColumn(name.clone()))?;
        for v in col.iter_mut() {
            *v = mean + sd * *v;
        }
    }
    for node in &scm.spec.nodes {
        if scm.spec.rescale.contains_key(&node.name) || !columns.contains_key(&node.name) {
            continue;
        }
        let recomputed = match node.kind {
            NodeKind::CopyOfParent => columns.get(&node.parents[0]).cloned(),
            NodeKind::Difference => match (
                columns.get(&node.parents[0]),
                columns.get(&node.parents[1]),
            ) {
                (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(a, b)| a - b).collect()),
                _ => None,
            },
            _ => None,
        };
        if let Some(col) = recomputed {
            columns.insert(node.name.clone(), col);
        }
    }
    Dataset::new(columns, Units::Natural)
}
