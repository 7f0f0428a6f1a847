//! Exact finite-distribution data model shared by every other module.
//!
//! Probabilities are `f64`. Validation accepts inputs whose total mass is
//! within a tolerance of 1 and rescales the residual, so textual inputs
//! like `0.1` six times do not trip spurious errors. Label order is
//! authoritative for matrix indexing and is preserved by all operations
//! and file I/O.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{MASS_TOL, SUPPORT_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("negative probability {value} at entry {index}")]
    NegativeProbability { index: usize, value: f64 },
    #[error("total mass {mass} differs from 1 by more than the tolerance")]
    NotNormalized { mass: f64 },
    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),
    #[error("alphabet is empty")]
    EmptyAlphabet,
    #[error("label sets are incompatible: {0}")]
    LabelMismatch(String),
    #[error("all probability mass is below the support cutoff")]
    AllMassOutOfSupport,
    #[error("requested product needs {needed} cells, cap is {cap}")]
    SizeCapExceeded { needed: u128, cap: u128 },
    #[error("matrix row {row} has {got} entries, expected {expected}")]
    RaggedMatrix { row: usize, got: usize, expected: usize },
}

/// A probability mass function over an ordered, labeled finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pmf {
    labels: Vec<String>,
    probs: Vec<f64>,
}

fn check_labels(labels: &[String]) -> Result<(), DistError> {
    if labels.is_empty() {
        return Err(DistError::EmptyAlphabet);
    }
    let mut seen = std::collections::HashSet::with_capacity(labels.len());
    for l in labels {
        if l.is_empty() {
            return Err(DistError::DuplicateLabel(String::new()));
        }
        if !seen.insert(l.as_str()) {
            return Err(DistError::DuplicateLabel(l.clone()));
        }
    }
    Ok(())
}

fn validate_mass(probs: &[f64], tol: f64) -> Result<f64, DistError> {
    for (i, &p) in probs.iter().enumerate() {
        if p < 0.0 || !p.is_finite() {
            return Err(DistError::NegativeProbability { index: i, value: p });
        }
    }
    let mass: f64 = probs.iter().sum();
    if (mass - 1.0).abs() > tol {
        return Err(DistError::NotNormalized { mass });
    }
    Ok(mass)
}

impl Pmf {
    /// Validates and normalizes a labeled probability vector.
    ///
    /// Accepts the input when its total mass is within `tol` of 1 and
    /// rescales by the residual; label order is preserved.
    pub fn validate(items: Vec<(String, f64)>, tol: f64) -> Result<Self, DistError> {
        let (labels, mut probs): (Vec<_>, Vec<_>) = items.into_iter().unzip();
        check_labels(&labels)?;
        let mass = validate_mass(&probs, tol)?;
        for p in &mut probs {
            *p /= mass;
        }
        Ok(Pmf { labels, probs })
    }

    /// `validate` with the default mass tolerance.
    pub fn new(items: Vec<(String, f64)>) -> Result<Self, DistError> {
        Self::validate(items, MASS_TOL)
    }

    /// Pmf from parallel label/probability slices.
    pub fn from_parts(labels: Vec<String>, probs: Vec<f64>) -> Result<Self, DistError> {
        if labels.len() != probs.len() {
            return Err(DistError::LabelMismatch(format!(
                "{} labels vs {} probabilities",
                labels.len(),
                probs.len()
            )));
        }
        Self::new(labels.into_iter().zip(probs).collect())
    }

    /// Uniform distribution over the given labels.
    pub fn uniform(labels: Vec<String>) -> Result<Self, DistError> {
        check_labels(&labels)?;
        let n = labels.len();
        Ok(Pmf { probs: vec![1.0 / n as f64; n], labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.probs[i]
    }

    /// Support mask with cutoff `tol`; probabilities below it count as zero.
    pub fn support(&self, tol: f64) -> SupportMask {
        SupportMask { mask: self.probs.iter().map(|&p| p >= tol).collect() }
    }

    /// Support mask with the default cutoff.
    pub fn support_default(&self) -> SupportMask {
        self.support(SUPPORT_TOL)
    }

    pub fn entropy(&self) -> f64 {
        entropy(self)
    }
}

/// Boolean per-symbol support indicator for an X alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportMask {
    mask: Vec<bool>,
}

impl SupportMask {
    pub fn full(n: usize) -> Self {
        SupportMask { mask: vec![true; n] }
    }

    pub fn new(mask: Vec<bool>) -> Result<Self, DistError> {
        if !mask.iter().any(|&b| b) {
            return Err(DistError::AllMassOutOfSupport);
        }
        Ok(SupportMask { mask })
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.mask[i]
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }
}

/// A joint distribution over two labeled finite alphabets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointPmf {
    x_labels: Vec<String>,
    y_labels: Vec<String>,
    p: Vec<Vec<f64>>,
}

fn check_matrix(p: &[Vec<f64>], rows: usize, cols: usize) -> Result<(), DistError> {
    if p.len() != rows {
        return Err(DistError::RaggedMatrix { row: 0, got: p.len(), expected: rows });
    }
    for (i, row) in p.iter().enumerate() {
        if row.len() != cols {
            return Err(DistError::RaggedMatrix { row: i, got: row.len(), expected: cols });
        }
    }
    Ok(())
}

impl JointPmf {
    /// Validates a joint matrix: nonnegative entries, total mass within
    /// `tol` of 1 (then rescaled).
    pub fn validate(
        x_labels: Vec<String>,
        y_labels: Vec<String>,
        mut p: Vec<Vec<f64>>,
        tol: f64,
    ) -> Result<Self, DistError> {
        check_labels(&x_labels)?;
        check_labels(&y_labels)?;
        check_matrix(&p, x_labels.len(), y_labels.len())?;
        let mut mass = 0.0;
        for (i, row) in p.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v < 0.0 || !v.is_finite() {
                    return Err(DistError::NegativeProbability {
                        index: i * y_labels.len() + j,
                        value: v,
                    });
                }
            }
            mass += row.iter().sum::<f64>();
        }
        if (mass - 1.0).abs() > tol {
            return Err(DistError::NotNormalized { mass });
        }
        for row in &mut p {
            for v in row {
                *v /= mass;
            }
        }
        Ok(JointPmf { x_labels, y_labels, p })
    }

    pub fn new(
        x_labels: Vec<String>,
        y_labels: Vec<String>,
        p: Vec<Vec<f64>>,
    ) -> Result<Self, DistError> {
        Self::validate(x_labels, y_labels, p, MASS_TOL)
    }

    pub fn x_len(&self) -> usize {
        self.x_labels.len()
    }

    pub fn y_len(&self) -> usize {
        self.y_labels.len()
    }

    pub fn x_labels(&self) -> &[String] {
        &self.x_labels
    }

    pub fn y_labels(&self) -> &[String] {
        &self.y_labels
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.p[x][y]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.p
    }

    /// Row and column sums as marginal distributions.
    pub fn marginals(&self) -> (Pmf, Pmf) {
        let px: Vec<f64> = self.p.iter().map(|row| row.iter().sum()).collect();
        let mut py = vec![0.0; self.y_len()];
        for row in &self.p {
            for (j, &v) in row.iter().enumerate() {
                py[j] += v;
            }
        }
        (
            Pmf { labels: self.x_labels.clone(), probs: px },
            Pmf { labels: self.y_labels.clone(), probs: py },
        )
    }

    pub fn marginal_x(&self) -> Pmf {
        self.marginals().0
    }

    pub fn marginal_y(&self) -> Pmf {
        self.marginals().1
    }

    /// Factors the joint into `(P_X, P_{Y|X}, supp(X))`.
    ///
    /// Out-of-support rows (P_X(x) < `tol`) are filled uniform and excluded
    /// from the mask. Recomposing the factors reproduces the joint on the
    /// support.
    pub fn factor(&self, tol: f64) -> Result<(Pmf, Channel, SupportMask), DistError> {
        let (px, _) = self.marginals();
        let mask = px.support(tol);
        if mask.count() == 0 {
            return Err(DistError::AllMassOutOfSupport);
        }
        let ny = self.y_len();
        let uniform_row = vec![1.0 / ny as f64; ny];
        let w: Vec<Vec<f64>> = self
            .p
            .iter()
            .enumerate()
            .map(|(i, row)| {
                if mask.contains(i) {
                    row.iter().map(|&v| v / px.prob(i)).collect()
                } else {
                    uniform_row.clone()
                }
            })
            .collect();
        let ch = Channel { x_labels: self.x_labels.clone(), y_labels: self.y_labels.clone(), w };
        Ok((px, ch, mask))
    }

    /// Joint of `n` independent copies, over n-tuple alphabets.
    pub fn product_iid(&self, n: u32, cell_cap: u128) -> Result<JointPmf, DistError> {
        assert!(n >= 1, "product_iid needs n >= 1");
        let needed = (self.x_len() as u128)
            .checked_pow(n)
            .and_then(|a| (self.y_len() as u128).checked_pow(n).map(|b| (a, b)))
            .and_then(|(a, b)| a.checked_mul(b))
            .ok_or(DistError::SizeCapExceeded { needed: u128::MAX, cap: cell_cap })?;
        if needed > cell_cap {
            return Err(DistError::SizeCapExceeded { needed, cap: cell_cap });
        }
        let mut out = self.clone();
        for _ in 1..n {
            out = out.tensor(self);
        }
        Ok(out)
    }

    /// Tensor product with another joint: alphabets become label pairs.
    pub fn tensor(&self, other: &JointPmf) -> JointPmf {
        let join = |a: &str, b: &str| format!("{a}.{b}");
        let x_labels: Vec<String> = self
            .x_labels
            .iter()
            .flat_map(|a| other.x_labels.iter().map(move |b| join(a, b)))
            .collect();
        let y_labels: Vec<String> = self
            .y_labels
            .iter()
            .flat_map(|a| other.y_labels.iter().map(move |b| join(a, b)))
            .collect();
        let mut p = vec![vec![0.0; y_labels.len()]; x_labels.len()];
        for (i1, r1) in self.p.iter().enumerate() {
            for (i2, r2) in other.p.iter().enumerate() {
                let row = &mut p[i1 * other.x_len() + i2];
                for (j1, &v1) in r1.iter().enumerate() {
                    for (j2, &v2) in r2.iter().enumerate() {
                        row[j1 * other.y_len() + j2] = v1 * v2;
                    }
                }
            }
        }
        JointPmf { x_labels, y_labels, p }
    }

    pub fn mutual_information(&self) -> f64 {
        mutual_information(self)
    }
}

/// A row-stochastic conditional distribution `P_{Y|X}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    x_labels: Vec<String>,
    y_labels: Vec<String>,
    w: Vec<Vec<f64>>,
}

impl Channel {
    /// Validates a channel matrix: every row a Pmf over the y alphabet.
    pub fn validate(
        x_labels: Vec<String>,
        y_labels: Vec<String>,
        mut w: Vec<Vec<f64>>,
        tol: f64,
    ) -> Result<Self, DistError> {
        check_labels(&x_labels)?;
        check_labels(&y_labels)?;
        check_matrix(&w, x_labels.len(), y_labels.len())?;
        for (i, row) in w.iter_mut().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v < 0.0 || !v.is_finite() {
                    return Err(DistError::NegativeProbability {
                        index: i * y_labels.len() + j,
                        value: v,
                    });
                }
            }
            let mass: f64 = row.iter().sum();
            if (mass - 1.0).abs() > tol {
                return Err(DistError::NotNormalized { mass });
            }
            for v in row.iter_mut() {
                *v /= mass;
            }
        }
        Ok(Channel { x_labels, y_labels, w })
    }

    pub fn new(
        x_labels: Vec<String>,
        y_labels: Vec<String>,
        w: Vec<Vec<f64>>,
    ) -> Result<Self, DistError> {
        Self::validate(x_labels, y_labels, w, MASS_TOL)
    }

    pub fn identity(labels: Vec<String>) -> Result<Self, DistError> {
        check_labels(&labels)?;
        let n = labels.len();
        let mut w = vec![vec![0.0; n]; n];
        for (i, row) in w.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Ok(Channel { x_labels: labels.clone(), y_labels: labels, w })
    }

    pub fn x_len(&self) -> usize {
        self.x_labels.len()
    }

    pub fn y_len(&self) -> usize {
        self.y_labels.len()
    }

    pub fn x_labels(&self) -> &[String] {
        &self.x_labels
    }

    pub fn y_labels(&self) -> &[String] {
        &self.y_labels
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.w[x][y]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.w
    }

    /// `p(x,y) = P_X(x) W(y|x)`.
    pub fn compose(&self, px: &Pmf) -> Result<JointPmf, DistError> {
        if px.labels() != self.x_labels.as_slice() {
            return Err(DistError::LabelMismatch(
                "input distribution labels differ from channel x labels".into(),
            ));
        }
        let p: Vec<Vec<f64>> = self
            .w
            .iter()
            .enumerate()
            .map(|(i, row)| row.iter().map(|&v| v * px.prob(i)).collect())
            .collect();
        Ok(JointPmf { x_labels: self.x_labels.clone(), y_labels: self.y_labels.clone(), p })
    }

    /// Cascade: `(self ; next)(z|x) = sum_y self(y|x) next(z|y)`.
    pub fn then(&self, next: &Channel) -> Result<Channel, DistError> {
        if self.y_labels != next.x_labels {
            return Err(DistError::LabelMismatch(
                "inner labels differ in channel cascade".into(),
            ));
        }
        let w: Vec<Vec<f64>> = self
            .w
            .iter()
            .map(|row| {
                let mut out = vec![0.0; next.y_len()];
                for (y, &v) in row.iter().enumerate() {
                    if v > 0.0 {
                        for (z, &u) in next.w[y].iter().enumerate() {
                            out[z] += v * u;
                        }
                    }
                }
                out
            })
            .collect();
        Ok(Channel { x_labels: self.x_labels.clone(), y_labels: next.y_labels.clone(), w })
    }
}

/// `p(x,y) = P_X(x) W(y|x)`; the free-function spelling of [`Channel::compose`].
pub fn compose(px: &Pmf, ch: &Channel) -> Result<JointPmf, DistError> {
    ch.compose(px)
}

/// A Z-indexed family of joints with weights: `P_Z` plus `P_{XY|Z=z}` per z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondJointPmf {
    weights: Pmf,
    joints: Vec<JointPmf>,
}

impl CondJointPmf {
    pub fn new(weights: Pmf, joints: Vec<JointPmf>) -> Result<Self, DistError> {
        if weights.len() != joints.len() {
            return Err(DistError::LabelMismatch(format!(
                "{} z weights vs {} conditional joints",
                weights.len(),
                joints.len()
            )));
        }
        let (x_labels, y_labels) = (joints[0].x_labels.clone(), joints[0].y_labels.clone());
        for j in &joints[1..] {
            if j.x_labels != x_labels || j.y_labels != y_labels {
                return Err(DistError::LabelMismatch(
                    "conditional joints must share x and y alphabets".into(),
                ));
            }
        }
        Ok(CondJointPmf { weights, joints })
    }

    pub fn z_labels(&self) -> &[String] {
        self.weights.labels()
    }

    pub fn weights(&self) -> &Pmf {
        &self.weights
    }

    pub fn joint(&self, z: usize) -> &JointPmf {
        &self.joints[z]
    }

    pub fn z_len(&self) -> usize {
        self.joints.len()
    }

    /// Indices of z with positive weight.
    pub fn z_support(&self, tol: f64) -> impl Iterator<Item = usize> + '_ {
        self.weights
            .probs()
            .iter()
            .enumerate()
            .filter(move |(_, &w)| w >= tol)
            .map(|(i, _)| i)
    }

    /// Flattens to the joint over X and (Y,Z) pairs; used by the chain-rule
    /// and composition properties.
    pub fn flatten_yz(&self) -> JointPmf {
        let x_labels = self.joints[0].x_labels.clone();
        let y_labels: Vec<String> = self
            .z_labels()
            .iter()
            .flat_map(|z| self.joints[0].y_labels.iter().map(move |y| format!("{y}.{z}")))
            .collect();
        let ny = self.joints[0].y_len();
        let mut p = vec![vec![0.0; y_labels.len()]; x_labels.len()];
        for (zi, joint) in self.joints.iter().enumerate() {
            let wz = self.weights.prob(zi);
            for (x, row) in joint.p.iter().enumerate() {
                for (y, &v) in row.iter().enumerate() {
                    p[x][zi * ny + y] = wz * v;
                }
            }
        }
        JointPmf { x_labels, y_labels, p }
    }
}

fn xlnx(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

/// Shannon entropy in nats, with `0 ln 0 = 0`.
pub fn entropy(p: &Pmf) -> f64 {
    -p.probs().iter().map(|&v| xlnx(v)).sum::<f64>()
}

/// KL divergence `D(p||q)` in nats; `+inf` when `supp(p)` is not inside `supp(q)`.
pub fn kl_divergence(p: &Pmf, q: &Pmf) -> Result<f64, DistError> {
    if p.labels() != q.labels() {
        return Err(DistError::LabelMismatch("kl_divergence needs matching alphabets".into()));
    }
    let mut acc = 0.0;
    for (&a, &b) in p.probs().iter().zip(q.probs()) {
        if a > 0.0 {
            if b <= 0.0 {
                return Ok(f64::INFINITY);
            }
            acc += a * (a / b).ln();
        }
    }
    Ok(acc.max(0.0))
}

/// Mutual information `I(X;Y)` in nats.
pub fn mutual_information(j: &JointPmf) -> f64 {
    let (px, py) = j.marginals();
    let mut acc = 0.0;
    for (x, row) in j.p.iter().enumerate() {
        for (y, &v) in row.iter().enumerate() {
            if v > 0.0 {
                acc += v * (v / (px.prob(x) * py.prob(y))).ln();
            }
        }
    }
    acc.max(0.0)
}

/// Binary entropy of `p` in nats.
pub fn binary_entropy(p: f64) -> f64 {
    -xlnx(p) - xlnx(1.0 - p)
}
