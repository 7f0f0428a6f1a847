//! Closed-form evaluation of the leakage metrics on finite distributions.
//!
//! Everything is computed in nats; [`LeakageValue`] carries the unit and
//! converts only at presentation. `+inf` is a legal value (deterministic
//! channels under cost leakage, erasure channels under local DP); no
//! operation returns NaN. Argmax ties break at the lowest index so
//! witnesses are deterministic.

use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;
use thiserror::Error;

use crate::dist::{mutual_information, Channel, CondJointPmf, JointPmf, Pmf, SupportMask};
use crate::solvers;
use crate::SUPPORT_TOL;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("iteration limit hit; best value {best} with bracket width {gap}")]
    MaxIterExceeded { best: f64, gap: f64 },
    #[error("column minima sum to zero; cost leakage is infinite and has no witness")]
    DegenerateMinSum,
}

/// Unit for reporting leakage quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    #[default]
    Nats,
    Bits,
}

/// A nonnegative extended-real leakage quantity with an explicit unit.
///
/// Stored in the unit it was constructed with; conversion is exact up to
/// one multiplication by `ln 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakageValue {
    pub value: f64,
    pub unit: Unit,
}

impl LeakageValue {
    pub fn from_nats(value: f64) -> Self {
        debug_assert!(!value.is_nan());
        LeakageValue { value: value.max(0.0), unit: Unit::Nats }
    }

    pub fn from_bits(value: f64) -> Self {
        debug_assert!(!value.is_nan());
        LeakageValue { value: value.max(0.0), unit: Unit::Bits }
    }

    pub fn infinite() -> Self {
        LeakageValue { value: f64::INFINITY, unit: Unit::Nats }
    }

    pub fn nats(&self) -> f64 {
        match self.unit {
            Unit::Nats => self.value,
            Unit::Bits => self.value * LN_2,
        }
    }

    pub fn bits(&self) -> f64 {
        match self.unit {
            Unit::Nats => self.value / LN_2,
            Unit::Bits => self.value,
        }
    }

    pub fn in_unit(&self, unit: Unit) -> f64 {
        match unit {
            Unit::Nats => self.nats(),
            Unit::Bits => self.bits(),
        }
    }

    pub fn to_unit(self, unit: Unit) -> Self {
        LeakageValue { value: self.in_unit(unit), unit }
    }

    pub fn is_infinite(&self) -> bool {
        self.value.is_infinite()
    }
}

fn ln_clamped(total: f64) -> f64 {
    // The sums fed here are >= 1 mathematically; guard the rounding fuzz.
    total.ln().max(0.0)
}

/// Maximal leakage `L(X -> Y)` of a joint distribution, in nats.
///
/// `log sum_y max_{x in supp(X)} P_{Y|X}(y|x)`, evaluated directly on the
/// joint without materializing the conditional.
pub fn maximal_leakage(j: &JointPmf) -> LeakageValue {
    let (px, _) = j.marginals();
    let mut col_max = vec![0.0f64; j.y_len()];
    for (x, row) in j.rows().iter().enumerate() {
        let mass = px.prob(x);
        if mass < SUPPORT_TOL {
            continue;
        }
        for (y, &v) in row.iter().enumerate() {
            let w = v / mass;
            if w > col_max[y] {
                col_max[y] = w;
            }
        }
    }
    LeakageValue::from_nats(ln_clamped(col_max.iter().sum()))
}

/// Maximal leakage of a channel given an input-support mask.
pub fn maximal_leakage_channel(ch: &Channel, mask: &SupportMask) -> LeakageValue {
    let total: f64 = (0..ch.y_len())
        .map(|y| {
            mask.indices()
                .map(|x| ch.prob(x, y))
                .fold(0.0f64, f64::max)
        })
        .sum();
    LeakageValue::from_nats(ln_clamped(total))
}

/// The output distribution achieving the order-infinity Sibson infimum:
/// `Q*(y) = max_x W(y|x) / sum_y' max_x W(y'|x)` over the support.
pub fn sibson_witness(ch: &Channel, mask: &SupportMask) -> Pmf {
    let maxima: Vec<f64> = (0..ch.y_len())
        .map(|y| mask.indices().map(|x| ch.prob(x, y)).fold(0.0f64, f64::max))
        .collect();
    let total: f64 = maxima.iter().sum();
    Pmf::from_parts(ch.y_labels().to_vec(), maxima.iter().map(|&m| m / total).collect())
        .expect("column maxima of a masked channel normalize to a valid pmf")
}

/// `D_inf(P_XY || P_X x Q_Y)` in nats.
pub fn renyi_inf_joint_vs_product(j: &JointPmf, q: &Pmf) -> f64 {
    let (px, _) = j.marginals();
    let mut best = 0.0f64;
    for (x, row) in j.rows().iter().enumerate() {
        for (y, &v) in row.iter().enumerate() {
            if v > 0.0 {
                let denom = px.prob(x) * q.prob(y);
                if denom <= 0.0 {
                    return f64::INFINITY;
                }
                best = best.max(v / denom);
            }
        }
    }
    best.ln().max(0.0)
}

/// `D_inf(P_X x Q_Y || P_XY)` in nats.
pub fn renyi_inf_product_vs_joint(j: &JointPmf, q: &Pmf) -> f64 {
    let (px, _) = j.marginals();
    let mut best = 0.0f64;
    for (x, row) in j.rows().iter().enumerate() {
        for (y, &v) in row.iter().enumerate() {
            let num = px.prob(x) * q.prob(y);
            if num > 0.0 {
                if v <= 0.0 {
                    return f64::INFINITY;
                }
                best = best.max(num / v);
            }
        }
    }
    best.ln().max(0.0)
}

/// Conditional maximal leakage: the worst per-z maximal leakage over the
/// support of Z.
pub fn conditional_maximal_leakage(cj: &CondJointPmf) -> LeakageValue {
    let best = cj
        .z_support(SUPPORT_TOL)
        .map(|z| maximal_leakage(cj.joint(z)).nats())
        .fold(0.0f64, f64::max);
    LeakageValue::from_nats(best)
}

/// Maximal realizable leakage: worst log-ratio `P_{Y|X}(y|x)/P_Y(y)` over
/// the joint support; equals `D_inf(P_XY || P_X x P_Y)`.
pub fn realizable_leakage(j: &JointPmf) -> LeakageValue {
    let (_, py) = j.marginals();
    LeakageValue::from_nats(renyi_inf_joint_vs_product(j, &py))
}

/// Worst (x,y) pair realizing [`realizable_leakage`]: `(x, y, log-ratio)`.
pub fn realizable_leakage_witness(j: &JointPmf) -> (usize, usize, f64) {
    let (px, py) = j.marginals();
    let mut arg = (0, 0);
    let mut best = f64::NEG_INFINITY;
    for (x, row) in j.rows().iter().enumerate() {
        for (y, &v) in row.iter().enumerate() {
            if v > 0.0 {
                let ratio = v / (px.prob(x) * py.prob(y));
                if ratio > best {
                    best = ratio;
                    arg = (x, y);
                }
            }
        }
    }
    (arg.0, arg.1, best.ln().max(0.0))
}

/// Local differential privacy level of a channel: the worst log-ratio of a
/// column entry across inputs. `+inf` iff some column mixes zero and
/// positive entries.
pub fn local_dp(ch: &Channel) -> LeakageValue {
    let mut best = 1.0f64;
    for y in 0..ch.y_len() {
        let col: Vec<f64> = (0..ch.x_len()).map(|x| ch.prob(x, y)).collect();
        let hi = col.iter().cloned().fold(0.0f64, f64::max);
        let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
        if hi > 0.0 {
            if lo <= 0.0 {
                return LeakageValue::infinite();
            }
            best = best.max(hi / lo);
        }
    }
    LeakageValue::from_nats(best.ln())
}

fn column_minima(ch: &Channel, mask: &SupportMask) -> Vec<f64> {
    (0..ch.y_len())
        .map(|y| mask.indices().map(|x| ch.prob(x, y)).fold(f64::INFINITY, f64::min))
        .collect()
}

/// Maximal cost leakage of a channel: `-log sum_y min_{x in supp} W(y|x)`.
pub fn cost_leakage_channel(ch: &Channel, mask: &SupportMask) -> LeakageValue {
    let total: f64 = column_minima(ch, mask).iter().sum();
    if total <= 0.0 {
        return LeakageValue::infinite();
    }
    // total <= 1, so -ln is nonnegative.
    LeakageValue::from_nats(-total.ln())
}

/// Maximal cost leakage of a joint distribution.
pub fn cost_leakage(j: &JointPmf) -> LeakageValue {
    let (px, _) = j.marginals();
    let mask = px.support(SUPPORT_TOL);
    let mut col_min = vec![f64::INFINITY; j.y_len()];
    for (x, row) in j.rows().iter().enumerate() {
        if !mask.contains(x) {
            continue;
        }
        let mass = px.prob(x);
        for (y, &v) in row.iter().enumerate() {
            col_min[y] = col_min[y].min(v / mass);
        }
    }
    let total: f64 = col_min.iter().sum();
    if total <= 0.0 {
        LeakageValue::infinite()
    } else {
        LeakageValue::from_nats(-total.ln())
    }
}

/// The output distribution achieving `inf_Q D_inf(P_X x Q || P_XY)`:
/// normalized column minima. Errors when the min-sum is zero (cost
/// leakage `+inf`, no witness exists).
pub fn cost_leakage_witness(ch: &Channel, mask: &SupportMask) -> Result<Pmf, MetricError> {
    let minima = column_minima(ch, mask);
    let total: f64 = minima.iter().sum();
    if total <= 0.0 {
        return Err(MetricError::DegenerateMinSum);
    }
    Ok(Pmf::from_parts(
        ch.y_labels().to_vec(),
        minima.iter().map(|&m| m / total).collect(),
    )
    .expect("column minima with positive sum normalize to a valid pmf"))
}

/// Maximal realizable cost: `max_{P_X(x)P_Y(y)>0} log(P_Y(y)/P_{Y|X}(y|x))`,
/// i.e. `D_inf(P_X x P_Y || P_XY)`.
pub fn realizable_cost(j: &JointPmf) -> LeakageValue {
    let (_, py) = j.marginals();
    LeakageValue::from_nats(renyi_inf_product_vs_joint(j, &py))
}

/// Hirschfeld-Gebelein-Renyi maximal correlation, in `[0, 1]`.
///
/// Second-largest singular value of `B(x,y) = P(x,y)/sqrt(P_X(x)P_Y(y))`
/// restricted to the support; power iteration after deflating the trivial
/// top pair `(sqrt(P_X), sqrt(P_Y))`.
pub fn maximal_correlation(j: &JointPmf) -> f64 {
    const TOL: f64 = 1e-11;
    const MAX_ITER: usize = 10_000;

    let (px, py) = j.marginals();
    let xs: Vec<usize> = px.support(SUPPORT_TOL).indices().collect();
    let ys: Vec<usize> = py.support(SUPPORT_TOL).indices().collect();
    if xs.len() < 2 || ys.len() < 2 {
        return 0.0;
    }
    let ny = ys.len();
    let sx: Vec<f64> = xs.iter().map(|&x| px.prob(x).sqrt()).collect();
    let sy: Vec<f64> = ys.iter().map(|&y| py.prob(y).sqrt()).collect();
    // Deflated matrix B1 = B - sx sy^T, built densely (alphabets are small).
    let b1: Vec<Vec<f64>> = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            ys.iter()
                .enumerate()
                .map(|(k, &y)| j.prob(x, y) / (sx[i] * sy[k]) - sx[i] * sy[k])
                .collect()
        })
        .collect();

    // Power iteration on B1^T B1 with a fixed, generic start vector.
    let mut v: Vec<f64> = (0..ny).map(|k| 1.0 + (k as f64) / ny as f64).collect();
    normalize(&mut v);
    let mut sigma2_prev = 0.0;
    let mut sigma2 = 0.0;
    for _ in 0..MAX_ITER {
        let u: Vec<f64> = b1.iter().map(|row| dot(row, &v)).collect();
        let mut w = vec![0.0; ny];
        for (i, row) in b1.iter().enumerate() {
            for (k, &bv) in row.iter().enumerate() {
                w[k] += bv * u[i];
            }
        }
        sigma2 = dot(&w, &v).max(0.0);
        let norm = normalize(&mut w);
        if norm == 0.0 {
            return 0.0;
        }
        v = w;
        if (sigma2 - sigma2_prev).abs() <= TOL * (1.0 + sigma2) {
            break;
        }
        sigma2_prev = sigma2;
    }
    sigma2.sqrt().clamp(0.0, 1.0)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
    n
}

/// Variance leakage `-log(1 - rho_m^2)`; `+inf` when `rho_m = 1`.
pub fn variance_leakage(j: &JointPmf) -> LeakageValue {
    let rho = maximal_correlation(j);
    let rem = 1.0 - rho * rho;
    if rem <= 0.0 {
        LeakageValue::infinite()
    } else {
        LeakageValue::from_nats(-rem.ln())
    }
}

/// Channel capacity by Blahut-Arimoto with a duality-gap certificate.
///
/// Stops when the capacity bracket width is at most `tol`; on iteration
/// exhaustion returns the best iterate and remaining gap in the error.
pub fn capacity(ch: &Channel, tol: f64, max_iter: usize) -> Result<LeakageValue, MetricError> {
    match solvers::blahut_arimoto_capacity(ch.rows(), tol, max_iter) {
        Ok(c) => Ok(LeakageValue::from_nats(c.value)),
        Err(solvers::SolverError::MaxIterExceeded { best, gap }) => {
            Err(MetricError::MaxIterExceeded { best, gap })
        }
        Err(e) => unreachable!("capacity solver raised {e}"),
    }
}

/// Upper bound `1 - exp(-L)` on the additive guessing advantage.
pub fn additive_increase_bound(j: &JointPmf) -> f64 {
    1.0 - (-maximal_leakage(j).nats()).exp()
}

/// Checks the two conditions under which `L(X -> Y) = I(X;Y)`:
/// the joint is singular (per-column conditionals agree on the support)
/// and all columns carry the same conditioned input mass.
pub fn mi_equality_conditions(j: &JointPmf) -> bool {
    const TOL: f64 = 1e-9;
    let (px, py) = j.marginals();
    // Condition 1: P_XY(x,y) > 0 and P_XY(x',y) > 0 imply equal W(y|x).
    for y in 0..j.y_len() {
        let mut seen: Option<f64> = None;
        for x in 0..j.x_len() {
            if j.prob(x, y) > 0.0 {
                let w = j.prob(x, y) / px.prob(x);
                match seen {
                    None => seen = Some(w),
                    Some(prev) => {
                        if (prev - w).abs() > TOL {
                            return false;
                        }
                    }
                }
            }
        }
    }
    // Condition 2: sum of P_X over the column support is constant in y.
    let mut common: Option<f64> = None;
    for y in 0..j.y_len() {
        if py.prob(y) <= 0.0 {
            continue;
        }
        let s: f64 =
            (0..j.x_len()).filter(|&x| j.prob(x, y) > 0.0).map(|x| px.prob(x)).sum();
        match common {
            None => common = Some(s),
            Some(prev) => {
                if (prev - s).abs() > TOL {
                    return false;
                }
            }
        }
    }
    true
}

/// All metrics of one joint distribution, with optimizing witnesses where
/// they exist. The report serializes with every leakage entry in `unit`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub unit: Unit,
    pub maximal_leakage: f64,
    pub mutual_information: f64,
    pub realizable_leakage: f64,
    pub local_dp: f64,
    pub cost_leakage: f64,
    pub realizable_cost: f64,
    pub maximal_correlation: f64,
    pub variance_leakage: f64,
    pub capacity: Option<f64>,
    pub additive_increase_bound: f64,
    pub mi_equals_leakage: bool,
    /// Output distribution achieving the Sibson infimum.
    pub sibson_witness: Vec<f64>,
    /// Output distribution achieving the cost-leakage infimum, if finite.
    pub cost_witness: Option<Vec<f64>>,
    /// `(x, y)` labels of the pair realizing the realizable leakage.
    pub realizable_witness: (String, String),
}

impl MetricReport {
    pub fn compute(j: &JointPmf, unit: Unit) -> Result<Self, crate::DistError> {
        let (_, ch, mask) = j.factor(SUPPORT_TOL)?;
        let (wx, wy, _) = realizable_leakage_witness(j);
        let cap = capacity(&ch, 1e-10, 100_000).ok();
        Ok(MetricReport {
            unit,
            maximal_leakage: maximal_leakage(j).in_unit(unit),
            mutual_information: LeakageValue::from_nats(mutual_information(j)).in_unit(unit),
            realizable_leakage: realizable_leakage(j).in_unit(unit),
            local_dp: local_dp(&ch).in_unit(unit),
            cost_leakage: cost_leakage(j).in_unit(unit),
            realizable_cost: realizable_cost(j).in_unit(unit),
            maximal_correlation: maximal_correlation(j),
            variance_leakage: variance_leakage(j).in_unit(unit),
            capacity: cap.map(|c| c.in_unit(unit)),
            additive_increase_bound: additive_increase_bound(j),
            mi_equals_leakage: mi_equality_conditions(j),
            sibson_witness: sibson_witness(&ch, &mask).probs().to_vec(),
            cost_witness: cost_leakage_witness(&ch, &mask).ok().map(|p| p.probs().to_vec()),
            realizable_witness: (
                j.x_labels()[wx].clone(),
                j.y_labels()[wy].clone(),
            ),
        })
    }
}
