//! Channels minimizing maximal leakage under an expected-distortion budget.
//!
//! Minimizing `exp L = sum_y max_{x in supp} W(y|x)` over row-stochastic
//! channels is a linear program after the epigraph substitution
//! `t_y >= W(y|x)`. The general solver runs that LP and reports a dual
//! certificate; the binary-Hamming case also has an exact closed form,
//! which doubles as the solver's oracle. The memoryless-scheme bound
//! quantifies how far per-letter randomization stays from the optimal
//! quantization-based scheme.

use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;
use thiserror::Error;

use crate::dist::{binary_entropy, Channel, DistError, Pmf, SupportMask};
use crate::metrics::LeakageValue;
use crate::simplex::{self, LpError, LpProblem, Rel};
use crate::SUPPORT_TOL;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MechanismError {
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
    #[error("distortion level {level} is below the minimum achievable {d_min}")]
    Infeasible { level: f64, d_min: f64 },
    #[error("LP solver stalled before certifying an optimum")]
    SolverStalled,
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// A distortion measure `d(x, y) >= 0` together with the level `D` the
/// mechanism must meet in expectation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionSpec {
    pub d: Vec<Vec<f64>>,
    pub level: f64,
}

impl DistortionSpec {
    pub fn new(d: Vec<Vec<f64>>, level: f64) -> Result<Self, MechanismError> {
        if d.is_empty() || d[0].is_empty() {
            return Err(MechanismError::ParameterOutOfRange("empty distortion matrix".into()));
        }
        let cols = d[0].len();
        for row in &d {
            if row.len() != cols {
                return Err(MechanismError::ParameterOutOfRange("ragged distortion matrix".into()));
            }
            for &v in row {
                if !v.is_finite() || v < 0.0 {
                    return Err(MechanismError::ParameterOutOfRange(format!(
                        "distortion entry {v} must be finite and nonnegative"
                    )));
                }
            }
        }
        Ok(DistortionSpec { d, level })
    }

    /// Hamming distortion on an n-symbol alphabet.
    pub fn hamming(n: usize, level: f64) -> Self {
        let d = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
            .collect();
        DistortionSpec { d, level }
    }

    /// `D_min = max_x min_y d(x,y)` over the masked inputs: the smallest
    /// level for which any channel is feasible.
    pub fn d_min(&self, mask: &SupportMask) -> f64 {
        mask.indices()
            .map(|x| self.d[x].iter().cloned().fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    }

    pub fn d_max(&self) -> f64 {
        self.d.iter().flatten().cloned().fold(0.0, f64::max)
    }
}

/// Optimality evidence attached to a [`MechanismSolution`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// Exact closed form; no numerical gap.
    ClosedForm,
    /// LP optimum with its dual bound.
    DualBound { dual_value: f64, gap: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismSolution {
    pub channel: Channel,
    pub leakage: LeakageValue,
    pub expected_distortion: f64,
    pub certificate: Certificate,
}

fn check_hamming_params(p: f64, level: f64) -> Result<(), MechanismError> {
    if !(p > 0.0 && p <= 0.5) {
        return Err(MechanismError::ParameterOutOfRange(format!("p = {p} not in (0, 1/2]")));
    }
    if !(0.0..=p).contains(&level) {
        return Err(MechanismError::ParameterOutOfRange(format!(
            "D = {level} not in [0, p = {p}]"
        )));
    }
    Ok(())
}

/// Closed-form optimal mechanism for `X ~ Ber(p)` under Hamming distortion:
/// never flip `x = 0`, flip `x = 1` with probability `D/p`. Leakage
/// `log2(2 - D/p)` bits.
pub fn min_leakage_hamming_binary(p: f64, level: f64) -> Result<MechanismSolution, MechanismError> {
    check_hamming_params(p, level)?;
    let flip = level / p;
    let channel = Channel::new(
        vec!["0".into(), "1".into()],
        vec!["0".into(), "1".into()],
        vec![vec![1.0, 0.0], vec![flip, 1.0 - flip]],
    )?;
    Ok(MechanismSolution {
        channel,
        leakage: LeakageValue::from_nats((2.0 - flip).ln()),
        expected_distortion: level,
        certificate: Certificate::ClosedForm,
    })
}

/// LP solution of `min sum_y max_{x in supp} W(y|x)` subject to
/// row-stochasticity and `E[d(X,Y)] <= D`.
///
/// Out-of-support rows are unconstrained by the objective and get copied
/// from the nearest in-support row. The solution carries the LP's dual
/// certificate; `gap <= tol` on every path that returns `Ok`.
pub fn min_leakage_general(
    px: &Pmf,
    spec: &DistortionSpec,
    tol: f64,
) -> Result<MechanismSolution, MechanismError> {
    assert!(tol > 0.0, "tolerance must be positive");
    let nx = px.len();
    let ny = spec.d[0].len();
    if spec.d.len() != nx {
        return Err(MechanismError::ParameterOutOfRange(format!(
            "distortion matrix has {} rows for {} inputs",
            spec.d.len(),
            nx
        )));
    }
    let mask = px.support(SUPPORT_TOL);
    let d_min = spec.d_min(&mask);
    if spec.level < d_min - 1e-12 {
        return Err(MechanismError::Infeasible { level: spec.level, d_min });
    }
    let xs: Vec<usize> = mask.indices().collect();
    let ns = xs.len();
    // variables: W[s][y] for s in 0..ns, then t[y]
    let nv = ns * ny + ny;
    let wvar = |s: usize, y: usize| s * ny + y;
    let tvar = |y: usize| ns * ny + y;

    let mut objective = vec![0.0; nv];
    for y in 0..ny {
        objective[tvar(y)] = 1.0;
    }
    let mut rows = Vec::new();
    for s in 0..ns {
        let mut r = vec![0.0; nv];
        for y in 0..ny {
            r[wvar(s, y)] = 1.0;
        }
        rows.push((r, Rel::Eq, 1.0));
    }
    let mut dist_row = vec![0.0; nv];
    for (s, &x) in xs.iter().enumerate() {
        for y in 0..ny {
            dist_row[wvar(s, y)] = px.prob(x) * spec.d[x][y];
        }
    }
    rows.push((dist_row, Rel::Le, spec.level));
    for s in 0..ns {
        for y in 0..ny {
            let mut r = vec![0.0; nv];
            r[wvar(s, y)] = 1.0;
            r[tvar(y)] = -1.0;
            rows.push((r, Rel::Le, 0.0));
        }
    }

    let sol = simplex::solve(&LpProblem { objective, rows }).map_err(|e| match e {
        LpError::Infeasible(_) => MechanismError::Infeasible { level: spec.level, d_min },
        _ => MechanismError::SolverStalled,
    })?;
    if sol.certificate_gap() > tol {
        return Err(MechanismError::SolverStalled);
    }

    // Rebuild the full channel; out-of-support rows copy the nearest
    // in-support row (lower index wins ties).
    let mut w = vec![vec![0.0; ny]; nx];
    for (s, &x) in xs.iter().enumerate() {
        for y in 0..ny {
            w[x][y] = sol.x[wvar(s, y)].max(0.0);
        }
        let mass: f64 = w[x].iter().sum();
        for v in &mut w[x] {
            *v /= mass;
        }
    }
    for x in 0..nx {
        if !mask.contains(x) {
            let nearest = *xs
                .iter()
                .min_by_key(|&&s| (x as i64 - s as i64).unsigned_abs())
                .expect("mask is nonempty");
            w[x] = w[nearest].clone();
        }
    }
    let labels_y: Vec<String> = (0..ny).map(|y| format!("y{y}")).collect();
    let channel = Channel::new(px.labels().to_vec(), labels_y, w)?;
    let expected_distortion: f64 = xs
        .iter()
        .map(|&x| {
            px.prob(x)
                * (0..ny).map(|y| channel.prob(x, y) * spec.d[x][y]).sum::<f64>()
        })
        .sum();
    Ok(MechanismSolution {
        channel,
        leakage: LeakageValue::from_nats(sol.value.max(1.0).ln()),
        expected_distortion,
        certificate: Certificate::DualBound {
            dual_value: sol.dual_objective,
            gap: sol.certificate_gap(),
        },
    })
}

/// The memoryless-scheme penalty under binary-Hamming settings: every
/// per-letter scheme leaks at least `1 - D/p` bits per letter, while the
/// optimal (quantization-based) scheme attains `H(p) - H(D)` bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemorylessGap {
    pub memoryless_lower_bound: LeakageValue,
    pub optimal_rate: LeakageValue,
}

pub fn memoryless_lower_bound_hamming(p: f64, level: f64) -> Result<MemorylessGap, MechanismError> {
    check_hamming_params(p, level)?;
    let optimal_bits = (binary_entropy(p) - binary_entropy(level)) / LN_2;
    Ok(MemorylessGap {
        memoryless_lower_bound: LeakageValue::from_bits(1.0 - level / p),
        optimal_rate: LeakageValue::from_bits(optimal_bits.max(0.0)),
    })
}

/// The best a single-letter memoryless scheme can do: `log2(2 - D/p)` bits,
/// the same closed form as the one-shot mechanism optimum.
pub fn per_letter_memoryless_optimum(p: f64, level: f64) -> Result<LeakageValue, MechanismError> {
    check_hamming_params(p, level)?;
    Ok(LeakageValue::from_bits((2.0 - level / p).log2()))
}
