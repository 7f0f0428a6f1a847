//! Desk-scale Shannon cipher system with lossy reconstruction.
//!
//! The construction works type-by-type: every source type inside the
//! KL ball `D(Q||P) <= alpha + delta` gets a rate-distortion codebook
//! built by greedy covering, the codebook is split into bins of size
//! `2^ceil(n r)`, and the key XORs away the index inside the bin. Types
//! outside the ball all map to one dummy message. The exact leakage of
//! the built scheme counts one unit per (type, bin) plus one for the
//! dummy message, and is cross-checked against a brute-force evaluation
//! of `sum_m max_x P(m|x)` with the key marginalized explicitly.
//!
//! Normalized leakage converges from above to the single-letter limit
//! `max_{Q in ball} [R(Q,D) - r]^+`, which is computed by grid search
//! with local refinement over the ball.
//!
//! Scheme construction supports binary source and reconstruction
//! alphabets (sequences live in `u32` bitmasks); the single-letter limit
//! supports up to four source symbols.

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::LN_2;
use thiserror::Error;

use crate::dist::{kl_divergence, DistError, Pmf};
use crate::exec;
use crate::mechanism::DistortionSpec;
use crate::metrics::LeakageValue;
use crate::solvers::{self, SolverError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CipherError {
    #[error("sequence space 2^{n} exceeds the configured cap 2^{cap}")]
    SizeCapExceeded { n: usize, cap: usize },
    #[error("greedy covering failed for type k={k} even at budget {budget}")]
    CoverageFailure { k: usize, budget: usize },
    #[error("scheme construction needs a binary full-support source, got {0}")]
    UnsupportedAlphabet(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// Cipher-system parameters. Rates and the KL radius are in bits, the
/// convention the scheme's counting arguments are stated in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CipherParams {
    pub distortion: DistortionSpec,
    /// Key rate r (bits per letter); the key has `ceil(n r)` bits.
    pub key_rate_bits: f64,
    /// Channel rate R (bits per letter); `None` means unconstrained.
    pub channel_rate_bits: Option<f64>,
    /// Excess-distortion exponent alpha (bits).
    pub alpha_bits: f64,
    /// Slack delta of the feasible KL ball (bits).
    pub delta_bits: f64,
    /// Covering-budget slack epsilon (bits): budget `2^{n(R(Q,D)+eps)}`.
    pub cover_epsilon_bits: f64,
    /// Cap on n (sequence space `2^n`).
    pub n_cap: usize,
}

impl CipherParams {
    pub fn new(distortion: DistortionSpec, key_rate_bits: f64, alpha_bits: f64) -> Self {
        CipherParams {
            distortion,
            key_rate_bits,
            channel_rate_bits: None,
            alpha_bits,
            delta_bits: 0.05,
            cover_epsilon_bits: 0.1,
            n_cap: 22,
        }
    }
}

/// One source type of length-n sequences over the binary alphabet,
/// identified by its ones-count `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeClass {
    pub k: usize,
    pub n: usize,
    /// `|T_Q| = C(n, k)`.
    pub class_size: u64,
    /// `P(T_Q)` under the source.
    pub probability: f64,
    /// `D(Q || P)` in bits.
    pub kl_bits: f64,
    pub feasible: bool,
}

impl TypeClass {
    /// Composition counts per source symbol.
    pub fn counts(&self) -> [usize; 2] {
        [self.n - self.k, self.k]
    }

    /// The empirical distribution of the type.
    pub fn empirical(&self, labels: &[String]) -> Pmf {
        let q = self.k as f64 / self.n as f64;
        Pmf::from_parts(labels.to_vec(), vec![1.0 - q, q]).expect("valid type point")
    }
}

/// The rate-distortion curve `D -> R(Q, D)` of a fixed source and
/// distortion measure, evaluated by Blahut-Arimoto at a set tolerance.
/// Nonincreasing and convex in D; zero from the zero-rate point onward.
pub struct RdCurve {
    source: Pmf,
    d: Vec<Vec<f64>>,
    tol: f64,
}

impl RdCurve {
    pub fn new(source: Pmf, d: Vec<Vec<f64>>, tol: f64) -> Self {
        assert!(tol > 0.0);
        RdCurve { source, d, tol }
    }

    /// `R(Q, D)` in nats.
    pub fn eval(&self, level: f64) -> Result<f64, SolverError> {
        Ok(solvers::rate_distortion(&self.source, &self.d, level, self.tol)?.value)
    }

    /// Smallest achievable expected distortion.
    pub fn d_min(&self) -> f64 {
        self.source
            .probs()
            .iter()
            .zip(&self.d)
            .map(|(&p, row)| p * row.iter().cloned().fold(f64::INFINITY, f64::min))
            .sum()
    }

    /// Distortion of the best constant output; `R = 0` from here on.
    pub fn d_zero_rate(&self) -> f64 {
        (0..self.d[0].len())
            .map(|y| {
                self.source
                    .probs()
                    .iter()
                    .zip(&self.d)
                    .map(|(&p, row)| p * row[y])
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

fn binomial(n: usize, k: usize) -> u64 {
    let mut acc = 1u128;
    for i in 0..k.min(n - k) {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// All sequences in `{0,1}^n` with exactly `k` ones (Gosper's hack).
fn type_class_members(n: usize, k: usize) -> Vec<u32> {
    if k == 0 {
        return vec![0];
    }
    let mut out = Vec::with_capacity(binomial(n, k) as usize);
    let limit = 1u64 << n;
    let mut v = (1u64 << k) - 1;
    while v < limit {
        out.push(v as u32);
        let c = v & v.wrapping_neg();
        let r = v + c;
        v = (((r ^ v) >> 2) / c) | r;
    }
    out
}

/// Total distortion between two bitmask sequences of length n under a
/// 2x2 per-letter distortion matrix.
fn seq_distortion(x: u32, y: u32, n: u32, d: &[[f64; 4]; 1]) -> f64 {
    let both = (x & y).count_ones();
    let x1 = x.count_ones();
    let y1 = y.count_ones();
    // x1 + y1 - both = |union| <= n, so this cannot underflow
    let c00 = (n + both) - x1 - y1;
    let c01 = y1 - both;
    let c10 = x1 - both;
    d[0][0] * c00 as f64 + d[0][1] * c01 as f64 + d[0][2] * c10 as f64 + d[0][3] * both as f64
}

fn flat_d(spec: &DistortionSpec) -> [[f64; 4]; 1] {
    [[spec.d[0][0], spec.d[0][1], spec.d[1][0], spec.d[1][1]]]
}

/// Codebook and binning data of one feasible type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeCodebook {
    pub type_class: TypeClass,
    /// Covering codewords, in construction order.
    pub codewords: Vec<u32>,
    /// Bin capacity `2^{key_bits}`.
    bin_capacity: u64,
}

impl TypeCodebook {
    pub fn bins(&self) -> u64 {
        (self.codewords.len() as u64).div_ceil(self.bin_capacity)
    }

    fn bin_size(&self, bin: u64) -> u64 {
        let len = self.codewords.len() as u64;
        if bin + 1 < self.bins() {
            self.bin_capacity
        } else {
            len - (self.bins() - 1) * self.bin_capacity
        }
    }
}

/// A public message: either the dummy message shared by all infeasible
/// sequences, or (type, bin, masked in-bin index).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Message {
    Dummy,
    Coded { type_idx: u32, bin: u32, j: u32 },
}

/// A fully built cipher scheme for block length n.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CipherScheme {
    pub n: usize,
    pub key_bits: u32,
    pub params: CipherParams,
    pub source: Pmf,
    pub types: Vec<TypeClass>,
    pub codebooks: Vec<TypeCodebook>,
    /// For each sequence: `(codebook index, codeword index)` when feasible.
    assign: Vec<Option<(u32, u32)>>,
    /// Fixed reconstruction the decoder emits for the dummy message.
    pub dummy_reconstruction: u32,
}

fn ceil_log2_u64(v: u64) -> u32 {
    let mut bits = 0;
    while (1u64 << bits) < v {
        bits += 1;
    }
    bits
}

impl CipherScheme {
    pub fn key_space(&self) -> u64 {
        1u64 << self.key_bits
    }

    pub fn encode(&self, x: u32, key: u64) -> Message {
        match self.assign[x as usize] {
            None => Message::Dummy,
            Some((cb, idx)) => {
                let book = &self.codebooks[cb as usize];
                let bin = idx as u64 / book.bin_capacity;
                let j = idx as u64 % book.bin_capacity;
                let s = ceil_log2_u64(book.bin_size(bin));
                let mask = (1u64 << s) - 1;
                Message::Coded {
                    type_idx: cb,
                    bin: bin as u32,
                    j: (j ^ (key & mask)) as u32,
                }
            }
        }
    }

    /// Reconstruction for a message under a key. The dummy message decodes
    /// to the fixed default sequence.
    pub fn decode(&self, m: Message, key: u64) -> u32 {
        match m {
            Message::Dummy => self.dummy_reconstruction,
            Message::Coded { type_idx, bin, j } => {
                let book = &self.codebooks[type_idx as usize];
                let s = ceil_log2_u64(book.bin_size(bin as u64));
                let mask = (1u64 << s) - 1;
                let idx = bin as u64 * book.bin_capacity + ((j as u64) ^ (key & mask));
                book.codewords[(idx as usize).min(book.codewords.len() - 1)]
            }
        }
    }

    pub fn assigned_codeword(&self, x: u32) -> Option<u32> {
        self.assign[x as usize]
            .map(|(cb, idx)| self.codebooks[cb as usize].codewords[idx as usize])
    }

    pub fn is_feasible(&self, x: u32) -> bool {
        self.assign[x as usize].is_some()
    }
}

/// Builds the type-by-type covering scheme. Deterministic given the seed.
pub fn build_scheme(
    n: usize,
    source: &Pmf,
    params: &CipherParams,
    seed: u64,
) -> Result<CipherScheme, CipherError> {
    if source.len() != 2 || source.probs().iter().any(|&p| p <= 0.0) {
        return Err(CipherError::UnsupportedAlphabet(source.len()));
    }
    if n == 0 || n > params.n_cap || n > 31 {
        return Err(CipherError::SizeCapExceeded { n, cap: params.n_cap.min(31) });
    }
    if params.distortion.d.len() != 2 || params.distortion.d[0].len() != 2 {
        return Err(CipherError::InvalidParameter("distortion matrix must be 2x2".into()));
    }
    let level = params.distortion.level;
    let d = flat_d(&params.distortion);
    let (p0, p1) = (source.prob(0), source.prob(1));
    let key_bits = (n as f64 * params.key_rate_bits).ceil().max(0.0) as u32;
    let bin_capacity = 1u64 << key_bits;
    let radius_bits = params.alpha_bits + params.delta_bits;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);

    let mut types = Vec::with_capacity(n + 1);
    let mut codebooks = Vec::new();
    let mut assign: Vec<Option<(u32, u32)>> = vec![None; 1usize << n];
    for k in 0..=n {
        let q = k as f64 / n as f64;
        let q_pmf = Pmf::from_parts(source.labels().to_vec(), vec![1.0 - q, q])?;
        let kl_bits = kl_divergence(&q_pmf, source)? / LN_2;
        let class_size = binomial(n, k);
        let probability = class_size as f64 * p1.powi(k as i32) * p0.powi((n - k) as i32);
        let feasible = kl_bits <= radius_bits + 1e-12;
        types.push(TypeClass { k, n, class_size, probability, kl_bits, feasible });
        if !feasible {
            continue;
        }
        let rate_bits = solvers::rate_distortion(&q_pmf, &params.distortion.d, level, 1e-7)?
            .value
            / LN_2;
        let mut budget = (2f64.powf(n as f64 * (rate_bits + params.cover_epsilon_bits)))
            .ceil()
            .max(1.0) as usize;
        let members = type_class_members(n, k);
        let mut built = None;
        for _ in 0..5 {
            if let Some(cover) = greedy_cover(&members, n as u32, &d, level, budget, &mut rng) {
                built = Some(cover);
                break;
            }
            budget *= 2;
        }
        let Some((codewords, owner)) = built else {
            return Err(CipherError::CoverageFailure { k, budget });
        };
        let cb_idx = codebooks.len() as u32;
        for (seq, cw) in members.iter().zip(owner) {
            assign[*seq as usize] = Some((cb_idx, cw));
        }
        codebooks.push(TypeCodebook {
            type_class: types[k].clone(),
            codewords,
            bin_capacity,
        });
    }

    // worst-case-letter reconstruction keeps the dummy decode within
    // D_max per letter
    let bit0 = if d[0][1] < d[0][0] { 1u32 } else { 0 };
    let dummy_reconstruction = if bit0 == 1 { (1u32 << n) - 1 } else { 0 };

    Ok(CipherScheme {
        n,
        key_bits,
        params: params.clone(),
        source: source.clone(),
        types,
        codebooks,
        assign,
        dummy_reconstruction,
    })
}

/// Greedy set cover of `members` by distortion balls of per-letter level
/// `level`. Returns the codewords plus, for each member (in input order),
/// the index of the codeword it was first covered by.
fn greedy_cover(
    members: &[u32],
    n: u32,
    d: &[[f64; 4]; 1],
    level: f64,
    budget: usize,
    rng: &mut ChaCha12Rng,
) -> Option<(Vec<u32>, Vec<u32>)> {
    const CANDIDATES: usize = 48;
    let threshold = n as f64 * level + 1e-9;
    // plain Hamming admits an integer radius test on xor popcounts
    let hamming_radius = if d[0][0] == 0.0 && d[0][3] == 0.0 && d[0][1] == d[0][2] && d[0][1] > 0.0
    {
        Some((threshold / d[0][1]).floor() as u32)
    } else {
        None
    };
    let covers = move |x: u32, y: u32| -> bool {
        match hamming_radius {
            Some(r) => (x ^ y).count_ones() <= r,
            None => seq_distortion(x, y, n, d) <= threshold,
        }
    };
    // per-letter greedy reconstruction of x: flip each letter to its
    // cheapest output
    let pref0 = if d[0][1] < d[0][0] { u32::MAX } else { 0 };
    let pref1 = if d[0][3] < d[0][2] { u32::MAX } else { 0 };
    let maskn = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let y_min = |x: u32| -> u32 { ((!x & maskn) & pref0) | (x & pref1) };

    let mut codewords: Vec<u32> = Vec::new();
    let mut owner = vec![u32::MAX; members.len()];
    let mut uncovered: Vec<usize> = (0..members.len()).collect();
    while !uncovered.is_empty() {
        if codewords.len() >= budget {
            return None;
        }
        let mut cands = Vec::with_capacity(CANDIDATES);
        cands.push(y_min(members[uncovered[0]]));
        for _ in 0..(CANDIDATES / 3) {
            let pick = uncovered[rng.gen_range(0..uncovered.len())];
            cands.push(y_min(members[pick]));
        }
        // perturbed centers: single flips of uncovered points often cover
        // more of a type class than in-type centers do
        for _ in 0..(CANDIDATES / 3) {
            let pick = uncovered[rng.gen_range(0..uncovered.len())];
            let flip = 1u32 << rng.gen_range(0..n);
            cands.push(y_min(members[pick]) ^ flip);
        }
        while cands.len() < CANDIDATES {
            cands.push(rng.gen::<u32>() & maskn);
        }
        let scores = exec::map_indexed(cands.len(), |c| {
            let y = cands[c];
            uncovered.iter().filter(|&&i| covers(members[i], y)).count()
        });
        let best = scores
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .unwrap();
        if scores[best] == 0 {
            return None; // even the per-letter optimum failed: infeasible level
        }
        let y = cands[best];
        let cw_idx = codewords.len() as u32;
        codewords.push(y);
        uncovered.retain(|&i| {
            if covers(members[i], y) {
                owner[i] = cw_idx;
                false
            } else {
                true
            }
        });
    }
    Some((codewords, owner))
}

/// Exact maximal leakage of a built scheme, in nats:
/// `ln(1{dummy used} + sum over feasible types of the bin count)`.
pub fn exact_scheme_leakage(s: &CipherScheme) -> LeakageValue {
    let bins: u64 = s.codebooks.iter().map(|c| c.bins()).sum();
    let dummy_used = s.types.iter().any(|t| !t.feasible) as u64;
    LeakageValue::from_nats(((dummy_used + bins) as f64).ln())
}

/// Brute-force `ln sum_m max_x P(m|x)` with the key marginalized by
/// explicit enumeration. Exponential in `n + key bits`; test-scale only.
pub fn brute_force_scheme_leakage(s: &CipherScheme) -> f64 {
    let keys = s.key_space();
    let mut best: HashMap<Message, f64> = HashMap::new();
    for x in 0..(1u32 << s.n) {
        let mut mine: HashMap<Message, u64> = HashMap::new();
        for key in 0..keys {
            *mine.entry(s.encode(x, key)).or_insert(0) += 1;
        }
        for (m, c) in mine {
            let p = c as f64 / keys as f64;
            let e = best.entry(m).or_insert(0.0);
            if p > *e {
                *e = p;
            }
        }
    }
    best.values().sum::<f64>().ln()
}

/// Excess-distortion accounting of a scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcessReport {
    /// `sum P(T_Q)` over infeasible types: the construction's bound on the
    /// excess probability.
    pub infeasible_mass: f64,
    /// Exact `Pr(d(X^n, Y^n) > D)` including the dummy reconstruction.
    pub excess_probability: f64,
    /// The target `2^{-n alpha}`.
    pub target: f64,
}

pub fn excess_distortion_prob(s: &CipherScheme) -> ExcessReport {
    let infeasible_mass: f64 =
        s.types.iter().filter(|t| !t.feasible).map(|t| t.probability).sum();
    let d = flat_d(&s.params.distortion);
    let threshold = s.n as f64 * s.params.distortion.level + 1e-9;
    let (p0, p1) = (s.source.prob(0), s.source.prob(1));
    let mut excess = 0.0;
    for x in 0..(1u32 << s.n) {
        if s.assign[x as usize].is_none()
            && seq_distortion(x, s.dummy_reconstruction, s.n as u32, &d) > threshold
        {
            let ones = x.count_ones() as i32;
            excess += p1.powi(ones) * p0.powi(s.n as i32 - ones);
        }
    }
    ExcessReport {
        infeasible_mass,
        excess_probability: excess,
        target: 2f64.powf(-(s.n as f64) * s.params.alpha_bits),
    }
}

/// The single-letter limit `max_{Q: D(Q||P) <= alpha} [R(Q, D) - r]^+`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleLetterLimit {
    pub value: LeakageValue,
    /// The maximizing source distribution.
    pub argmax: Vec<f64>,
    /// `max R(Q, D)` over the ball, in bits.
    pub max_rate_bits: f64,
    /// Whether the channel rate (when given) exceeds the max rate, i.e.
    /// the feasibility assumption holds; `None` when no rate was given.
    pub rate_feasible: Option<bool>,
}

pub fn single_letter_limit(
    source: &Pmf,
    params: &CipherParams,
    tol: f64,
) -> Result<SingleLetterLimit, CipherError> {
    let nx = source.len();
    if !(2..=4).contains(&nx) {
        return Err(CipherError::UnsupportedAlphabet(nx));
    }
    if params.distortion.d.len() != nx {
        return Err(CipherError::InvalidParameter(format!(
            "distortion matrix has {} rows for {} source symbols",
            params.distortion.d.len(),
            nx
        )));
    }
    let alpha_nats = params.alpha_bits * LN_2;
    let level = params.distortion.level;
    let rd = |q: &Pmf| -> Result<f64, CipherError> {
        Ok(solvers::rate_distortion(q, &params.distortion.d, level, tol.min(1e-7))?.value)
    };
    let in_ball = |q: &Pmf| -> bool {
        kl_divergence(q, source).map(|v| v <= alpha_nats + 1e-12).unwrap_or(false)
    };

    let (best_q, best_rate) = if nx == 2 {
        maximize_binary(source, alpha_nats, &rd)?
    } else {
        maximize_simplex(source, nx, &in_ball, &rd)?
    };

    let max_rate_bits = best_rate / LN_2;
    let value_bits = (max_rate_bits - params.key_rate_bits).max(0.0);
    let rate_feasible = params.channel_rate_bits.map(|r| r > max_rate_bits);
    Ok(SingleLetterLimit {
        value: LeakageValue::from_bits(value_bits),
        argmax: best_q,
        max_rate_bits,
        rate_feasible,
    })
}

fn maximize_binary(
    source: &Pmf,
    alpha_nats: f64,
    rd: &dyn Fn(&Pmf) -> Result<f64, CipherError>,
) -> Result<(Vec<f64>, f64), CipherError> {
    let p1 = source.prob(1);
    let mk = |q: f64| {
        Pmf::from_parts(source.labels().to_vec(), vec![1.0 - q, q]).expect("binary point")
    };
    let kl = |q: f64| kl_divergence(&mk(q), source).unwrap();
    // ball endpoints: the divergence is decreasing below p1 and
    // increasing above it, so bisect each side separately
    let q_hi = {
        let (mut lo, mut hi) = (p1, 1.0);
        if kl(hi) <= alpha_nats {
            hi
        } else {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if kl(mid) <= alpha_nats {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        }
    };
    let q_lo = {
        let (mut lo, mut hi) = (0.0, p1);
        if kl(lo) <= alpha_nats {
            lo
        } else {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if kl(mid) <= alpha_nats {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi
        }
    };
    let eval = |q: f64| -> Result<f64, CipherError> { rd(&mk(q)) };

    let mut best = (p1, eval(p1)?);
    let grid = 64;
    for i in 0..=grid {
        let q = q_lo + (q_hi - q_lo) * i as f64 / grid as f64;
        let r = eval(q)?;
        if r > best.1 {
            best = (q, r);
        }
    }
    let mut step = (q_hi - q_lo) / grid as f64;
    for _ in 0..40 {
        step *= 0.5;
        for q in [best.0 - step, best.0 + step] {
            if (q_lo..=q_hi).contains(&q) {
                let r = eval(q)?;
                if r > best.1 {
                    best = (q, r);
                }
            }
        }
        if step < 1e-12 {
            break;
        }
    }
    Ok((vec![1.0 - best.0, best.0], best.1))
}

fn maximize_simplex(
    source: &Pmf,
    nx: usize,
    in_ball: &dyn Fn(&Pmf) -> bool,
    rd: &dyn Fn(&Pmf) -> Result<f64, CipherError>,
) -> Result<(Vec<f64>, f64), CipherError> {
    let mk = |v: Vec<f64>| Pmf::from_parts(source.labels().to_vec(), v).expect("simplex point");
    // coarse composition grid, then shrinking coordinate-pair line search
    let res = 24usize;
    let mut best: Option<(Vec<f64>, f64)> = None;
    let consider = |v: Vec<f64>, best: &mut Option<(Vec<f64>, f64)>| -> Result<(), CipherError> {
        let q = mk(v.clone());
        if in_ball(&q) {
            let r = rd(&q)?;
            if best.as_ref().is_none_or(|(_, b)| r > *b) {
                *best = Some((v, r));
            }
        }
        Ok(())
    };
    let mut stack = vec![(Vec::<usize>::new(), res)];
    while let Some((prefix, rem)) = stack.pop() {
        if prefix.len() == nx - 1 {
            let mut v: Vec<f64> = prefix.iter().map(|&c| c as f64 / res as f64).collect();
            v.push(rem as f64 / res as f64);
            consider(v, &mut best)?;
            continue;
        }
        for c in 0..=rem {
            let mut p = prefix.clone();
            p.push(c);
            stack.push((p, rem - c));
        }
    }
    let (mut v, mut r) = best.ok_or_else(|| {
        CipherError::InvalidParameter("KL ball contains no grid point".into())
    })?;
    let mut h = 1.0 / res as f64;
    for _ in 0..30 {
        h *= 0.5;
        let mut improved = true;
        while improved {
            improved = false;
            for i in 0..nx {
                for jj in 0..nx {
                    if i == jj {
                        continue;
                    }
                    let mut w = v.clone();
                    if w[jj] < h {
                        continue;
                    }
                    w[i] += h;
                    w[jj] -= h;
                    let q = mk(w.clone());
                    if in_ball(&q) {
                        let rr = rd(&q)?;
                        if rr > r + 1e-15 {
                            v = w;
                            r = rr;
                            improved = true;
                        }
                    }
                }
            }
        }
        if h < 1e-10 {
            break;
        }
    }
    Ok((v, r))
}

/// Normalized exact leakage `(1/n) L` of a built scheme, in bits.
pub fn normalized_leakage_bits(s: &CipherScheme) -> f64 {
    exact_scheme_leakage(s).bits() / s.n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::testutil::labels;

    fn ber(p: f64) -> Pmf {
        Pmf::from_parts(labels("x", 2), vec![1.0 - p, p]).unwrap()
    }

    fn hamming_params(level: f64, r: f64, alpha: f64) -> CipherParams {
        CipherParams::new(DistortionSpec::hamming(2, level), r, alpha)
    }

    #[test]
    fn ceil_log2_agrees_with_reference() {
        for v in 1u64..100 {
            assert_eq!(ceil_log2_u64(v), (v as f64).log2().ceil() as u32, "v={v}");
        }
    }

    #[test]
    fn type_enumeration_is_complete() {
        for n in [4usize, 8] {
            let mut seen = 0u64;
            for k in 0..=n {
                let members = type_class_members(n, k);
                assert_eq!(members.len() as u64, binomial(n, k));
                for m in &members {
                    assert_eq!(m.count_ones() as usize, k);
                }
                seen += members.len() as u64;
            }
            assert_eq!(seen, 1 << n);
        }
    }

    #[test]
    fn zero_distortion_codebook_is_the_type_class() {
        let params = hamming_params(0.0, 0.5, 10.0); // everything feasible
        let s = build_scheme(4, &ber(0.5), &params, 1).unwrap();
        for cb in &s.codebooks {
            assert_eq!(cb.codewords.len() as u64, cb.type_class.class_size);
        }
        // every sequence reconstructs to itself
        for x in 0..(1u32 << 4) {
            assert_eq!(s.assigned_codeword(x), Some(x));
        }
    }

    #[test]
    fn reconstruction_is_perfect_for_every_key() {
        for n in [6usize, 8] {
            let params = hamming_params(0.25, 0.25, 0.05);
            let s = build_scheme(n, &ber(0.5), &params, 2).unwrap();
            let threshold = n as f64 * 0.25 + 1e-9;
            for x in 0..(1u32 << n) {
                let Some(cw) = s.assigned_codeword(x) else { continue };
                assert!(((x ^ cw).count_ones() as f64) <= threshold);
                for key in 0..s.key_space() {
                    assert_eq!(s.decode(s.encode(x, key), key), cw);
                }
            }
        }
    }

    #[test]
    fn zero_key_rate_counts_codewords() {
        let params = hamming_params(0.25, 0.0, 0.05);
        let s = build_scheme(8, &ber(0.5), &params, 3).unwrap();
        assert_eq!(s.key_bits, 0);
        let total: u64 = s.codebooks.iter().map(|c| c.codewords.len() as u64).sum();
        let expect = ((1 + total) as f64).ln();
        assert!((exact_scheme_leakage(&s).nats() - expect).abs() < 1e-12);
    }

    #[test]
    fn huge_key_rate_counts_feasible_types() {
        let params = hamming_params(0.25, 3.0, 0.05);
        let s = build_scheme(6, &ber(0.5), &params, 4).unwrap();
        let feasible = s.types.iter().filter(|t| t.feasible).count() as f64;
        assert!(s.types.iter().any(|t| !t.feasible));
        assert!((exact_scheme_leakage(&s).nats() - (1.0 + feasible).ln()).abs() < 1e-12);
    }

    #[test]
    fn brute_force_matches_counting_formula() {
        for (n, seed) in [(6usize, 5u64), (6, 6), (6, 7), (8, 5)] {
            let params = hamming_params(0.25, 0.25, 0.05);
            let s = build_scheme(n, &ber(0.5), &params, seed).unwrap();
            let exact = exact_scheme_leakage(&s).nats();
            let brute = brute_force_scheme_leakage(&s);
            assert!((exact - brute).abs() < 1e-12, "n={n}: exact {exact} brute {brute}");
        }
    }

    #[test]
    fn excess_distortion_accounting() {
        let params = hamming_params(0.25, 0.25, 0.05);
        let mut params = params;
        params.delta_bits = 0.02;
        let s = build_scheme(12, &ber(0.5), &params, 8).unwrap();
        let report = excess_distortion_prob(&s);
        let manual: f64 =
            s.types.iter().filter(|t| !t.feasible).map(|t| t.probability).sum();
        assert!((report.infeasible_mass - manual).abs() < 1e-15);
        assert!(report.excess_probability <= report.infeasible_mass + 1e-15);
        assert!((report.target - 2f64.powf(-0.6)).abs() < 1e-12);

        // at D = D_max any reconstruction is within the budget
        let loose = CipherParams::new(DistortionSpec::hamming(2, 1.0), 0.25, 0.05);
        let s = build_scheme(6, &ber(0.5), &loose, 9).unwrap();
        assert_eq!(excess_distortion_prob(&s).excess_probability, 0.0);
    }

    #[test]
    fn single_letter_limit_at_alpha_zero_is_the_source_rate() {
        // alpha = 0: the ball is {P}; value = [R(P, D) - r]^+
        let mut params = hamming_params(0.1, 0.2, 0.0);
        params.delta_bits = 0.0;
        let lim = single_letter_limit(&ber(0.5), &params, 1e-8).unwrap();
        let expect = 1.0 - crate::dist::binary_entropy(0.1) / LN_2 - 0.2;
        assert!((lim.value.bits() - expect).abs() < 1e-6, "{} vs {expect}", lim.value.bits());
    }

    #[test]
    fn single_letter_limit_clamps_at_zero() {
        let params = hamming_params(0.25, 1.1, 0.05);
        let lim = single_letter_limit(&ber(0.5), &params, 1e-7).unwrap();
        assert_eq!(lim.value.bits(), 0.0);
    }

    #[test]
    fn single_letter_limit_asymmetric_source_matches_brute_force() {
        // fine sweep of the ball as an independent check on the
        // edge-finding and the refinement, for a skewed source
        let source = ber(0.3);
        let alpha_bits = 0.08;
        let level = 0.1;
        let mut params = hamming_params(level, 0.0, alpha_bits);
        params.delta_bits = 0.0;
        let lim = single_letter_limit(&source, &params, 1e-8).unwrap();

        let mut best = 0.0f64;
        for i in 0..=20_000 {
            let q = i as f64 / 20_000.0;
            let qp = Pmf::from_parts(source.labels().to_vec(), vec![1.0 - q, q]).unwrap();
            if kl_divergence(&qp, &source).unwrap() / LN_2 <= alpha_bits {
                // Hamming closed form H(q) - H(level) for level <= q <= 1/2
                let h = crate::dist::binary_entropy(q.min(1.0 - q));
                let r = ((h - crate::dist::binary_entropy(level)) / LN_2).max(0.0);
                best = best.max(r);
            }
        }
        assert!(
            (lim.value.bits() - best).abs() < 1e-4,
            "limit {} vs swept {best}",
            lim.value.bits()
        );
        // the ball is asymmetric around p: both edges stay on their side
        let q_star = lim.argmax[1];
        assert!(q_star > 0.3 && q_star <= 0.5 + 1e-9);
    }

    #[test]
    fn single_letter_limit_unconstrained_ball() {
        // huge alpha: maximize R(Q, D) over the whole simplex; for Hamming
        // the max is at the uniform source
        let params = hamming_params(0.1, 0.0, 1e6);
        let lim = single_letter_limit(&ber(0.3), &params, 1e-8).unwrap();
        let expect = 1.0 - crate::dist::binary_entropy(0.1) / LN_2;
        assert!((lim.value.bits() - expect).abs() < 1e-5);
        assert!((lim.argmax[0] - 0.5).abs() < 1e-3);
    }

    #[test]
    fn single_letter_limit_reports_rate_feasibility() {
        let mut params = hamming_params(0.1, 0.2, 0.0);
        params.channel_rate_bits = Some(1.0);
        let lim = single_letter_limit(&ber(0.5), &params, 1e-7).unwrap();
        assert_eq!(lim.rate_feasible, Some(true));
        params.channel_rate_bits = Some(0.1);
        let lim = single_letter_limit(&ber(0.5), &params, 1e-7).unwrap();
        assert_eq!(lim.rate_feasible, Some(false));
    }

    #[test]
    fn ternary_single_letter_limit_matches_fine_grid() {
        let source = Pmf::from_parts(labels("x", 3), vec![0.5, 0.3, 0.2]).unwrap();
        let d = vec![
            vec![0.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0],
        ];
        let spec = DistortionSpec::new(d.clone(), 0.05).unwrap();
        let params = CipherParams::new(spec, 0.1, 0.02);
        let lim = single_letter_limit(&source, &params, 1e-5).unwrap();
        assert!(lim.value.bits() > 0.0);
        assert!(lim.max_rate_bits <= 3f64.log2() + 1e-9);

        // validate the search itself against an exhaustive fine grid
        // using the same rate evaluator
        let res = 120usize;
        let alpha_nats = params.alpha_bits * LN_2;
        let mut best = 0.0f64;
        for i in 0..=res {
            for jj in 0..=(res - i) {
                let v = vec![
                    i as f64 / res as f64,
                    jj as f64 / res as f64,
                    (res - i - jj) as f64 / res as f64,
                ];
                let q = Pmf::from_parts(labels("x", 3), v).unwrap();
                if kl_divergence(&q, &source).unwrap() <= alpha_nats {
                    best = best.max(
                        solvers::rate_distortion(&q, &d, 0.05, 1e-7).unwrap().value,
                    );
                }
            }
        }
        assert!(
            lim.max_rate_bits >= best / LN_2 - 1e-4,
            "search {} below fine grid {}",
            lim.max_rate_bits,
            best / LN_2
        );
    }

    #[test]
    fn rd_curve_is_monotone_convex_and_ends_at_zero() {
        let curve = RdCurve::new(ber(0.4), DistortionSpec::hamming(2, 0.0).d, 1e-9);
        let d_top = curve.d_zero_rate();
        assert!((curve.eval(d_top).unwrap()).abs() < 1e-12);
        let grid: Vec<f64> = (0..=10).map(|i| d_top * i as f64 / 10.0).collect();
        let vals: Vec<f64> = grid.iter().map(|&d| curve.eval(d).unwrap()).collect();
        for w in vals.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "curve must be nonincreasing");
        }
        for i in 1..vals.len() - 1 {
            // midpoint convexity on the uniform grid
            assert!(vals[i] <= 0.5 * (vals[i - 1] + vals[i + 1]) + 1e-7);
        }
        assert!((curve.d_min() - 0.0).abs() < 1e-15);
        assert_eq!(curve.eval(d_top + 1.0).unwrap(), 0.0);
    }

    #[test]
    fn scheme_rejects_oversized_blocks() {
        let params = hamming_params(0.25, 0.25, 0.05);
        assert!(matches!(
            build_scheme(30, &ber(0.5), &params, 1),
            Err(CipherError::SizeCapExceeded { .. })
        ));
    }
}
