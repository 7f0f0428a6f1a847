//! Estimating maximal leakage from i.i.d. samples.
//!
//! The main estimator Poisson-thins the per-symbol sample counts so the
//! retained cell counts become independent Poisson variables, then sums
//! per-column maxima of the thinned ratios. Alongside it: the naive
//! plug-in baseline, the sample-complexity bound formulas, the
//! hard-instance family behind the lower bound, and a seeded Monte Carlo
//! harness measuring empirical failure rates. Every randomized routine is
//! reproducible from `(seed, parameters)`; trials derive independent
//! generators from `(seed, trial index)` so the experiment runner can
//! fan out without changing results.

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{DistError, JointPmf, Pmf};
use crate::exec;
use crate::metrics::{maximal_leakage, LeakageValue};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("sample set is empty")]
    EmptySample,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("delta must lie strictly between 1/|Y| and 1/2")]
    DeltaOutOfRange,
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// A multiset of (x, y) draws with their per-symbol counts and the nominal
/// sampling rate they were drawn at.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    x_labels: Vec<String>,
    y_labels: Vec<String>,
    pairs: Vec<(u32, u32)>,
    n_x: Vec<u64>,
    n_y: Vec<u64>,
    n_xy: Vec<Vec<u64>>,
    nominal_rate: f64,
}

impl SampleSet {
    pub fn from_pairs(
        x_labels: Vec<String>,
        y_labels: Vec<String>,
        pairs: Vec<(u32, u32)>,
        nominal_rate: f64,
    ) -> Self {
        let mut n_x = vec![0u64; x_labels.len()];
        let mut n_y = vec![0u64; y_labels.len()];
        let mut n_xy = vec![vec![0u64; y_labels.len()]; x_labels.len()];
        for &(x, y) in &pairs {
            n_x[x as usize] += 1;
            n_y[y as usize] += 1;
            n_xy[x as usize][y as usize] += 1;
        }
        SampleSet { x_labels, y_labels, pairs, n_x, n_y, n_xy, nominal_rate }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn count_x(&self, x: usize) -> u64 {
        self.n_x[x]
    }

    pub fn count_y(&self, y: usize) -> u64 {
        self.n_y[y]
    }

    pub fn count_xy(&self, x: usize, y: usize) -> u64 {
        self.n_xy[x][y]
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.pairs
    }

    pub fn nominal_rate(&self) -> f64 {
        self.nominal_rate
    }

    pub fn x_len(&self) -> usize {
        self.x_labels.len()
    }

    pub fn y_len(&self) -> usize {
        self.y_labels.len()
    }
}

/// `n` i.i.d. draws from the joint, deterministic given the seed.
pub fn sample_fixed(j: &JointPmf, n: usize, seed: u64) -> SampleSet {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let set = draw_pairs(j, n, &mut rng);
    SampleSet { nominal_rate: n as f64, ..set }
}

/// Poisson sampling: draw `N ~ Poi(rate)`, then `N` i.i.d. pairs. The
/// per-cell counts are then independent `Poi(rate * P_XY(x,y))`.
pub fn sample_poisson(j: &JointPmf, rate: f64, seed: u64) -> SampleSet {
    assert!(rate > 0.0, "poisson sampling needs a positive rate");
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let n = Poisson::new(rate).expect("positive rate").sample(&mut rng) as usize;
    let set = draw_pairs(j, n, &mut rng);
    SampleSet { nominal_rate: rate, ..set }
}

fn draw_pairs(j: &JointPmf, n: usize, rng: &mut ChaCha12Rng) -> SampleSet {
    let ny = j.y_len() as u32;
    let flat: Vec<f64> = j.rows().iter().flatten().cloned().collect();
    let mut pairs = Vec::with_capacity(n);
    if n > 0 {
        let dist = WeightedIndex::new(&flat).expect("joint has positive mass");
        for _ in 0..n {
            let cell = dist.sample(rng) as u32;
            pairs.push((cell / ny, cell % ny));
        }
    }
    SampleSet::from_pairs(j.x_labels().to_vec(), j.y_labels().to_vec(), pairs, n as f64)
}

/// Parameters of the Poisson-thinning estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Lower bound on the minimum positive probability of an x symbol.
    pub theta: f64,
    /// Additive accuracy target, in nats.
    pub delta: f64,
    /// Allowed failure probability.
    pub epsilon: f64,
}

impl EstimatorConfig {
    pub fn new(theta: f64, delta: f64, epsilon: f64) -> Result<Self, EstimateError> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(EstimateError::InvalidParameter("theta must be in (0, 1]".into()));
        }
        if delta <= 0.0 {
            return Err(EstimateError::InvalidParameter("delta must be positive".into()));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(EstimateError::InvalidParameter("epsilon must be in (0, 1)".into()));
        }
        Ok(EstimatorConfig { theta, delta, epsilon })
    }

    /// The thinning rate parameter `theta' = theta / 4`.
    pub fn theta_prime(&self) -> f64 {
        self.theta / 4.0
    }
}

/// Poisson-thinning estimate of maximal leakage, plus whether the
/// degeneracy fallback (`M_hat = 1`) fired.
pub fn estimate_ml_poisson_detailed(
    s: &SampleSet,
    cfg: &EstimatorConfig,
    seed: u64,
) -> (LeakageValue, bool) {
    let rate = s.nominal_rate * cfg.theta_prime();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let poi = Poisson::new(rate.max(f64::MIN_POSITIVE)).expect("positive thinning rate");

    // Target counts per observed symbol, in alphabet order.
    let mut target = vec![0u64; s.x_len()];
    for x in 0..s.x_len() {
        if s.n_x[x] > 0 {
            target[x] = poi.sample(&mut rng) as u64;
        }
    }
    // Degenerate X: at most one symbol ever observed carries no evidence
    // of dependence, so report M_hat = 1.
    let observed = s.n_x.iter().filter(|&&c| c > 0).count();
    if observed <= 1 {
        return (LeakageValue::from_nats(0.0), true);
    }
    if (0..s.x_len()).any(|x| target[x] > s.n_x[x]) {
        return (LeakageValue::from_nats(0.0), true);
    }
    // Keep the first target[x] samples containing x, in sample order.
    let mut taken = vec![0u64; s.x_len()];
    let mut tilde = vec![vec![0u64; s.y_len()]; s.x_len()];
    for &(x, y) in &s.pairs {
        let (x, y) = (x as usize, y as usize);
        if taken[x] < target[x] {
            taken[x] += 1;
            tilde[x][y] += 1;
        }
    }
    let m_hat: f64 = (0..s.y_len())
        .map(|y| (0..s.x_len()).map(|x| tilde[x][y]).max().unwrap_or(0) as f64 / rate)
        .sum();
    (LeakageValue::from_nats(m_hat.max(1.0).ln()), false)
}

/// Poisson-thinning estimate of maximal leakage; always finite and `>= 0`.
pub fn estimate_ml_poisson(s: &SampleSet, cfg: &EstimatorConfig, seed: u64) -> LeakageValue {
    estimate_ml_poisson_detailed(s, cfg, seed).0
}

/// Naive plug-in baseline: `log sum_y max_{x: N_x>0} N_xy / N_x`, with the
/// sum clamped at 1 so the estimate stays nonnegative.
pub fn estimate_ml_plugin(s: &SampleSet) -> Result<LeakageValue, EstimateError> {
    if s.is_empty() {
        return Err(EstimateError::EmptySample);
    }
    let total: f64 = (0..s.y_len())
        .map(|y| {
            (0..s.x_len())
                .filter(|&x| s.n_x[x] > 0)
                .map(|x| s.n_xy[x][y] as f64 / s.n_x[x] as f64)
                .fold(0.0f64, f64::max)
        })
        .sum();
    Ok(LeakageValue::from_nats(total.max(1.0).ln()))
}

/// Fixed-length sample-complexity upper bound:
/// `8 (ln(5/eps) + |Y| ln|X|) / (theta ((2-e^-d) ln(2-e^-d) + e^-d - 1))`.
pub fn sample_complexity_upper(
    card_x: usize,
    card_y: usize,
    theta: f64,
    delta: f64,
    epsilon: f64,
) -> Result<f64, EstimateError> {
    if card_x < 1 || card_y < 1 {
        return Err(EstimateError::InvalidParameter("alphabets must be nonempty".into()));
    }
    let cfg = EstimatorConfig::new(theta, delta, epsilon)?;
    let e = (-cfg.delta).exp();
    let denom = cfg.theta * ((2.0 - e) * (2.0 - e).ln() + e - 1.0);
    let numer = 8.0 * ((5.0 / cfg.epsilon).ln() + card_y as f64 * (card_x as f64).ln());
    Ok(numer / denom)
}

/// Lower-bound scaling `theta |Y| ln^2(1/delta) / ln|Y|`, deliberately
/// reported without the unspecified universal constant.
pub fn sample_complexity_lower_scaling(
    card_y: usize,
    theta: f64,
    delta: f64,
) -> Result<f64, EstimateError> {
    if card_y < 2 {
        return Err(EstimateError::InvalidParameter("need |Y| >= 2".into()));
    }
    let k = card_y as f64;
    if !(delta > 1.0 / k && delta < 0.5) {
        return Err(EstimateError::DeltaOutOfRange);
    }
    let l = (1.0 / delta).ln();
    Ok(theta * k * l * l / k.ln())
}

/// The estimation lower bound's hard family: a two-row channel whose first
/// row is `p_y` and second row uniform, with `P_X(x1) = theta`. Its
/// maximal leakage is `h(p_y) = ln sum_y max(1/|Y|, p_y)`.
pub fn hard_instance(card_y: usize, p_y: &Pmf, theta: f64) -> Result<JointPmf, EstimateError> {
    if card_y != p_y.len() {
        return Err(EstimateError::Dist(DistError::LabelMismatch(format!(
            "card_y {} vs |p_y| {}",
            card_y,
            p_y.len()
        ))));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(EstimateError::InvalidParameter("theta must be in (0, 1)".into()));
    }
    let k = card_y as f64;
    let row0: Vec<f64> = p_y.probs().iter().map(|&p| theta * p).collect();
    let row1: Vec<f64> = vec![(1.0 - theta) / k; card_y];
    Ok(JointPmf::new(
        vec!["x1".into(), "x2".into()],
        p_y.labels().to_vec(),
        vec![row0, row1],
    )?)
}

/// Closed-form leakage `h(p_y)` of the hard instance.
pub fn hard_instance_value(p_y: &Pmf) -> f64 {
    let k = p_y.len() as f64;
    p_y.probs().iter().map(|&p| p.max(1.0 / k)).sum::<f64>().ln()
}

/// How the harness draws each trial's sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleMode {
    /// `N ~ Poi(n)` pairs per trial.
    Poisson,
    /// `n` pairs per trial, converted to an effective `Poi(n/2)` sample by
    /// drawing the length and truncating (falls back when `N > n`).
    Fixed,
}

/// Outcome of a seeded error-rate experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub true_leakage_nats: f64,
    pub mean_estimate_nats: f64,
    pub failure_rate: f64,
    pub fallback_rate: f64,
    pub trials: usize,
    pub n: f64,
    pub mode: SampleMode,
}

/// Runs `trials` independent estimate-vs-truth comparisons and reports the
/// fraction with `|L_hat - L| > delta`. Deterministic given the seed; the
/// trials execute in parallel when the `parallel` feature is on.
pub fn run_error_rate_experiment(
    j: &JointPmf,
    cfg: &EstimatorConfig,
    n: f64,
    trials: usize,
    seed: u64,
    mode: SampleMode,
) -> ExperimentReport {
    let outcomes = exec::map_indexed(trials, |t| run_trial(j, cfg, n, seed, t as u64, mode));
    summarize(j, cfg, n, mode, outcomes)
}

/// Sequential twin of [`run_error_rate_experiment`]; same outputs.
pub fn run_error_rate_experiment_seq(
    j: &JointPmf,
    cfg: &EstimatorConfig,
    n: f64,
    trials: usize,
    seed: u64,
    mode: SampleMode,
) -> ExperimentReport {
    let outcomes = exec::map_indexed_seq(trials, |t| run_trial(j, cfg, n, seed, t as u64, mode));
    summarize(j, cfg, n, mode, outcomes)
}

fn summarize(
    j: &JointPmf,
    cfg: &EstimatorConfig,
    n: f64,
    mode: SampleMode,
    outcomes: Vec<(f64, bool)>,
) -> ExperimentReport {
    let truth = maximal_leakage(j).nats();
    let trials = outcomes.len();
    let failures = outcomes.iter().filter(|(est, _)| (est - truth).abs() > cfg.delta).count();
    let fallbacks = outcomes.iter().filter(|&&(_, fb)| fb).count();
    ExperimentReport {
        true_leakage_nats: truth,
        mean_estimate_nats: outcomes.iter().map(|(e, _)| e).sum::<f64>() / trials.max(1) as f64,
        failure_rate: failures as f64 / trials.max(1) as f64,
        fallback_rate: fallbacks as f64 / trials.max(1) as f64,
        trials,
        n,
        mode,
    }
}

fn run_trial(
    j: &JointPmf,
    cfg: &EstimatorConfig,
    n: f64,
    seed: u64,
    trial: u64,
    mode: SampleMode,
) -> (f64, bool) {
    // Two independent streams per trial: one for sampling, one for thinning.
    let mut sample_rng = ChaCha12Rng::seed_from_u64(seed);
    sample_rng.set_stream(2 * trial);
    let mut est_rng = ChaCha12Rng::seed_from_u64(seed);
    est_rng.set_stream(2 * trial + 1);
    let sample_seed = sample_rng.gen::<u64>();
    let est_seed = est_rng.gen::<u64>();

    let s = match mode {
        SampleMode::Poisson => sample_poisson(j, n, sample_seed),
        SampleMode::Fixed => {
            let full = sample_fixed(j, n.round() as usize, sample_seed);
            match poissonize_fixed(&full, sample_seed ^ 0x9E37_79B9_7F4A_7C15) {
                Some(s) => s,
                None => return (0.0, true), // N exceeded the fixed budget
            }
        }
    };
    let (est, fb) = estimate_ml_poisson_detailed(&s, cfg, est_seed);
    (est.nats(), fb)
}

/// Converts a fixed-length sample of size `n` into an effective
/// `Poi(n/2)` sample by drawing the length and truncating. `None` when the
/// drawn length exceeds the available samples.
pub fn poissonize_fixed(s: &SampleSet, seed: u64) -> Option<SampleSet> {
    let half = s.nominal_rate / 2.0;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let n = Poisson::new(half.max(f64::MIN_POSITIVE)).expect("positive rate").sample(&mut rng)
        as usize;
    if n > s.len() {
        return None;
    }
    Some(SampleSet::from_pairs(
        s.x_labels.clone(),
        s.y_labels.clone(),
        s.pairs[..n].to_vec(),
        half,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::testutil::*;

    #[test]
    fn fixed_sampling_basics() {
        let j = bsc(0.25).compose(&Pmf::uniform(labels("x", 2)).unwrap()).unwrap();
        assert!(sample_fixed(&j, 0, 1).is_empty());

        let point = JointPmf::new(
            labels("x", 2),
            labels("y", 2),
            vec![vec![0.0, 1.0], vec![0.0, 0.0]],
        )
        .unwrap();
        let s = sample_fixed(&point, 5, 1);
        assert_eq!(s.pairs(), &[(0, 1); 5]);

        // LLN: empirical marginal of 1e5 draws within 0.01 of truth
        let s = sample_fixed(&j, 100_000, 7);
        let freq = s.count_x(0) as f64 / s.len() as f64;
        assert!((freq - 0.5).abs() < 0.01);
    }

    #[test]
    fn fixed_sampling_is_deterministic() {
        let j = bsc(0.25).compose(&Pmf::uniform(labels("x", 2)).unwrap()).unwrap();
        assert_eq!(sample_fixed(&j, 100, 3).pairs(), sample_fixed(&j, 100, 3).pairs());
    }

    #[test]
    fn poisson_sampling_tiny_rate_is_empty() {
        let j = bsc(0.25).compose(&Pmf::uniform(labels("x", 2)).unwrap()).unwrap();
        assert!(sample_poisson(&j, 1e-9, 5).is_empty());
    }

    #[test]
    fn poisson_sample_count_has_the_right_mean() {
        let j = bsc(0.25).compose(&Pmf::uniform(labels("x", 2)).unwrap()).unwrap();
        let runs = 10_000;
        let total: u64 = (0..runs).map(|i| sample_poisson(&j, 100.0, i).len() as u64).sum();
        let mean = total as f64 / runs as f64;
        assert!((mean - 100.0).abs() < 3.0, "mean {mean}");
    }

    #[test]
    fn poisson_cell_counts_have_poisson_variance() {
        let j = bsc(0.25).compose(&Pmf::uniform(labels("x", 2)).unwrap()).unwrap();
        let runs = 2000;
        let mut counts: Vec<Vec<f64>> = (0..4).map(|_| Vec::with_capacity(runs)).collect();
        for i in 0..runs {
            let s = sample_poisson(&j, 10_000.0, 1000 + i as u64);
            for x in 0..2 {
                for y in 0..2 {
                    counts[x * 2 + y].push(s.count_xy(x, y) as f64);
                }
            }
        }
        for cell in counts {
            let mean = cell.iter().sum::<f64>() / runs as f64;
            let var =
                cell.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (runs - 1) as f64;
            assert!((var / mean - 1.0).abs() < 0.1, "var/mean = {}", var / mean);
        }
    }

    #[test]
    fn estimator_degenerate_cases() {
        let cfg = EstimatorConfig::new(1.0, 0.1, 0.1).unwrap();
        // single-symbol X: leakage 0, estimator 0 for any sample
        let j1 = JointPmf::new(
            vec!["x".into()],
            labels("y", 2),
            vec![vec![0.25, 0.75]],
        )
        .unwrap();
        for seed in 0..20 {
            let s = sample_poisson(&j1, 200.0, seed);
            assert_eq!(estimate_ml_poisson(&s, &cfg, seed).nats(), 0.0);
        }
        // all samples on one (x, y) cell
        let s = SampleSet::from_pairs(labels("x", 2), labels("y", 2), vec![(0, 0); 50], 50.0);
        assert_eq!(estimate_ml_poisson(&s, &cfg, 9).nats(), 0.0);
    }

    #[test]
    fn estimator_is_nonnegative_and_finite() {
        let j = bsc(0.25).compose(&Pmf::uniform(labels("x", 2)).unwrap()).unwrap();
        let cfg = EstimatorConfig::new(0.5, 0.1, 0.1).unwrap();
        for seed in 0..50 {
            let s = sample_poisson(&j, 50.0, seed);
            let v = estimate_ml_poisson(&s, &cfg, seed ^ 1).nats();
            assert!(v.is_finite() && v >= 0.0);
        }
    }

    #[test]
    fn plugin_examples() {
        // exhaustive sample of the identity binary channel
        let s = SampleSet::from_pairs(labels("x", 2), labels("y", 2), vec![(0, 0), (1, 1)], 2.0);
        assert!((estimate_ml_plugin(&s).unwrap().nats() - 2.0f64.ln()).abs() < 1e-12);

        // a y column never sampled contributes nothing
        let s = SampleSet::from_pairs(
            labels("x", 2),
            labels("y", 3),
            vec![(0, 0), (1, 1), (0, 0)],
            3.0,
        );
        let v = estimate_ml_plugin(&s).unwrap().nats();
        assert!((v - 2.0f64.ln()).abs() < 1e-12);

        let empty = SampleSet::from_pairs(labels("x", 2), labels("y", 2), vec![], 0.0);
        assert!(matches!(estimate_ml_plugin(&empty), Err(EstimateError::EmptySample)));
    }

    #[test]
    fn plugin_converges_on_bsc() {
        let j = bsc(0.25).compose(&Pmf::uniform(labels("x", 2)).unwrap()).unwrap();
        let s = sample_fixed(&j, 100_000, 11);
        let v = estimate_ml_plugin(&s).unwrap().nats();
        assert!((v - 1.5f64.ln()).abs() < 0.02, "plugin {v}");
    }

    #[test]
    fn upper_bound_formula_values() {
        let n = sample_complexity_upper(2, 2, 0.5, 0.1, 0.1).unwrap();
        assert!((n - 1.93e4).abs() < 0.02e4, "n = {n}");
        // doubling |Y| strictly increases the bound
        assert!(sample_complexity_upper(2, 4, 0.5, 0.1, 0.1).unwrap() > n);
        // monotone directions
        assert!(sample_complexity_upper(2, 2, 0.9, 0.1, 0.1).unwrap() < n);
        assert!(sample_complexity_upper(2, 2, 0.5, 0.2, 0.1).unwrap() < n);
        assert!(sample_complexity_upper(2, 2, 0.5, 0.1, 0.05).unwrap() > n);
        // saturating-delta limit: denominator tends to theta (2 ln 2 - 1)
        let big = sample_complexity_upper(2, 2, 1.0, 50.0, 0.1).unwrap();
        let expect =
            8.0 * ((5.0f64 / 0.1).ln() + 2.0 * 2.0f64.ln()) / (2.0 * 2.0f64.ln() - 1.0);
        assert!((big - expect).abs() / expect < 1e-6);
    }

    #[test]
    fn lower_scaling_formula_values() {
        // |Y| = 100, theta = 0.1, delta = 0.05
        let v = sample_complexity_lower_scaling(100, 0.1, 0.05).unwrap();
        let expect = 0.1 * 100.0 * 20.0f64.ln().powi(2) / 100.0f64.ln();
        assert!((v - expect).abs() < 1e-12);
        assert!((v - 19.5).abs() < 0.1);
        // scaling is linear in theta
        let v2 = sample_complexity_lower_scaling(100, 0.2, 0.05).unwrap();
        assert!((v2 - 2.0 * v).abs() < 1e-12);
        assert!(matches!(
            sample_complexity_lower_scaling(100, 0.1, 0.5),
            Err(EstimateError::DeltaOutOfRange)
        ));
        assert!(matches!(
            sample_complexity_lower_scaling(100, 0.1, 0.005),
            Err(EstimateError::DeltaOutOfRange)
        ));
    }

    #[test]
    fn hard_instance_matches_h() {
        // uniform p_y: all rows equal, leakage 0
        let p = Pmf::uniform(labels("y", 4)).unwrap();
        let j = hard_instance(4, &p, 0.3).unwrap();
        assert!(maximal_leakage(&j).nats() < 1e-12);
        assert_eq!(hard_instance_value(&p), 0.0);

        // k=4, p_y = (1/2, 1/2, 0, 0): h = ln 1.5
        let p = Pmf::from_parts(labels("y", 4), vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        let j = hard_instance(4, &p, 0.3).unwrap();
        assert!((maximal_leakage(&j).nats() - 1.5f64.ln()).abs() < 1e-12);
        assert!((hard_instance_value(&p) - 1.5f64.ln()).abs() < 1e-12);

        // masses >= 1/k with support s: h = ln(2 - s/k)
        let p = Pmf::from_parts(
            labels("y", 8),
            vec![0.25, 0.25, 0.25, 0.25, 0.0, 0.0, 0.0, 0.0],
        )
        .unwrap();
        let j = hard_instance(8, &p, 0.2).unwrap();
        let expect = (2.0f64 - 4.0 / 8.0).ln();
        assert!((maximal_leakage(&j).nats() - expect).abs() < 1e-12);

        assert!(hard_instance(5, &p, 0.2).is_err());
        assert!(hard_instance(8, &p, 0.0).is_err());
    }

    #[test]
    fn experiment_extreme_deltas() {
        let j = bsc(0.25).compose(&Pmf::uniform(labels("x", 2)).unwrap()).unwrap();
        // absurdly loose accuracy: nothing fails
        let loose = EstimatorConfig::new(0.5, 100.0, 0.1).unwrap();
        let rep = run_error_rate_experiment(&j, &loose, 50.0, 50, 3, SampleMode::Poisson);
        assert_eq!(rep.failure_rate, 0.0);
        // one sample and a tight delta: essentially always fails
        let tight = EstimatorConfig::new(0.5, 0.01, 0.1).unwrap();
        let rep = run_error_rate_experiment(&j, &tight, 1.0, 100, 3, SampleMode::Poisson);
        assert!(rep.failure_rate > 0.9);
    }

    #[test]
    fn experiment_is_deterministic_and_order_independent() {
        let j = bsc(0.25).compose(&Pmf::uniform(labels("x", 2)).unwrap()).unwrap();
        let cfg = EstimatorConfig::new(0.5, 0.1, 0.1).unwrap();
        let a = run_error_rate_experiment(&j, &cfg, 500.0, 40, 11, SampleMode::Poisson);
        let b = run_error_rate_experiment_seq(&j, &cfg, 500.0, 40, 11, SampleMode::Poisson);
        assert_eq!(a, b);
    }

    #[test]
    fn fixed_mode_tracks_poisson_mode() {
        let j = bsc(0.25).compose(&Pmf::uniform(labels("x", 2)).unwrap()).unwrap();
        let cfg = EstimatorConfig::new(0.5, 0.1, 0.2).unwrap();
        let n1 = 2_000.0;
        let pois = run_error_rate_experiment(&j, &cfg, n1, 150, 21, SampleMode::Poisson);
        let fixed = run_error_rate_experiment(&j, &cfg, 2.0 * n1, 150, 22, SampleMode::Fixed);
        // fixed-length with 2 n1 samples is at most eps/5 worse, plus MC slack
        assert!(
            fixed.failure_rate <= pois.failure_rate + cfg.epsilon / 5.0 + 0.1,
            "fixed {} vs poisson {}",
            fixed.failure_rate,
            pois.failure_rate
        );
    }
}
