//! Brute-force operational verification of the leakage closed forms.
//!
//! The adversary's side is made explicit: a secret `U` is a column-
//! stochastic channel from X, guessing probabilities are computed by
//! enumeration, and the shattering construction witnesses the supremum.
//! Everything here is deliberately direct — these functions are the
//! independent oracle the closed forms in [`crate::metrics`] are tested
//! against.

use thiserror::Error;

use crate::dist::{DistError, JointPmf, Pmf};
use crate::metrics::LeakageValue;
use crate::SUPPORT_TOL;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("k = {k} exceeds the secret alphabet size {size}")]
    KTooLarge { k: usize, size: usize },
    #[error("gain function has zero prior expected gain for every guess")]
    ZeroGain,
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// A conditional distribution `P_{U|X}`, stored as a `|U| x |X|` matrix
/// whose columns sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxChannel {
    u_labels: Vec<String>,
    x_labels: Vec<String>,
    /// `p[u][x] = P(U = u | X = x)`.
    p: Vec<Vec<f64>>,
}

impl AuxChannel {
    pub fn new(
        u_labels: Vec<String>,
        x_labels: Vec<String>,
        p: Vec<Vec<f64>>,
    ) -> Result<Self, DistError> {
        for x in 0..x_labels.len() {
            let col: Vec<f64> = p.iter().map(|row| row[x]).collect();
            for (u, &v) in col.iter().enumerate() {
                if v < 0.0 || !v.is_finite() {
                    return Err(DistError::NegativeProbability { index: u, value: v });
                }
            }
            let mass: f64 = col.iter().sum();
            if (mass - 1.0).abs() > crate::MASS_TOL {
                return Err(DistError::NotNormalized { mass });
            }
        }
        Ok(AuxChannel { u_labels, x_labels, p })
    }

    /// `U = X` with certainty.
    pub fn identity(x_labels: Vec<String>) -> Self {
        let n = x_labels.len();
        let mut p = vec![vec![0.0; n]; n];
        for (u, row) in p.iter_mut().enumerate() {
            row[u] = 1.0;
        }
        AuxChannel { u_labels: x_labels.clone(), x_labels, p }
    }

    /// `U` uniform over `m` values, independent of X.
    pub fn independent_uniform(m: usize, x_labels: Vec<String>) -> Self {
        let p = vec![vec![1.0 / m as f64; x_labels.len()]; m];
        let u_labels = (0..m).map(|i| format!("u{i}")).collect();
        AuxChannel { u_labels, x_labels, p }
    }

    pub fn u_len(&self) -> usize {
        self.u_labels.len()
    }

    pub fn x_len(&self) -> usize {
        self.x_labels.len()
    }

    pub fn u_labels(&self) -> &[String] {
        &self.u_labels
    }

    pub fn prob(&self, u: usize, x: usize) -> f64 {
        self.p[u][x]
    }

    /// `P_U(u) = sum_x P_{U|X}(u|x) P_X(x)`.
    pub fn marginal_u(&self, px: &Pmf) -> Vec<f64> {
        self.p
            .iter()
            .map(|row| row.iter().zip(px.probs()).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `P_{UY}(u, y) = sum_x P_XY(x,y) P_{U|X}(u|x)` for every u, given y.
    fn joint_uy_column(&self, j: &JointPmf, y: usize) -> Vec<f64> {
        self.p
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(x, &puxv)| puxv * j.prob(x, y))
                    .sum()
            })
            .collect()
    }
}

/// Probability of guessing `U` correctly with no observation: `max_u P_U(u)`.
pub fn prior_guess_prob(aux: &AuxChannel, px: &Pmf) -> f64 {
    aux.marginal_u(px).into_iter().fold(0.0, f64::max)
}

/// Probability of guessing `U` correctly from `Y`: `sum_y max_u P_UY(u,y)`.
pub fn posterior_guess_prob(aux: &AuxChannel, j: &JointPmf) -> f64 {
    (0..j.y_len())
        .map(|y| aux.joint_uy_column(j, y).into_iter().fold(0.0, f64::max))
        .sum()
}

/// Leakage achieved by one particular secret `U`: the log-ratio of the two
/// guessing probabilities. Never exceeds the maximal leakage.
pub fn leakage_of_u(aux: &AuxChannel, j: &JointPmf) -> LeakageValue {
    let (px, _) = j.marginals();
    let prior = prior_guess_prob(aux, &px);
    let posterior = posterior_guess_prob(aux, j);
    LeakageValue::from_nats((posterior / prior).ln())
}

/// The shattering secret for a marginal `P_X`: splits each x into atoms of
/// mass `p* = min_{x in supp} P_X(x)`, with pairwise disjoint supports.
/// Achieves the maximal-leakage supremum for every channel out of X.
pub fn shattering_channel(px: &Pmf) -> AuxChannel {
    let n = px.len();
    let p_star = px
        .probs()
        .iter()
        .cloned()
        .filter(|&p| p >= SUPPORT_TOL)
        .fold(f64::INFINITY, f64::min);
    let mut u_labels = Vec::new();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); n]; // per-x atom masses
    for x in 0..n {
        let mass = px.prob(x);
        if mass < SUPPORT_TOL {
            // zero-probability symbol: one dedicated atom, never weighted
            u_labels.push(format!("{}#1", px.labels()[x]));
            cols[x].push(1.0);
            continue;
        }
        let k = mass / p_star;
        let atoms = k.ceil() as usize;
        for j in 1..=atoms {
            u_labels.push(format!("{}#{}", px.labels()[x], j));
            let v = if j < atoms {
                p_star / mass
            } else {
                1.0 - (atoms as f64 - 1.0) * p_star / mass
            };
            cols[x].push(v);
        }
    }
    let total_u = u_labels.len();
    let mut p = vec![vec![0.0; n]; total_u];
    let mut offset = 0;
    for (x, col) in cols.iter().enumerate() {
        for (j, &v) in col.iter().enumerate() {
            p[offset + j][x] = v;
        }
        offset += col.len();
    }
    AuxChannel { u_labels, x_labels: px.labels().to_vec(), p }
}

fn sum_of_k_largest(mut v: Vec<f64>, k: usize) -> f64 {
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    v.into_iter().take(k).sum()
}

/// Leakage achieved by `U` when the adversary is allowed `k` guesses.
pub fn k_guess_leakage_of_u(
    aux: &AuxChannel,
    j: &JointPmf,
    k: usize,
) -> Result<LeakageValue, OracleError> {
    if k == 0 || k > aux.u_len() {
        return Err(OracleError::KTooLarge { k, size: aux.u_len() });
    }
    let (px, _) = j.marginals();
    let prior = sum_of_k_largest(aux.marginal_u(&px), k);
    let posterior: f64 = (0..j.y_len())
        .map(|y| sum_of_k_largest(aux.joint_uy_column(j, y), k))
        .sum();
    Ok(LeakageValue::from_nats((posterior / prior).ln()))
}

/// The k-fold split of a secret: `P_{V|X}((u,i)|x) = P_{U|X}(u|x)/k`.
/// Its k-guess leakage equals the single-guess leakage of the input.
pub fn expand_for_k(aux: &AuxChannel, k: usize) -> AuxChannel {
    assert!(k >= 1, "expand_for_k needs k >= 1");
    let mut u_labels = Vec::with_capacity(aux.u_len() * k);
    let mut p = Vec::with_capacity(aux.u_len() * k);
    for (u, row) in aux.p.iter().enumerate() {
        for i in 1..=k {
            u_labels.push(format!("{}~{}", aux.u_labels[u], i));
            p.push(row.iter().map(|&v| v / k as f64).collect());
        }
    }
    AuxChannel { u_labels, x_labels: aux.x_labels.clone(), p }
}

/// Opportunistic leakage of a per-y family of secrets: the adversary picks
/// which `U_y` to guess after observing `Y = y`.
pub fn opportunistic_leakage(family: &[AuxChannel], j: &JointPmf) -> LeakageValue {
    assert_eq!(family.len(), j.y_len(), "one secret per output symbol");
    let (px, _) = j.marginals();
    let total: f64 = (0..j.y_len())
        .map(|y| {
            let aux = &family[y];
            let num = aux.joint_uy_column(j, y).into_iter().fold(0.0, f64::max);
            if num == 0.0 {
                return 0.0; // y outside supp(Y)
            }
            num / prior_guess_prob(aux, &px)
        })
        .sum();
    LeakageValue::from_nats(ln_ratio(total))
}

fn ln_ratio(total: f64) -> f64 {
    total.ln().max(0.0)
}

/// Nonnegative gain over guesses of the secret: `g(u, uhat)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainFunction {
    pub u_labels: Vec<String>,
    pub uhat_labels: Vec<String>,
    /// `g[u][uhat]`.
    pub g: Vec<Vec<f64>>,
}

impl GainFunction {
    /// The exact-guessing indicator gain on `U`.
    pub fn identity_indicator(u_labels: Vec<String>) -> Self {
        let n = u_labels.len();
        let mut g = vec![vec![0.0; n]; n];
        for (u, row) in g.iter_mut().enumerate() {
            row[u] = 1.0;
        }
        GainFunction { uhat_labels: u_labels.clone(), u_labels, g }
    }

    pub fn scaled(&self, c: f64) -> Self {
        GainFunction {
            u_labels: self.u_labels.clone(),
            uhat_labels: self.uhat_labels.clone(),
            g: self.g.iter().map(|row| row.iter().map(|&v| v * c).collect()).collect(),
        }
    }
}

/// Leakage achieved by a secret and a gain function: the log-ratio of the
/// best expected gain with and without the observation.
pub fn gain_leakage_of(
    aux: &AuxChannel,
    gain: &GainFunction,
    j: &JointPmf,
) -> Result<LeakageValue, OracleError> {
    let (px, _) = j.marginals();
    let pu = aux.marginal_u(&px);
    let n_uhat = gain.g[0].len();
    let best_gain = |weights: &[f64]| -> f64 {
        (0..n_uhat)
            .map(|uh| weights.iter().zip(&gain.g).map(|(&w, row)| w * row[uh]).sum())
            .fold(0.0f64, f64::max)
    };
    let prior = best_gain(&pu);
    if prior <= 0.0 {
        return Err(OracleError::ZeroGain);
    }
    let posterior: f64 = (0..j.y_len())
        .map(|y| best_gain(&aux.joint_uy_column(j, y)))
        .sum();
    Ok(LeakageValue::from_nats((posterior / prior).ln()))
}

/// MAP estimation of X from Y: the guess map and its success probability
/// `sum_y max_x P_XY(x,y)`.
pub fn map_estimate(j: &JointPmf) -> (Vec<usize>, f64) {
    let mut map = Vec::with_capacity(j.y_len());
    let mut success = 0.0;
    for y in 0..j.y_len() {
        let mut best = (0, f64::NEG_INFINITY);
        for x in 0..j.x_len() {
            if j.prob(x, y) > best.1 {
                best = (x, j.prob(x, y));
            }
        }
        map.push(best.0);
        success += best.1;
    }
    (map, success)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::testutil::*;
    use crate::metrics::maximal_leakage;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    const TOL: f64 = 1e-12;

    fn uniform2() -> Pmf {
        Pmf::uniform(labels("x", 2)).unwrap()
    }

    #[test]
    fn prior_examples() {
        let px4 = Pmf::uniform(labels("x", 4)).unwrap();
        assert!((prior_guess_prob(&AuxChannel::identity(labels("x", 4)), &px4) - 0.25).abs() < TOL);
        let indep = AuxChannel::independent_uniform(5, labels("x", 4));
        assert!((prior_guess_prob(&indep, &px4) - 0.2).abs() < TOL);
        let px = Pmf::from_parts(labels("x", 2), vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        let shat = shattering_channel(&px);
        assert!((prior_guess_prob(&shat, &px) - 1.0 / 3.0).abs() < TOL);
    }

    #[test]
    fn shattering_structure() {
        // equal masses: identity-shaped, one atom each
        let shat = shattering_channel(&uniform2());
        assert_eq!(shat.u_len(), 2);

        // px = (0.5, 0.3, 0.2): atoms (3, 2, 1) with the documented masses
        let px = Pmf::from_parts(labels("x", 3), vec![0.5, 0.3, 0.2]).unwrap();
        let shat = shattering_channel(&px);
        assert_eq!(shat.u_len(), 6);
        let pu = shat.marginal_u(&px);
        let expect = [0.2, 0.2, 0.1, 0.2, 0.1, 0.2];
        for (got, want) in pu.iter().zip(expect) {
            assert!((got - want).abs() < TOL, "{got} vs {want}");
        }
        // disjoint supports: each atom has exactly one positive column
        for row in &shat.p {
            assert_eq!(row.iter().filter(|&&v| v > 0.0).count(), 1);
        }
        let p_star = pu.iter().cloned().fold(0.0f64, f64::max);
        assert!((p_star - 0.2).abs() < TOL);
    }

    #[test]
    fn posterior_examples() {
        let ux = AuxChannel::identity(labels("x", 2));
        let id = crate::dist::Channel::identity(labels("x", 2)).unwrap();
        let j = id.compose(&uniform2()).unwrap();
        assert!((posterior_guess_prob(&ux, &j) - 1.0).abs() < TOL);

        let j = bsc(0.25).compose(&uniform2()).unwrap();
        assert!((posterior_guess_prob(&ux, &j) - 0.75).abs() < TOL);

        // Y independent of X: posterior equals prior
        let flat = crate::dist::Channel::new(
            labels("x", 2),
            labels("y", 2),
            vec![vec![0.5, 0.5]; 2],
        )
        .unwrap();
        let j = flat.compose(&uniform2()).unwrap();
        let (px, _) = j.marginals();
        assert!((posterior_guess_prob(&ux, &j) - prior_guess_prob(&ux, &px)).abs() < TOL);
    }

    #[test]
    fn leakage_of_u_examples() {
        let j = bsc(0.25).compose(&uniform2()).unwrap();
        let indep = AuxChannel::independent_uniform(3, labels("x", 2));
        assert!(leakage_of_u(&indep, &j).nats() < TOL);

        let ux = AuxChannel::identity(labels("x", 2));
        assert!((leakage_of_u(&ux, &j).nats() - 1.5f64.ln()).abs() < TOL);

        let shat = shattering_channel(&uniform2());
        assert!((leakage_of_u(&shat, &j).nats() - maximal_leakage(&j).nats()).abs() < TOL);
    }

    #[test]
    fn shattering_achieves_maximal_leakage_on_random_instances() {
        let mut rng = ChaCha12Rng::seed_from_u64(40);
        for _ in 0..60 {
            let nx = rng.gen_range(2..=5);
            let ny = rng.gen_range(2..=5);
            let px = random_pmf(&mut rng, "x", nx);
            let ch = random_channel(&mut rng, nx, ny);
            let j = ch.compose(&px).unwrap();
            let got = leakage_of_u(&shattering_channel(&px), &j).nats();
            assert!((got - maximal_leakage(&j).nats()).abs() < 1e-9);
        }
    }

    fn random_aux(rng: &mut ChaCha12Rng, nu: usize, nx: usize) -> AuxChannel {
        let mut p = vec![vec![0.0; nx]; nu];
        for x in 0..nx {
            let col = random_simplex(rng, nu);
            for (u, &v) in col.iter().enumerate() {
                p[u][x] = v;
            }
        }
        AuxChannel::new(labels("u", nu), labels("x", nx), p).unwrap()
    }

    #[test]
    fn every_u_is_dominated() {
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        for _ in 0..100 {
            let j = random_joint(&mut rng, 3, 3);
            let nu = rng.gen_range(1..=8);
            let aux = random_aux(&mut rng, nu, 3);
            assert!(leakage_of_u(&aux, &j).nats() <= maximal_leakage(&j).nats() + 1e-12);
        }
    }

    #[test]
    fn k_guess_examples() {
        let j = bsc(0.25).compose(&uniform2()).unwrap();
        let ux = AuxChannel::identity(labels("x", 2));
        // k = |U|: both probabilities are 1
        assert_eq!(k_guess_leakage_of_u(&ux, &j, 2).unwrap().nats(), 0.0);
        // k = 1 is definitional
        assert!(
            (k_guess_leakage_of_u(&ux, &j, 1).unwrap().nats() - leakage_of_u(&ux, &j).nats())
                .abs()
                < TOL
        );
        assert!(matches!(
            k_guess_leakage_of_u(&ux, &j, 3),
            Err(OracleError::KTooLarge { .. })
        ));
    }

    #[test]
    fn expand_for_k_preserves_leakage() {
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for k in 1..=3usize {
            let j = random_joint(&mut rng, 3, 4);
            let aux = random_aux(&mut rng, 4, 3);
            let expanded = expand_for_k(&aux, k);
            assert_eq!(expanded.u_len(), 4 * k);
            let got = k_guess_leakage_of_u(&expanded, &j, k).unwrap().nats();
            let want = leakage_of_u(&aux, &j).nats();
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn k_guess_of_expanded_shattering_attains_maximum() {
        let j = bsc(0.25).compose(&uniform2()).unwrap();
        let shat = shattering_channel(&uniform2());
        let v = expand_for_k(&shat, 3);
        let got = k_guess_leakage_of_u(&v, &j, 3).unwrap().nats();
        assert!((got - 1.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn k_guess_sandwich_on_random_instances() {
        // k-guess leakage never exceeds L, and the expanded shattering
        // secret attains it
        let mut rng = ChaCha12Rng::seed_from_u64(48);
        for _ in 0..40 {
            let nx = rng.gen_range(2..=4);
            let ny = rng.gen_range(2..=4);
            let px = random_pmf(&mut rng, "x", nx);
            let j = random_channel(&mut rng, nx, ny).compose(&px).unwrap();
            let truth = maximal_leakage(&j).nats();
            let k = rng.gen_range(1..=3);
            let nu = rng.gen_range(1..=6);
            let aux = random_aux(&mut rng, nu, nx);
            if k <= aux.u_len() {
                let v = k_guess_leakage_of_u(&aux, &j, k).unwrap().nats();
                assert!(v <= truth + 1e-12);
            }
            let witness = expand_for_k(&shattering_channel(&px), k);
            let attained = k_guess_leakage_of_u(&witness, &j, k).unwrap().nats();
            assert!((attained - truth).abs() < 1e-9);
        }
    }

    #[test]
    fn opportunistic_examples() {
        let j = bsc(0.25).compose(&uniform2()).unwrap();

        let indep = AuxChannel::independent_uniform(4, labels("x", 2));
        let fam = vec![indep.clone(), indep];
        assert!(opportunistic_leakage(&fam, &j).nats() < TOL);

        let shat = shattering_channel(&uniform2());
        let fam = vec![shat.clone(), shat];
        assert!(
            (opportunistic_leakage(&fam, &j).nats() - maximal_leakage(&j).nats()).abs() < TOL
        );

        let ux = AuxChannel::identity(labels("x", 2));
        let fam = vec![ux.clone(), ux];
        assert!((opportunistic_leakage(&fam, &j).nats() - 1.5f64.ln()).abs() < TOL);
    }

    #[test]
    fn opportunistic_never_exceeds_maximal() {
        let mut rng = ChaCha12Rng::seed_from_u64(43);
        for _ in 0..50 {
            let j = random_joint(&mut rng, 3, 3);
            let fam: Vec<AuxChannel> = (0..3)
                .map(|_| {
                    let nu = rng.gen_range(1..=6);
                    random_aux(&mut rng, nu, 3)
                })
                .collect();
            assert!(
                opportunistic_leakage(&fam, &j).nats() <= maximal_leakage(&j).nats() + 1e-12
            );
        }
    }

    #[test]
    fn gain_examples() {
        let j = bsc(0.25).compose(&uniform2()).unwrap();
        let ux = AuxChannel::identity(labels("x", 2));
        let g = GainFunction::identity_indicator(labels("x", 2));
        let base = gain_leakage_of(&ux, &g, &j).unwrap().nats();
        assert!((base - leakage_of_u(&ux, &j).nats()).abs() < TOL);

        let scaled = gain_leakage_of(&ux, &g.scaled(7.0), &j).unwrap().nats();
        assert_eq!(base, scaled);

        let asym = GainFunction {
            u_labels: labels("x", 2),
            uhat_labels: labels("x", 2),
            g: vec![vec![2.0, 0.0], vec![0.0, 1.0]],
        };
        let v = gain_leakage_of(&ux, &asym, &j).unwrap().nats();
        assert!(v <= 1.5f64.ln() + 1e-12);

        let zero = GainFunction {
            u_labels: labels("x", 2),
            uhat_labels: vec!["a".into()],
            g: vec![vec![0.0], vec![0.0]],
        };
        assert!(matches!(gain_leakage_of(&ux, &zero, &j), Err(OracleError::ZeroGain)));
    }

    #[test]
    fn gain_never_exceeds_maximal() {
        let mut rng = ChaCha12Rng::seed_from_u64(44);
        for _ in 0..50 {
            let j = random_joint(&mut rng, 3, 3);
            let aux = random_aux(&mut rng, 4, 3);
            let nh = rng.gen_range(1..=4);
            let g = GainFunction {
                u_labels: labels("u", 4),
                uhat_labels: labels("h", nh),
                g: (0..4).map(|_| (0..nh).map(|_| rng.gen::<f64>() * 3.0).collect()).collect(),
            };
            if let Ok(v) = gain_leakage_of(&aux, &g, &j) {
                assert!(v.nats() <= maximal_leakage(&j).nats() + 1e-12);
            }
        }
    }

    #[test]
    fn map_estimate_examples() {
        let id = crate::dist::Channel::identity(labels("x", 2)).unwrap();
        let j = id.compose(&uniform2()).unwrap();
        assert!((map_estimate(&j).1 - 1.0).abs() < TOL);

        let j =
            JointPmf::new(labels("x", 2), labels("y", 2), vec![vec![0.25; 2]; 2]).unwrap();
        assert!((map_estimate(&j).1 - 0.5).abs() < TOL);

        let j = bsc(0.25).compose(&uniform2()).unwrap();
        let (map, p) = map_estimate(&j);
        assert_eq!(map, vec![0, 1]);
        assert!((p - 0.75).abs() < TOL);
    }

    #[test]
    fn map_estimate_beats_exhaustive_alternatives() {
        let mut rng = ChaCha12Rng::seed_from_u64(45);
        for _ in 0..20 {
            let j = random_joint(&mut rng, 3, 3);
            let (_, best) = map_estimate(&j);
            // all 27 deterministic maps y -> x
            for code in 0..27 {
                let mut c = code;
                let mut p = 0.0;
                for y in 0..3 {
                    p += j.prob(c % 3, y);
                    c /= 3;
                }
                assert!(p <= best + TOL);
            }
        }
    }

    #[test]
    fn additive_guessing_bound_holds() {
        let mut rng = ChaCha12Rng::seed_from_u64(46);
        for _ in 0..100 {
            let j = random_joint(&mut rng, 3, 3);
            let nu = rng.gen_range(1..=6);
            let aux = random_aux(&mut rng, nu, 3);
            let (px, _) = j.marginals();
            let gain = posterior_guess_prob(&aux, &j) - prior_guess_prob(&aux, &px);
            let bound = 1.0 - (-maximal_leakage(&j).nats()).exp();
            assert!(gain <= bound + 1e-12);
        }
    }

    #[test]
    fn per_y_ratio_proposition_bound() {
        let mut rng = ChaCha12Rng::seed_from_u64(47);
        for _ in 0..50 {
            let j = random_joint(&mut rng, 3, 3);
            let aux = random_aux(&mut rng, 4, 3);
            let (px, py) = j.marginals();
            let prior = prior_guess_prob(&aux, &px);
            for y in 0..3 {
                if py.prob(y) < 1e-12 {
                    continue;
                }
                let lhs =
                    aux.joint_uy_column(&j, y).into_iter().fold(0.0, f64::max) / py.prob(y)
                        / prior;
                let rhs = (0..3)
                    .filter(|&x| j.prob(x, y) > 0.0)
                    .map(|x| j.prob(x, y) / px.prob(x) / py.prob(y))
                    .fold(0.0f64, f64::max);
                assert!(lhs <= rhs + 1e-12);
            }
        }
    }
}
