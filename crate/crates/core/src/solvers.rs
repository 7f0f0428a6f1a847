//! Iterative solvers: Blahut-Arimoto for channel capacity and for the
//! rate-distortion function.
//!
//! Both solvers carry bracket certificates. Capacity is sandwiched by the
//! classical bounds `ln Z <= C <= max_x D(W(.|x) || q)`; the rate-distortion
//! value is sandwiched between the achievable mutual information of the
//! current test channel and the Lagrangian dual bound
//! `-beta D - sum_x q_x ln sum_y t_y exp(-beta d(x,y))`, which is valid for
//! every `beta >= 0` and output distribution `t`.

use thiserror::Error;

use crate::dist::Pmf;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("iteration limit hit; best value {best} with bracket width {gap}")]
    MaxIterExceeded { best: f64, gap: f64 },
    #[error("distortion level {level} is below the minimum achievable {min}")]
    InfeasibleDistortion { level: f64, min: f64 },
}

/// A converged value together with its certificate bracket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracketed {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Bracketed {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Channel capacity of a row-stochastic matrix, in nats.
pub fn blahut_arimoto_capacity(
    w: &[Vec<f64>],
    tol: f64,
    max_iter: usize,
) -> Result<Bracketed, SolverError> {
    assert!(tol > 0.0, "capacity tolerance must be positive");
    let nx = w.len();
    let ny = w[0].len();
    let mut r = vec![1.0 / nx as f64; nx];
    let mut best = Bracketed { value: 0.0, lower: 0.0, upper: f64::INFINITY };
    for _ in 0..max_iter {
        let mut q = vec![0.0; ny];
        for (x, row) in w.iter().enumerate() {
            for (y, &v) in row.iter().enumerate() {
                q[y] += r[x] * v;
            }
        }
        // d_x = D(W(.|x) || q); q[y] > 0 wherever some active row has mass
        let d: Vec<f64> = w
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&q)
                    .filter(|(&v, _)| v > 0.0)
                    .map(|(&v, &qy)| v * (v / qy).ln())
                    .sum()
            })
            .collect();
        let z: f64 = r.iter().zip(&d).map(|(&rx, &dx)| rx * dx.exp()).sum();
        let lower = z.ln();
        let upper = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        best = Bracketed { value: 0.5 * (lower + upper.min(best.upper)), lower, upper };
        if upper - lower <= tol {
            return Ok(Bracketed { value: 0.5 * (lower + upper), lower, upper });
        }
        for (rx, dx) in r.iter_mut().zip(&d) {
            *rx = *rx * dx.exp() / z;
        }
    }
    Err(SolverError::MaxIterExceeded { best: best.value, gap: best.gap() })
}

/// Rate-distortion function `R(Q, D)` in nats for a finite source `q` and
/// distortion matrix `d`, at expected-distortion level `level`.
///
/// Solved by Blahut-Arimoto over the Lagrange parameter with bisection on
/// the achieved distortion; the returned bracket has width at most `tol`.
pub fn rate_distortion(
    q: &Pmf,
    d: &[Vec<f64>],
    level: f64,
    tol: f64,
) -> Result<Bracketed, SolverError> {
    assert!(tol > 0.0, "rate-distortion tolerance must be positive");
    let probs = q.probs();
    let ny = d[0].len();

    let d_min: f64 = probs
        .iter()
        .zip(d)
        .map(|(&px, row)| px * row.iter().cloned().fold(f64::INFINITY, f64::min))
        .sum();
    if level < d_min - 1e-12 {
        return Err(SolverError::InfeasibleDistortion { level, min: d_min });
    }
    // Zero rate is achievable once a constant output meets the level.
    let d_zero_rate = (0..ny)
        .map(|y| probs.iter().zip(d).map(|(&px, row)| px * row[y]).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    if level >= d_zero_rate - 1e-12 {
        return Ok(Bracketed { value: 0.0, lower: 0.0, upper: 0.0 });
    }

    let eval = |beta: f64| -> (f64, f64, f64) { ba_rd_at_beta(probs, d, beta, tol) };

    // Bracket the slope: distortion decreases as beta grows.
    let mut beta_lo = 1e-6;
    let mut beta_hi = 1.0;
    while eval(beta_hi).1 > level && beta_hi < 1e9 {
        beta_hi *= 2.0;
    }
    let (mut rate, _, mut dual) = eval(beta_hi);
    for _ in 0..300 {
        let mid = 0.5 * (beta_lo + beta_hi);
        let (r_m, d_m, dual_m) = eval(mid);
        if d_m > level {
            beta_lo = mid;
        } else {
            beta_hi = mid;
            rate = r_m;
            dual = dual_m;
        }
        if beta_hi - beta_lo <= 1e-15 * (1.0 + beta_hi) {
            break;
        }
    }
    // The final test channel achieves distortion dist <= level, so its
    // rate upper-bounds R(level); the Lagrangian intercept at beta_hi
    // lower-bounds it.
    let upper = rate.max(0.0);
    let lower = (dual - beta_hi * level).clamp(0.0, upper);
    let value = 0.5 * (lower + upper);
    if upper - lower > tol.max(1e-9) {
        return Err(SolverError::MaxIterExceeded { best: value, gap: upper - lower });
    }
    Ok(Bracketed { value, lower, upper })
}

/// One Blahut-Arimoto solve at fixed Lagrange parameter `beta`.
/// Returns `(rate, distortion, dual_intercept)` where `dual_intercept` is
/// `-sum_x q_x ln sum_y t_y exp(-beta d(x,y))`.
fn ba_rd_at_beta(probs: &[f64], d: &[Vec<f64>], beta: f64, tol: f64) -> (f64, f64, f64) {
    let nx = probs.len();
    let ny = d[0].len();
    let a: Vec<Vec<f64>> =
        d.iter().map(|row| row.iter().map(|&v| (-beta * v).exp()).collect()).collect();
    let mut t = vec![1.0 / ny as f64; ny];
    let mut prev_obj = f64::INFINITY;
    for _ in 0..20_000 {
        // denominators c_x = sum_y t_y a_xy
        let c: Vec<f64> = a.iter().map(|row| row.iter().zip(&t).map(|(av, tv)| av * tv).sum()).collect();
        let mut t_next = vec![0.0; ny];
        for x in 0..nx {
            let scale = probs[x] / c[x];
            for y in 0..ny {
                t_next[y] += scale * t[y] * a[x][y];
            }
        }
        let obj: f64 = c.iter().zip(probs).map(|(&cx, &px)| -px * cx.ln()).sum();
        t = t_next;
        if (prev_obj - obj).abs() <= 1e-3 * tol * (1.0 + obj.abs()) {
            prev_obj = obj;
            break;
        }
        prev_obj = obj;
    }
    // Final test channel and its achieved (rate, distortion).
    let c: Vec<f64> = a.iter().map(|row| row.iter().zip(&t).map(|(av, tv)| av * tv).sum()).collect();
    let mut rate = 0.0;
    let mut dist = 0.0;
    for x in 0..nx {
        for y in 0..ny {
            let w = t[y] * a[x][y] / c[x];
            if w > 0.0 {
                rate += probs[x] * w * (w / t[y]).ln();
                dist += probs[x] * w * d[x][y];
            }
        }
    }
    (rate.max(0.0), dist, prev_obj)
}
