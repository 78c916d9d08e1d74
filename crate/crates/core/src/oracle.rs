//! Exact capacity of the scalar AWGN channel followed by a `b`-level
//! quantizer, used to judge how much the AQNM rate gives away.
//!
//! The channel is `y = Q(√snr · x + n)` with `n ~ N(0, 1)`. The quantizer is
//! the Lloyd-Max design scaled to the standard deviation of its input,
//! `√(1 + snr)` for a unit-power input. Capacity is found by Blahut-Arimoto
//! over a discretized input alphabet, with the average power constraint
//! `E[x²] ≤ 1` enforced at every iterate. Every result carries a certified
//! duality gap; when Blahut-Arimoto stalls, a Newton method on the smoothed
//! dual closes it.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quantizer::QuantizerSpec;
use crate::rates::aqnm_spectral_efficiency;
use crate::scalar::{db_to_linear, norm_interval, Real};

/// Grid half-width of the input support, in amplitude units.
pub const SUPPORT_HALF_WIDTH: f64 = 4.0;
/// Number of points of the coarse input grid.
pub const SUPPORT_POINTS: usize = 129;

/// Blahut-Arimoto steps before switching to the dual Newton polish.
const BA_ITER: usize = 2_000;
const POLISH_STAGES: usize = 40;
const NEWTON_ITER: usize = 100;
/// Default duality gap, bits, at which the capacity solver stops.
pub const DEFAULT_TOL: f64 = 1e-6;

/// Discrete memoryless channel from a finite input alphabet to `bins` outputs.
#[derive(Debug, Clone)]
pub struct DiscreteChannel<T> {
    pub inputs: Vec<T>,
    /// `transition[i][j] = P(bin j | inputs[i])`.
    pub transition: Vec<Vec<T>>,
    pub bins: usize,
}

/// Builds the quantized AWGN channel for `support` at linear SNR `snr`.
pub fn build_channel<T: Real>(spec: &QuantizerSpec<T>, snr: T, support: &[T]) -> Result<DiscreteChannel<T>> {
    if support.is_empty() {
        return Err(Error::InvalidArgument("input support is empty".into()));
    }
    if !(snr > T::zero()) {
        return Err(Error::InvalidArgument("snr must be positive".into()));
    }
    let sigma = (T::one() + snr).sqrt();
    let gain = snr.sqrt();
    let mut edges = Vec::with_capacity(spec.bins + 1);
    edges.push(T::neg_infinity());
    edges.extend(spec.thresholds.iter().map(|&t| t * sigma));
    edges.push(T::infinity());

    let transition = support
        .iter()
        .map(|&x| {
            let mean = gain * x;
            edges
                .windows(2)
                .map(|w| norm_interval(w[0] - mean, w[1] - mean))
                .collect()
        })
        .collect();
    Ok(DiscreteChannel {
        inputs: support.to_vec(),
        transition,
        bins: spec.bins,
    })
}

/// Converged Blahut-Arimoto solution.
#[derive(Debug, Clone)]
pub struct CapacityResult<T> {
    /// Mutual information in bits per channel use.
    pub bits: T,
    /// Optimal input distribution over `DiscreteChannel::inputs`.
    pub input_pmf: Vec<T>,
    pub inputs: Vec<T>,
    /// Upper minus lower capacity bound at termination, bits.
    pub gap: T,
    /// Lagrange multiplier on `E[x²]`, zero if the power constraint is slack.
    pub multiplier: T,
    pub iterations: usize,
}

impl<T: Real> CapacityResult<T> {
    pub fn mean_power(&self) -> T {
        self.inputs
            .iter()
            .zip(&self.input_pmf)
            .map(|(x, p)| *p * *x * *x)
            .sum()
    }

    /// Groups contiguous support points carrying mass above `floor` into
    /// atoms, returned as `(location, mass)` sorted by decreasing mass.
    pub fn atoms(&self, floor: T) -> Vec<(T, T)> {
        let mut out = Vec::new();
        let mut cur: Option<(T, T)> = None; // (Σ p x, Σ p)
        for (x, p) in self.inputs.iter().zip(&self.input_pmf) {
            if *p > floor {
                let (sx, sp) = cur.unwrap_or((T::zero(), T::zero()));
                cur = Some((sx + *p * *x, sp + *p));
            } else if let Some((sx, sp)) = cur.take() {
                out.push((sx / sp, sp));
            }
        }
        if let Some((sx, sp)) = cur {
            out.push((sx / sp, sp));
        }
        out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
        out
    }
}

/// Precomputed quantities shared across Blahut-Arimoto runs on one channel.
struct Kernel<T> {
    trans: Vec<Vec<T>>,
    log_trans: Vec<Vec<T>>,
    cost: Vec<T>,
}

impl<T: Real> Kernel<T> {
    fn new(ch: &DiscreteChannel<T>) -> Self {
        let log_trans = ch
            .transition
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&w| if w > T::zero() { w.ln() } else { T::zero() })
                    .collect()
            })
            .collect();
        Self {
            trans: ch.transition.clone(),
            log_trans,
            cost: ch.inputs.iter().map(|&x| x * x).collect(),
        }
    }

    /// D(W_i ‖ q) in nats for every input.
    fn divergences(&self, q: &[T]) -> Vec<T> {
        let log_q: Vec<T> = q
            .iter()
            .map(|&v| if v > T::zero() { v.ln() } else { T::neg_infinity() })
            .collect();
        self.trans
            .iter()
            .zip(&self.log_trans)
            .map(|(row, lrow)| {
                row.iter()
                    .zip(lrow)
                    .zip(&log_q)
                    .filter(|((w, _), _)| **w > T::zero())
                    .map(|((w, lw), lq)| *w * (*lw - *lq))
                    .sum()
            })
            .collect()
    }

    fn output(&self, p: &[T], bins: usize) -> Vec<T> {
        let mut q = vec![T::zero(); bins];
        for (pi, row) in p.iter().zip(&self.trans) {
            for (qj, w) in q.iter_mut().zip(row) {
                *qj = *qj + *pi * *w;
            }
        }
        q
    }

    /// Blahut-Arimoto under `E[cost] ≤ power` (`None` for no constraint),
    /// warm-started from `p`. Returns (mutual information in nats, gap in
    /// nats, multiplier, iterations).
    ///
    /// Each step is `p ← p·exp(mu·D − t·cost)` with `t ≥ 0` solved so the
    /// new input meets the power constraint. The exponent `mu ≥ 1` grows
    /// while mutual information keeps increasing and is cut back after an
    /// overshoot. If the gap is still open after [`BA_ITER`] steps, the
    /// smoothed dual is polished by Newton's method (see [`Kernel::polish`]).
    fn run(&self, p: &mut [T], power: Option<T>, tol_nats: T, bins: usize) -> Result<(T, T, T, usize)> {
        let floor = T::lit(1e-12) / T::lit(p.len() as f64);
        let mut total = T::zero();
        for pi in p.iter_mut() {
            *pi = pi.max(floor);
            total = total + *pi;
        }
        for pi in p.iter_mut() {
            *pi = *pi / total;
        }

        let mut best = Bounds {
            lower: T::neg_infinity(),
            upper: T::infinity(),
            p: p.to_vec(),
            s: T::zero(),
        };
        let mut mu = T::one();
        let mut t = T::zero();
        let mut s = T::zero();
        let mut prev: Option<(Vec<T>, T)> = None;
        let mut stepped = T::one();
        let mut log_w = vec![T::zero(); p.len()];
        for it in 0..BA_ITER {
            let q = self.output(p, bins);
            let d = self.divergences(&q);
            let mi: T = p.iter().zip(&d).map(|(pi, di)| *pi * *di).sum();
            let feasible = power.is_none_or(|pw| self.mean_cost(p) <= pw * (T::one() + T::lit(1e-9)));
            if let Some((prev_p, prev_mi)) = &prev {
                if feasible && mi < *prev_mi && stepped > T::one() {
                    p.copy_from_slice(prev_p);
                    mu = (stepped / T::lit(4.0)).max(T::one());
                    stepped = T::one();
                    prev = None;
                    continue;
                }
            }
            if feasible {
                // Dual bound: C ≤ max_i (D_i − s·c_i) + s·P for any s ≥ 0.
                let mut upper = self.dual_bound(&d, power, s);
                let mut s_upper = s;
                if upper - mi < T::lit(64.0) * tol_nats || it % 16 == 0 {
                    if let Some(pw) = power {
                        let (u, su) = self.tightest_dual_bound(&d, pw, s);
                        if u < upper {
                            upper = u;
                            s_upper = su;
                        }
                    }
                }
                best.offer(p, mi, upper, s_upper);
                if best.gap() < tol_nats {
                    p.copy_from_slice(&best.p);
                    return Ok((best.lower, best.gap(), best.s, it));
                }
                prev = Some((p.to_vec(), mi));
            }
            for ((lw, pi), di) in log_w.iter_mut().zip(p.iter()).zip(&d) {
                *lw = pi.ln() + mu * *di;
            }
            t = match power {
                Some(pw) => self.solve_tilt(&log_w, pw, t),
                None => T::zero(),
            };
            s = t / mu;
            let top = log_w
                .iter()
                .zip(&self.cost)
                .fold(T::neg_infinity(), |m, (lw, c)| m.max(*lw - t * *c));
            let mut total = T::zero();
            for ((pi, lw), c) in p.iter_mut().zip(&log_w).zip(&self.cost) {
                *pi = (*lw - t * *c - top).exp();
                total = total + *pi;
            }
            for pi in p.iter_mut() {
                *pi = *pi / total;
            }
            stepped = mu;
            mu = (mu * T::lit(1.25)).min(T::lit(1e4));
        }
        let q = self.output(&best.p, bins);
        let result = self.polish(&q, power, tol_nats, best);
        match result {
            Ok((b, stages)) => {
                p.copy_from_slice(&b.p);
                Ok((b.lower, b.gap(), b.s, BA_ITER + stages))
            }
            Err(b) => Err(Error::NoConvergence {
                what: "capacity solver",
                iterations: BA_ITER + POLISH_STAGES,
                residual: (b.gap() / T::LN_2()).to_f64_lossy(),
                last: b.p.iter().map(|v| v.to_f64_lossy()).collect(),
            }),
        }
    }

    /// Mutual information of `p` (nats) and the matching divergences.
    fn mutual_information(&self, p: &[T]) -> (T, Vec<T>) {
        let q = self.output(p, self.trans.first().map_or(0, Vec::len));
        let d = self.divergences(&q);
        (p.iter().zip(&d).map(|(a, b)| *a * *b).sum(), d)
    }

    /// Newton's method on the smoothed dual
    ///
    /// `F_τ(z, s) = LSE(z) + s·P + τ·LSE((a − W z − s·c)/τ)`,
    ///
    /// where `q = softmax(z)` is the output law, `a_i = Σ_j W_ij ln W_ij` and
    /// `τ` shrinks tenfold per stage. `max_i(D(W_i‖q) − s c_i) + s·P` bounds
    /// capacity from above for every `(z, s)`, and the softmax weights of the
    /// inner term, tilted onto the power constraint if needed, give a
    /// feasible input for the lower bound. The problem has `bins + 1`
    /// unknowns however dense the input grid is, which is what makes it fast
    /// where Blahut-Arimoto crawls across near-tied neighbouring inputs.
    fn polish(&self, q0: &[T], power: Option<T>, tol_nats: T, mut best: Bounds<T>) -> std::result::Result<(Bounds<T>, usize), Bounds<T>> {
        let m = q0.len();
        let n = self.trans.len();
        let a: Vec<T> = self
            .trans
            .iter()
            .zip(&self.log_trans)
            .map(|(row, lrow)| row.iter().zip(lrow).map(|(w, lw)| *w * *lw).sum())
            .collect();
        let tiny = T::lit(1e-300);
        let z0 = q0[0].max(tiny).ln();
        // Unknowns: z_1..z_{m−1} (z_0 pinned to 0), then s if constrained.
        let nz = m - 1;
        let dim = nz + usize::from(power.is_some());
        let mut x: Vec<T> = q0[1..].iter().map(|v| v.max(tiny).ln() - z0).collect();
        if power.is_some() {
            x.push(best.s.max(T::zero()));
        }
        let ln_n = T::lit((n as f64).ln().max(1.0));
        let mut tau = T::lit(0.1) / ln_n;
        let mut stages = 0;

        let split = |x: &[T]| -> (Vec<T>, T) {
            let mut z = vec![T::zero(); m];
            z[1..].copy_from_slice(&x[..nz]);
            (z, if power.is_some() { x[nz] } else { T::zero() })
        };
        let lse = |v: &[T]| -> (T, Vec<T>) {
            let top = v.iter().fold(T::neg_infinity(), |acc, &e| acc.max(e));
            let w: Vec<T> = v.iter().map(|&e| (e - top).exp()).collect();
            let z: T = w.iter().copied().sum();
            (top + z.ln(), w.into_iter().map(|e| e / z).collect())
        };
        let inner = |z: &[T], s: T, tau: T| -> Vec<T> {
            (0..n)
                .map(|i| {
                    let wz: T = self.trans[i].iter().zip(z).map(|(w, zj)| *w * *zj).sum();
                    (a[i] - wz - s * self.cost[i]) / tau
                })
                .collect()
        };
        let objective = |x: &[T], tau: T| -> T {
            let (z, s) = split(x);
            let pw = power.unwrap_or(T::zero());
            lse(&z).0 + s * pw + tau * lse(&inner(&z, s, tau)).0
        };

        while stages < POLISH_STAGES {
            stages += 1;
            for _ in 0..NEWTON_ITER {
                let (z, s) = split(&x);
                let (_, q) = lse(&z);
                let (_, pi) = lse(&inner(&z, s, tau));
                // Features of input i: W_i1..W_i(m−1) and c_i.
                let feat = |i: usize, k: usize| if k < nz { self.trans[i][k + 1] } else { self.cost[i] };
                let mean: Vec<T> = (0..dim).map(|k| (0..n).map(|i| pi[i] * feat(i, k)).sum()).collect();
                let mut g: Vec<T> = (0..nz).map(|k| q[k + 1] - mean[k]).collect();
                if let Some(pw) = power {
                    g.push(pw - mean[nz]);
                }
                let mut h = vec![T::zero(); dim * dim];
                for i in 0..n {
                    if pi[i] < T::lit(1e-300) {
                        continue;
                    }
                    for r in 0..dim {
                        let fr = feat(i, r) - mean[r];
                        for c in r..dim {
                            h[r * dim + c] = h[r * dim + c] + pi[i] * fr * (feat(i, c) - mean[c]);
                        }
                    }
                }
                for r in 0..dim {
                    for c in r..dim {
                        let mut v = h[r * dim + c] / tau;
                        if r < nz && c < nz {
                            v = v - q[r + 1] * q[c + 1];
                            if r == c {
                                v = v + q[r + 1];
                            }
                        }
                        h[r * dim + c] = v;
                        h[c * dim + r] = v;
                    }
                }
                let Some(step) = solve_spd(&h, &g, dim) else { break };
                let decrement: T = g.iter().zip(&step).map(|(a, b)| *a * *b).sum();
                if !(decrement > tau * T::lit(1e-10)) {
                    break;
                }
                // Projected backtracking (s stays nonnegative).
                let f0 = objective(&x, tau);
                let mut alpha = T::one();
                let mut moved = false;
                for _ in 0..60 {
                    let mut cand: Vec<T> = x.iter().zip(&step).map(|(xi, di)| *xi - alpha * *di).collect();
                    if power.is_some() {
                        cand[nz] = cand[nz].max(T::zero());
                    }
                    if objective(&cand, tau) <= f0 - T::lit(1e-4) * alpha * decrement {
                        x = cand;
                        moved = true;
                        break;
                    }
                    alpha = alpha / T::lit(2.0);
                }
                if !moved {
                    break;
                }
            }

            // Certificate from the same divergences Blahut-Arimoto uses.
            let (z, s) = split(&x);
            let (_, q) = lse(&z);
            let d = self.divergences(&q);
            let upper = self.dual_bound(&d, power, s);
            let (_, pi) = lse(&inner(&z, s, tau));
            let candidate = match power {
                Some(pw) if self.mean_cost(&pi) > pw => {
                    let log_w: Vec<T> = pi.iter().map(|v| v.max(tiny).ln()).collect();
                    let t = self.solve_tilt(&log_w, pw, T::zero());
                    let top = log_w
                        .iter()
                        .zip(&self.cost)
                        .fold(T::neg_infinity(), |acc, (lw, c)| acc.max(*lw - t * *c));
                    let w: Vec<T> = log_w.iter().zip(&self.cost).map(|(lw, c)| (*lw - t * *c - top).exp()).collect();
                    let tot: T = w.iter().copied().sum();
                    w.into_iter().map(|v| v / tot).collect()
                }
                _ => pi,
            };
            let (mi, _) = self.mutual_information(&candidate);
            best.offer(&candidate, mi, upper, s);
            if best.gap() < tol_nats {
                return Ok((best, stages));
            }
            tau = tau / T::lit(10.0);
        }
        Err(best)
    }

    fn dual_bound(&self, d: &[T], power: Option<T>, s: T) -> T {
        let slack = power.map_or(T::zero(), |pw| s * pw);
        d.iter()
            .zip(&self.cost)
            .fold(T::neg_infinity(), |m, (di, c)| m.max(*di - s * *c))
            + slack
    }

    /// Minimizes the convex piecewise-linear dual bound over `s ≥ 0` by
    /// golden-section search on a bracket around `guess`.
    fn tightest_dual_bound(&self, d: &[T], power: T, guess: T) -> (T, T) {
        let f = |s: T| self.dual_bound(d, Some(power), s);
        let hi = (guess * T::lit(4.0)).max(T::one());
        let s = crate::sweep::golden_section_max(|s| -f(s), T::zero(), hi, hi * T::lit(1e-10), 80);
        if f(s) < f(guess) {
            (f(s), s)
        } else {
            (f(guess), guess)
        }
    }

    fn mean_cost(&self, p: &[T]) -> T {
        p.iter().zip(&self.cost).map(|(a, c)| *a * *c).sum()
    }

    /// Mean and variance of the cost under weights ∝ exp(log_w − t·cost).
    fn tilted_moments(&self, log_w: &[T], t: T) -> (T, T) {
        let top = log_w
            .iter()
            .zip(&self.cost)
            .fold(T::neg_infinity(), |m, (lw, c)| m.max(*lw - t * *c));
        let (mut z, mut m1, mut m2) = (T::zero(), T::zero(), T::zero());
        for (lw, c) in log_w.iter().zip(&self.cost) {
            let w = (*lw - t * *c - top).exp();
            z = z + w;
            m1 = m1 + w * *c;
            m2 = m2 + w * *c * *c;
        }
        let mean = m1 / z;
        (mean, (m2 / z - mean * mean).max(T::zero()))
    }

    /// Smallest `t ≥ 0` whose tilted mean cost is at most `power`.
    fn solve_tilt(&self, log_w: &[T], power: T, guess: T) -> T {
        let excess = |t: T| self.tilted_moments(log_w, t).0 - power;
        if excess(T::zero()) <= T::zero() {
            return T::zero();
        }
        let mut lo = T::zero();
        let mut hi = guess.max(T::lit(1e-3));
        while excess(hi) > T::zero() {
            lo = hi;
            hi = hi * T::lit(2.0);
            if hi > T::lit(1e12) {
                return hi;
            }
        }
        // Safeguarded Newton: the mean is decreasing in t with slope −var.
        let mut t = hi;
        for _ in 0..100 {
            let (mean, var) = self.tilted_moments(log_w, t);
            let f = mean - power;
            if f > T::zero() {
                lo = t;
            } else {
                hi = t;
            }
            if f.abs() <= power * T::lit(1e-12) {
                return t;
            }
            if hi - lo <= T::epsilon() * hi {
                break;
            }
            let newton = t + f / var;
            t = if var > T::zero() && newton > lo && newton < hi {
                newton
            } else {
                (lo + hi) / T::lit(2.0)
            };
        }
        // Stay on the feasible side.
        hi
    }
}

/// Best certified bounds seen so far, with the input attaining the lower one.
struct Bounds<T> {
    lower: T,
    upper: T,
    p: Vec<T>,
    /// Multiplier attaining the upper bound.
    s: T,
}

impl<T: Real> Bounds<T> {
    fn offer(&mut self, p: &[T], mi: T, upper: T, s: T) {
        if mi > self.lower {
            self.lower = mi;
            self.p.copy_from_slice(p);
        }
        if upper < self.upper {
            self.upper = upper;
            self.s = s;
        }
    }

    fn gap(&self) -> T {
        self.upper - self.lower
    }
}

/// Solves `H x = g` for symmetric positive (semi)definite `H` (row-major,
/// `n × n`) by Cholesky, adding a growing ridge if a pivot fails.
fn solve_spd<T: Real>(h: &[T], g: &[T], n: usize) -> Option<Vec<T>> {
    let scale = (0..n).map(|i| h[i * n + i].abs()).fold(T::zero(), |a, b| a.max(b));
    let mut ridge = T::zero();
    for _ in 0..12 {
        let mut l = vec![T::zero(); n * n];
        let mut ok = true;
        'outer: for i in 0..n {
            for j in 0..=i {
                let mut v = h[i * n + j];
                if i == j {
                    v = v + ridge;
                }
                for k in 0..j {
                    v = v - l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if !(v > T::zero()) {
                        ok = false;
                        break 'outer;
                    }
                    l[i * n + i] = v.sqrt();
                } else {
                    l[i * n + j] = v / l[j * n + j];
                }
            }
        }
        if ok {
            let mut y = g.to_vec();
            for i in 0..n {
                for k in 0..i {
                    y[i] = y[i] - l[i * n + k] * y[k];
                }
                y[i] = y[i] / l[i * n + i];
            }
            for i in (0..n).rev() {
                for k in i + 1..n {
                    y[i] = y[i] - l[k * n + i] * y[k];
                }
                y[i] = y[i] / l[i * n + i];
            }
            return Some(y);
        }
        ridge = if ridge == T::zero() { scale.max(T::one()) * T::lit(1e-14) } else { ridge * T::lit(100.0) };
    }
    None
}

fn uniform<T: Real>(n: usize) -> Vec<T> {
    vec![T::one() / T::lit(n as f64); n]
}

/// Unconstrained capacity over the channel's input alphabet, in bits.
pub fn capacity<T: Real>(channel: &DiscreteChannel<T>, tol: T) -> Result<CapacityResult<T>> {
    solve(channel, None, tol)
}

/// Capacity under `E[x²] ≤ power`, in bits.
pub fn capacity_power_constrained<T: Real>(
    channel: &DiscreteChannel<T>,
    power: T,
    tol: T,
) -> Result<CapacityResult<T>> {
    if !(power > T::zero()) {
        return Err(Error::InvalidArgument("power must be positive".into()));
    }
    solve(channel, Some(power), tol)
}

fn solve<T: Real>(channel: &DiscreteChannel<T>, power: Option<T>, tol: T) -> Result<CapacityResult<T>> {
    if !(tol > T::zero()) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let k = Kernel::new(channel);
    let mut p = uniform(channel.inputs.len());
    let (mi, gap, multiplier, iterations) = k.run(&mut p, power, tol * T::LN_2(), channel.bins)?;
    Ok(CapacityResult {
        bits: mi / T::LN_2(),
        input_pmf: p,
        inputs: channel.inputs.clone(),
        gap: gap / T::LN_2(),
        multiplier,
        iterations,
    })
}

/// Symmetric grid of `n` points on `[-half_width, half_width]`.
pub fn symmetric_grid<T: Real>(n: usize, half_width: T) -> Vec<T> {
    if n == 1 {
        return vec![T::zero()];
    }
    let step = T::lit(2.0) * half_width / T::lit((n - 1) as f64);
    (0..n).map(|i| -half_width + step * T::lit(i as f64)).collect()
}

/// Capacity (bits per real channel use) of the `spec`-quantized real AWGN
/// channel at linear SNR `snr` under unit average input power.
///
/// Solves on the coarse symmetric grid, then adds a fine sub-grid (eighth
/// steps) around every support point that carries mass and solves again.
pub fn quantized_awgn_capacity<T: Real>(spec: &QuantizerSpec<T>, snr: T, tol: T) -> Result<CapacityResult<T>> {
    let half = T::lit(SUPPORT_HALF_WIDTH);
    let coarse = symmetric_grid(SUPPORT_POINTS, half);
    let ch = build_channel(spec, snr, &coarse)?;
    let first = capacity_power_constrained(&ch, T::one(), tol)?;

    let step = T::lit(2.0) * half / T::lit((SUPPORT_POINTS - 1) as f64);
    let fine = step / T::lit(8.0);
    let mut refined = coarse.clone();
    for (x, p) in first.inputs.iter().zip(&first.input_pmf) {
        if *p > T::lit(1e-4) {
            for k in -7i32..=7 {
                if k % 8 != 0 {
                    let v = *x + fine * T::lit(k as f64);
                    if v.abs() <= half {
                        refined.push(v);
                    }
                }
            }
        }
    }
    refined.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    refined.dedup_by(|a, b| (*a - *b).abs() < fine / T::lit(4.0));
    let ch = build_channel(spec, snr, &refined)?;
    let second = capacity_power_constrained(&ch, T::one(), tol)?;
    Ok(if second.bits >= first.bits { second } else { first })
}

/// One row of the AQNM accuracy comparison.
#[derive(Debug, Clone, Serialize)]
pub struct Fig2Row {
    pub snr_db: f64,
    pub bins: usize,
    /// Exact capacity in bits/s/Hz of a complex band (I and Q rails).
    pub capacity_bph: f64,
    /// AQNM Gaussian-input rate in bits/s/Hz.
    pub aqnm_bph: f64,
    pub ratio: f64,
}

/// Exact capacity vs AQNM rate on an SNR grid for each quantizer size.
///
/// The complex band carries two independent real rails, each a quantized
/// real AWGN channel at the same SNR, so the exact figure is twice the real
/// capacity.
pub fn fig2_comparison(snr_grid_db: &[f64], bins: &[usize], tol: f64) -> Result<Vec<Fig2Row>> {
    if let Some(db) = snr_grid_db.iter().find(|db| !(-40.0..=60.0).contains(*db)) {
        return Err(Error::InvalidArgument(format!("snr {db} dB outside supported range")));
    }
    let specs: Vec<QuantizerSpec<f64>> = bins
        .iter()
        .map(|&b| QuantizerSpec::lloyd_max(b))
        .collect::<Result<_>>()?;
    let cases: Vec<(f64, &QuantizerSpec<f64>)> = snr_grid_db
        .iter()
        .flat_map(|&db| specs.iter().map(move |s| (db, s)))
        .collect();
    cases
        .par_iter()
        .map(|&(db, spec)| {
            let snr = db_to_linear(db);
            let cap = quantized_awgn_capacity(spec, snr, tol)?;
            let capacity_bph = 2.0 * cap.bits;
            let aqnm_bph = aqnm_spectral_efficiency(snr, spec.beta);
            Ok(Fig2Row {
                snr_db: db,
                bins: spec.bins,
                capacity_bph,
                aqnm_bph,
                ratio: aqnm_bph / capacity_bph,
            })
        })
        .collect()
}
