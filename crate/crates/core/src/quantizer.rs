//! Scalar MMSE quantizers for Gaussian inputs and the additive quantization
//! noise model (AQNM) built on them.
//!
//! A quantizer with `b` output levels is summarized by its distortion ratio
//! β = E[(z − Q(z))²] / σ²_z. Under the AQNM the quantizer output is written
//! as `z_q = α z + n_q` with α = 1 − β and `n_q` uncorrelated with `z`.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{norm_interval, norm_pdf, norm_ppf, Real};

/// Default relative distortion tolerance for Lloyd-Max iterations.
pub const LLOYD_TOL: f64 = 1e-12;
/// Default iteration cap for Lloyd-Max iterations.
pub const LLOYD_MAX_ITER: usize = 10_000;

/// A `bins`-level scalar quantizer designed for a unit-variance Gaussian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizerSpec<T> {
    pub bins: usize,
    /// `bins − 1` strictly increasing decision thresholds.
    pub thresholds: Vec<T>,
    /// `bins` strictly increasing reconstruction levels.
    pub levels: Vec<T>,
    /// Distortion ratio β.
    pub beta: T,
    /// Quantizer gain α = 1 − β.
    pub alpha: T,
}

impl<T: Real> QuantizerSpec<T> {
    /// Lloyd-Max design with the default tolerance for `T`.
    pub fn lloyd_max(bins: usize) -> Result<Self> {
        lloyd_max_design(bins, default_tol::<T>(), LLOYD_MAX_ITER)
    }

    /// 1/β. Infinite for a lossless quantizer.
    pub fn coding_gain(&self) -> T {
        T::one() / self.beta
    }

    /// Index of the cell containing `u` (unit-variance scale). A value lying
    /// exactly on a threshold goes to the upper cell.
    #[inline]
    pub fn cell_index(&self, u: T) -> usize {
        self.thresholds.partition_point(|&t| t <= u)
    }

    /// Quantizes `z`, whose standard deviation is `sigma`.
    #[inline]
    pub fn quantize(&self, z: T, sigma: T) -> T {
        self.levels[self.cell_index(z / sigma)] * sigma
    }

    /// I/Q quantization: both rails use this spec independently. `sigma` is
    /// the per-rail standard deviation.
    pub fn quantize_iq(&self, z: Complex<T>, sigma: T) -> Complex<T> {
        Complex::new(self.quantize(z.re, sigma), self.quantize(z.im, sigma))
    }

    /// Largest |level − centroid(cell)| and |threshold − midpoint| over the
    /// spec, i.e. how far it is from a Lloyd-Max fixed point.
    pub fn optimality_residual(&self) -> T {
        let centroids = centroids(&self.thresholds);
        let mut worst = T::zero();
        for (l, c) in self.levels.iter().zip(&centroids) {
            worst = worst.max((*l - *c).abs());
        }
        for (k, t) in self.thresholds.iter().enumerate() {
            let mid = (self.levels[k] + self.levels[k + 1]) / T::lit(2.0);
            worst = worst.max((*t - mid).abs());
        }
        worst
    }
}

/// Tolerance actually reachable in `T`.
pub fn default_tol<T: Real>() -> T {
    T::lit(LLOYD_TOL).max(T::epsilon() * T::lit(8.0))
}

/// Parameter of the β ≈ a·b⁻² approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxParams<T> {
    pub a: T,
}

impl<T: Real> Default for ApproxParams<T> {
    fn default() -> Self {
        Self {
            a: T::PI() * T::lit(3.0).sqrt() / T::lit(2.0),
        }
    }
}

/// a·b⁻²; rejected when it exceeds one.
pub fn beta_approx<T: Real>(bins: usize, params: ApproxParams<T>) -> Result<T> {
    if bins == 0 {
        return Err(Error::InvalidArgument("bins must be at least 1".into()));
    }
    if !(params.a > T::zero()) {
        return Err(Error::InvalidArgument("approximation constant a must be positive".into()));
    }
    let b = T::lit(bins as f64);
    let beta = params.a / (b * b);
    if beta > T::one() {
        return Err(Error::Domain {
            bins,
            value: beta.to_f64_lossy(),
        });
    }
    Ok(beta)
}

fn cell_edges<T: Real>(thresholds: &[T]) -> Vec<T> {
    let mut edges = Vec::with_capacity(thresholds.len() + 2);
    edges.push(T::neg_infinity());
    edges.extend_from_slice(thresholds);
    edges.push(T::infinity());
    edges
}

/// Conditional means E[z | z in cell] for a standard normal z.
fn centroids<T: Real>(thresholds: &[T]) -> Vec<T> {
    let edges = cell_edges(thresholds);
    edges
        .windows(2)
        .map(|w| {
            let p = norm_interval(w[0], w[1]);
            (norm_pdf(w[0]) - norm_pdf(w[1])) / p
        })
        .collect()
}

/// E[(z − Q(z))²] for standard normal z, from per-cell Gaussian moments.
fn distortion<T: Real>(thresholds: &[T], levels: &[T]) -> T {
    let edges = cell_edges(thresholds);
    let edge_term = |x: T| {
        if x.is_infinite() {
            T::zero()
        } else {
            x * norm_pdf(x)
        }
    };
    edges
        .windows(2)
        .zip(levels)
        .map(|(w, &y)| {
            let (a, b) = (w[0], w[1]);
            let p = norm_interval(a, b);
            let m1 = norm_pdf(a) - norm_pdf(b);
            let m2 = p + edge_term(a) - edge_term(b);
            // E[(z − y)² ; cell] = m2 − 2 y m1 + y² p, written around the centroid
            let c = m1 / p;
            (m2 - c * m1) + p * (y - c) * (y - c)
        })
        .sum()
}

/// Lloyd-Max design for a standard normal source.
///
/// Starts from levels at the Gaussian quantiles of the cell midpoints
/// `(k + ½)/b`, then alternates midpoint thresholds and centroid levels until
/// the relative change in distortion drops below `tol`.
pub fn lloyd_max_design<T: Real>(bins: usize, tol: T, max_iter: usize) -> Result<QuantizerSpec<T>> {
    if bins == 0 {
        return Err(Error::InvalidArgument("bins must be at least 1".into()));
    }
    if !(tol > T::zero()) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if bins == 1 {
        return Ok(QuantizerSpec {
            bins: 1,
            thresholds: Vec::new(),
            levels: vec![T::zero()],
            beta: T::one(),
            alpha: T::zero(),
        });
    }

    let mut levels: Vec<T> = (0..bins)
        .map(|k| T::lit(norm_ppf((k as f64 + 0.5) / bins as f64)))
        .collect();
    let mut thresholds = midpoints(&levels);
    let mut dist = distortion(&thresholds, &levels);
    let mut residual = T::infinity();

    for _ in 0..max_iter {
        levels = centroids(&thresholds);
        thresholds = midpoints(&levels);
        let next = distortion(&thresholds, &levels);
        residual = (dist - next).abs() / next;
        dist = next;
        if residual < tol || residual == T::zero() {
            let beta = dist;
            return Ok(QuantizerSpec {
                bins,
                thresholds,
                levels,
                beta,
                alpha: T::one() - beta,
            });
        }
    }
    Err(Error::NoConvergence {
        what: "lloyd-max design",
        iterations: max_iter,
        residual: residual.to_f64_lossy(),
        last: levels.iter().map(|l| l.to_f64_lossy()).collect(),
    })
}

fn midpoints<T: Real>(levels: &[T]) -> Vec<T> {
    levels
        .windows(2)
        .map(|w| (w[0] + w[1]) / T::lit(2.0))
        .collect()
}

/// Lloyd-Max β for every `b` in `1..=b_max`, indexed by `b`.
#[derive(Debug, Clone)]
pub struct BetaTable<T> {
    betas: Vec<T>,
}

impl<T: Real> BetaTable<T> {
    pub fn lloyd_max(b_max: usize) -> Result<Self> {
        let mut betas = vec![T::one(); b_max + 1];
        for (b, slot) in betas.iter_mut().enumerate().skip(1) {
            *slot = QuantizerSpec::<T>::lloyd_max(b)?.beta;
        }
        Ok(Self { betas })
    }

    /// β for `bins`, or `None` above the tabulated range.
    pub fn get(&self, bins: usize) -> Option<T> {
        if bins == 0 {
            return None;
        }
        self.betas.get(bins).copied()
    }

    pub fn b_max(&self) -> usize {
        self.betas.len() - 1
    }
}

/// Empirical AQNM moments from direct quantization of Gaussian samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AqnmMoments<T> {
    pub samples: usize,
    /// Sample mean of `n_q = z_q − α z`.
    pub mean_nq: T,
    pub mean_nq_stderr: T,
    /// Sample variance of `n_q`.
    pub var_nq: T,
    pub var_nq_stderr: T,
    /// Sample correlation coefficient between `z` and `n_q`.
    pub corr_z_nq: T,
    pub corr_stderr: T,
    /// Sample mean of `(z − z_q)²`.
    pub distortion: T,
    pub distortion_stderr: T,
}

/// Draws `samples` unit-variance Gaussian inputs, quantizes them with `spec`
/// and reports the moments of `n_q = z_q − α z`.
pub fn aqnm_moments_mc<T: Real>(spec: &QuantizerSpec<T>, samples: usize, seed: u64) -> Result<AqnmMoments<T>> {
    if samples < 10_000 {
        return Err(Error::InvalidArgument(format!(
            "at least 10000 samples required, got {samples}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alpha = spec.alpha.to_f64_lossy();
    let one = T::one();

    // Welford accumulators in f64 regardless of T.
    let (mut mz, mut mn, mut m2z, mut m2n, mut cross) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut me, mut m2e) = (0.0, 0.0);
    let (mut m4n_raw, mut m4e_raw) = (0.0, 0.0);
    for i in 0..samples {
        let z: f64 = StandardNormal.sample(&mut rng);
        let zq = spec.quantize(T::lit(z), one).to_f64_lossy();
        let nq = zq - alpha * z;
        let e = (z - zq) * (z - zq);
        let k = (i + 1) as f64;

        let dz = z - mz;
        mz += dz / k;
        let dn = nq - mn;
        mn += dn / k;
        m2z += dz * (z - mz);
        cross += dz * (nq - mn);
        m2n += dn * (nq - mn);

        let de = e - me;
        me += de / k;
        m2e += de * (e - me);

        m4n_raw += nq.powi(4);
        m4e_raw += e * e;
    }
    let n = samples as f64;
    let var_z = m2z / (n - 1.0);
    let var_n = m2n / (n - 1.0);
    let var_e = m2e / (n - 1.0);
    let cov = cross / (n - 1.0);
    let corr = cov / (var_z * var_n).sqrt();

    // Var of the sample variance ≈ (μ4 − σ⁴)/n, with μ4 from raw moments
    // (the mean of n_q is zero up to sampling noise).
    let mu4 = m4n_raw / n;
    let var_of_var = ((mu4 - var_n * var_n) / n).max(0.0);
    let _ = m4e_raw;

    Ok(AqnmMoments {
        samples,
        mean_nq: T::lit(mn),
        mean_nq_stderr: T::lit((var_n / n).sqrt()),
        var_nq: T::lit(var_n),
        var_nq_stderr: T::lit(var_of_var.sqrt()),
        corr_z_nq: T::lit(corr),
        corr_stderr: T::lit(((1.0 - corr * corr).max(0.0) / (n - 2.0)).sqrt()),
        distortion: T::lit(me),
        distortion_stderr: T::lit((var_e / n).sqrt()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn two_bin_closed_form() {
        let q = QuantizerSpec::<f64>::lloyd_max(2).unwrap();
        assert!((q.beta - (1.0 - 2.0 / PI)).abs() < 1e-14);
        assert!((q.levels[1] - (2.0 / PI).sqrt()).abs() < 1e-14);
        assert_eq!(q.thresholds.len(), 1);
        assert!(q.thresholds[0].abs() < 1e-15);
    }

    #[test]
    fn single_bin_is_degenerate() {
        let q = QuantizerSpec::<f64>::lloyd_max(1).unwrap();
        assert_eq!(q.beta, 1.0);
        assert_eq!(q.alpha, 0.0);
        assert_eq!(q.levels, vec![0.0]);
        assert_eq!(q.quantize(3.0, 2.0), 0.0);
    }

    #[test]
    fn known_lloyd_max_distortions() {
        // Max (1960) table values for 4 and 8 output levels.
        for &(b, d) in &[(3, 0.190_174), (4, 0.117_482), (8, 0.034_548), (16, 0.009_501)] {
            let q = QuantizerSpec::<f64>::lloyd_max(b).unwrap();
            assert!((q.beta - d).abs() < 2e-6, "b={b} beta={}", q.beta);
        }
    }

    #[test]
    fn spec_shape_invariants() {
        for b in 2..=32 {
            let q = QuantizerSpec::<f64>::lloyd_max(b).unwrap();
            assert_eq!(q.levels.len(), b);
            assert_eq!(q.thresholds.len(), b - 1);
            for k in 0..b - 1 {
                assert!(q.levels[k] < q.thresholds[k] && q.thresholds[k] < q.levels[k + 1]);
            }
            assert_eq!(q.alpha + q.beta, 1.0);
            assert!(q.optimality_residual() < 1e-6, "b={b} residual {}", q.optimality_residual());
            // symmetric source, symmetric design
            assert!((q.levels[0] + q.levels[b - 1]).abs() < 1e-9);
        }
    }

    #[test]
    fn beta_strictly_decreasing() {
        let mut prev = f64::INFINITY;
        for b in 1..=32 {
            let beta = QuantizerSpec::<f64>::lloyd_max(b).unwrap().beta;
            assert!(beta < prev, "b={b}");
            prev = beta;
        }
    }

    #[test]
    fn non_convergence_reports_last_iterate() {
        match lloyd_max_design::<f64>(16, 1e-15, 3) {
            Err(Error::NoConvergence { iterations, last, residual, .. }) => {
                assert_eq!(iterations, 3);
                assert_eq!(last.len(), 16);
                assert!(residual > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn approx_values() {
        let p = ApproxParams::<f64>::default();
        // a = π√3/2 = 2.7207; a/4 and a/100 by hand
        assert!((beta_approx(2, p).unwrap() - 0.680_174_761_587_831_6).abs() < 1e-12);
        assert!((beta_approx(10, p).unwrap() - 0.027_206_990_463_513_27).abs() < 1e-12);
        assert!(beta_approx(1_000_000, p).unwrap() < 1e-11);
        assert!(matches!(beta_approx(1, p), Err(Error::Domain { bins: 1, .. })));
    }

    #[test]
    fn approx_overestimates_and_converges() {
        let p = ApproxParams::<f64>::default();
        let mut prev_gap = f64::INFINITY;
        for b in 2..=64 {
            let lm = QuantizerSpec::<f64>::lloyd_max(b).unwrap().beta;
            let ap = beta_approx(b, p).unwrap();
            assert!(ap > lm, "b={b}");
            let gap = (ap - lm) / lm;
            assert!(gap < prev_gap, "relative gap not shrinking at b={b}");
            prev_gap = gap;
        }
    }

    #[test]
    fn quantize_conventions() {
        let q = QuantizerSpec::<f64>::lloyd_max(2).unwrap();
        let top = (2.0 / PI).sqrt();
        // on the threshold: upper cell
        assert_eq!(q.quantize(0.0, 1.0), top);
        assert!((q.quantize(0.5, 1.0) - 0.797_884_560_802_865_4).abs() < 1e-14);
        assert_eq!(q.quantize(-1e300, 1.0), -top);
        assert_eq!(q.quantize(1e300, 3.0), 3.0 * top);
        let z = q.quantize_iq(Complex::new(0.3, -0.2), 2.0);
        assert_eq!(z, Complex::new(2.0 * top, -2.0 * top));
    }

    #[test]
    fn aqnm_two_bin_moments() {
        let q = QuantizerSpec::<f64>::lloyd_max(2).unwrap();
        let m = aqnm_moments_mc(&q, 1_000_000, 7).unwrap();
        let expect_var = q.alpha * q.beta; // 0.2314
        assert!((expect_var - 0.2314).abs() < 1e-4);
        assert!((m.var_nq - expect_var).abs() < 3.0 * m.var_nq_stderr);
        assert!(m.mean_nq.abs() < 3.0 * m.mean_nq_stderr);
        assert!(m.corr_z_nq.abs() < 3.0 * m.corr_stderr);
        assert!((m.distortion - q.beta).abs() < 3.0 * m.distortion_stderr);
    }

    #[test]
    fn too_few_samples_rejected() {
        let q = QuantizerSpec::<f64>::lloyd_max(2).unwrap();
        assert!(aqnm_moments_mc(&q, 100, 0).is_err());
    }

    #[test]
    fn f32_design_matches_f64() {
        for b in [2, 4, 8] {
            let q32 = QuantizerSpec::<f32>::lloyd_max(b).unwrap();
            let q64 = QuantizerSpec::<f64>::lloyd_max(b).unwrap();
            assert!((q32.beta as f64 - q64.beta).abs() < 1e-5);
        }
    }
}
