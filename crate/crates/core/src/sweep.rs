//! Monte Carlo rate estimation over Rayleigh fading and the design searches
//! built on it.
//!
//! Channels are drawn once per antenna configuration and reused across every
//! resolution and bandwidth evaluated for it (common random numbers), so
//! rate differences between near-tied designs are not swamped by sampling
//! noise. Per-realization quantities that do not depend on `(b, W)` (Gram
//! matrix, SVD, analog combining gain) are computed once per batch.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Infeasibility, Result};
use crate::linalg::{svd, CMatrix, Svd};
use crate::power::PowerModel;
use crate::quantizer::{ApproxParams, BetaTable};
use crate::rates::{
    aqnm_spectral_efficiency, analog_combiner_csit, analog_combiner_nocsit, digital_csit_se,
    digital_nocsit_se, Architecture, ChannelRealization, Csit, LinkConfig, CSIT_COMBINER_ITERS,
    CSIT_COMBINER_TOL,
};
use crate::scalar::{norm_ppf, Real};

/// Default Monte Carlo sample count per design point.
pub const DEFAULT_SAMPLES: usize = 2000;
/// Default number of bandwidth refinement points below the budget maximum.
pub const DEFAULT_W_REFINE: usize = 16;
/// Default largest resolution searched.
pub const DEFAULT_B_MAX: usize = 64;
/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "ADC_PLANNER_THREADS";

/// Monte Carlo settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
    pub ci_level: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            seed: 0x5EED,
            ci_level: 0.95,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 100 {
            return Err(Error::Config(format!(
                "samples must be at least 100, got {}",
                self.samples
            )));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::Config("ci_level must lie in (0, 1)".into()));
        }
        Ok(())
    }

    /// Two-sided normal quantile for `ci_level`.
    pub fn z_score(&self) -> f64 {
        norm_ppf(0.5 + self.ci_level / 2.0)
    }
}

/// Antenna arrangement for a given `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    /// `N × N`.
    Mimo,
    /// One transmit antenna, `N` receive antennas.
    Simo,
}

impl Topology {
    pub fn dims(self, n: usize) -> (usize, usize) {
        match self {
            Topology::Mimo => (n, n),
            Topology::Simo => (n, 1),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Topology::Mimo => "mimo",
            Topology::Simo => "simo",
        }
    }
}

/// One candidate receiver design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DesignPoint<T> {
    pub n: usize,
    pub bins: usize,
    /// Hz.
    pub bandwidth: T,
    pub arch: Architecture,
    pub csit: Csit,
    pub topology: Topology,
}

impl<T: Real> DesignPoint<T> {
    pub fn nr(&self) -> usize {
        self.topology.dims(self.n).0
    }

    pub fn nt(&self) -> usize {
        self.topology.dims(self.n).1
    }

    /// `base` with the antenna counts and architecture of this design.
    pub fn link(&self, base: &LinkConfig<T>) -> LinkConfig<T> {
        LinkConfig {
            nt: self.nt(),
            nr: self.nr(),
            arch: self.arch,
            csit: self.csit,
            ..*base
        }
    }
}

/// Monte Carlo estimate of the expected rate of one design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateResult<T> {
    /// bits/s.
    pub mean_rate: T,
    /// bits/s.
    pub std_err: T,
    /// Half-width of the confidence interval at the configured level.
    pub ci_half_width: T,
    pub design: DesignPoint<T>,
    /// Watts.
    pub consumed_power: T,
}

/// i.i.d. CN(0, 1) channel, `nr × nt`. Draws are taken in `f64` so `f32`
/// and `f64` callers see the same channels.
pub fn sample_channel<T: Real, R: Rng + ?Sized>(nr: usize, nt: usize, rng: &mut R) -> ChannelRealization<T> {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let h = CMatrix::from_fn(nr, nt, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex::new(T::lit(re * scale), T::lit(im * scale))
    });
    ChannelRealization::new(h)
}

/// Seed of the channel stream for one antenna configuration.
pub fn batch_seed(seed: u64, nr: usize, nt: usize) -> u64 {
    let tag = ((nr as u64) << 32) | nt as u64;
    seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Per-realization statistics a rate formula needs.
#[derive(Debug, Clone)]
enum Prepared<T> {
    /// `H Hᴴ`, digital combining without CSIT.
    Gram(Vec<CMatrix<T>>),
    /// SVD, digital combining with CSIT.
    Svd(Vec<Svd<T>>),
    /// Analog combining gain `|w_rᴴ H w_t|²`.
    Gain(Vec<T>),
}

/// A fixed set of channel draws prepared for one `(arch, csit)` scenario.
#[derive(Debug, Clone)]
pub struct ChannelBatch<T> {
    pub nr: usize,
    pub nt: usize,
    pub arch: Architecture,
    pub csit: Csit,
    prepared: Prepared<T>,
}

impl<T: Real> ChannelBatch<T> {
    /// Draws `samples` channels from the stream seeded by
    /// [`batch_seed`]`(seed, nr, nt)` and precomputes what the scenario's
    /// rate formula needs.
    pub fn new(nr: usize, nt: usize, arch: Architecture, csit: Csit, samples: usize, seed: u64) -> Result<Self> {
        if nr == 0 || nt == 0 {
            return Err(Error::InvalidArgument("antenna counts must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(batch_seed(seed, nr, nt));
        let channels: Vec<ChannelRealization<T>> =
            (0..samples).map(|_| sample_channel(nr, nt, &mut rng)).collect();
        Self::from_channels(&channels, arch, csit)
    }

    pub fn from_channels(channels: &[ChannelRealization<T>], arch: Architecture, csit: Csit) -> Result<Self> {
        let first = channels
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty channel batch".into()))?;
        let (nr, nt) = (first.nr(), first.nt());
        if channels.iter().any(|c| c.nr() != nr || c.nt() != nt) {
            return Err(Error::InvalidArgument("channels in a batch must share dimensions".into()));
        }
        let prepared = match (arch, csit) {
            (Architecture::Digital, Csit::No) => Prepared::Gram(channels.par_iter().map(|c| c.h.gram_rows()).collect()),
            (Architecture::Digital, Csit::Yes) => {
                Prepared::Svd(channels.par_iter().map(|c| svd(&c.h)).collect::<Result<_>>()?)
            }
            (Architecture::Analog, Csit::No) => {
                Prepared::Gain(channels.par_iter().map(|c| analog_combiner_nocsit(c).gain2).collect())
            }
            (Architecture::Analog, Csit::Yes) => Prepared::Gain(
                channels
                    .par_iter()
                    .map(|c| {
                        if c.h.is_zero() {
                            return Ok(T::zero());
                        }
                        analog_combiner_csit(c, CSIT_COMBINER_ITERS, T::lit(CSIT_COMBINER_TOL)).map(|a| a.gain2)
                    })
                    .collect::<Result<_>>()?,
            ),
        };
        Ok(Self {
            nr,
            nt,
            arch,
            csit,
            prepared,
        })
    }

    pub fn len(&self) -> usize {
        match &self.prepared {
            Prepared::Gram(v) => v.len(),
            Prepared::Svd(v) => v.len(),
            Prepared::Gain(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Spectral efficiency (bits/s/Hz) of realization `i` at band SNR
    /// `snr = P / (W N0)`.
    fn spectral_efficiency(&self, i: usize, snr: T, beta: T) -> Result<T> {
        match &self.prepared {
            Prepared::Gram(g) => digital_nocsit_se(&g[i], snr / T::lit(self.nt as f64), beta),
            Prepared::Svd(s) => digital_csit_se(&s[i], snr, beta),
            Prepared::Gain(g) => Ok(aqnm_spectral_efficiency(g[i] * snr / T::lit(self.nr as f64), beta)),
        }
    }

    /// Sample mean and standard error of the rate (bits/s) at bandwidth
    /// `bandwidth` and distortion `beta`. Accumulation is sequential in
    /// sample order, so the result does not depend on scheduling.
    pub fn rate_stats(&self, cfg: &LinkConfig<T>, bandwidth: T, beta: T) -> Result<(T, T)> {
        let n = self.len();
        if n < 2 {
            return Err(Error::InvalidArgument("need at least two samples".into()));
        }
        if cfg.tx_power == T::zero() {
            return Ok((T::zero(), T::zero()));
        }
        let snr = cfg.band_snr(bandwidth);
        let (mut mean, mut m2) = (0.0f64, 0.0f64);
        for i in 0..n {
            let x = (bandwidth * self.spectral_efficiency(i, snr, beta)?).to_f64_lossy();
            let delta = x - mean;
            mean += delta / (i + 1) as f64;
            m2 += delta * (x - mean);
        }
        let var = m2 / (n - 1) as f64;
        Ok((T::lit(mean), T::lit((var / n as f64).sqrt())))
    }
}

/// Runs `f` on a rayon pool limited by [`THREADS_ENV`] when it is set.
pub fn with_thread_cap<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    match cap.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

/// Channel batches keyed by antenna configuration and scenario, shared by
/// every budget, SNR and resolution evaluated with one Monte Carlo setting.
#[derive(Debug)]
pub struct BatchCache<T> {
    mc: McConfig,
    map: Mutex<HashMap<(usize, usize, Architecture, Csit), Arc<ChannelBatch<T>>>>,
}

impl<T: Real> BatchCache<T> {
    pub fn new(mc: McConfig) -> Self {
        Self {
            mc,
            map: Mutex::new(HashMap::new()),
        }
    }

    pub fn mc(&self) -> &McConfig {
        &self.mc
    }

    pub fn get(&self, nr: usize, nt: usize, arch: Architecture, csit: Csit) -> Result<Arc<ChannelBatch<T>>> {
        let key = (nr, nt, arch, csit);
        if let Some(b) = self.map.lock().expect("batch cache poisoned").get(&key) {
            return Ok(Arc::clone(b));
        }
        let batch = Arc::new(ChannelBatch::new(nr, nt, arch, csit, self.mc.samples, self.mc.seed)?);
        self.map
            .lock()
            .expect("batch cache poisoned")
            .insert(key, Arc::clone(&batch));
        Ok(batch)
    }
}

fn check_design<T: Real>(design: &DesignPoint<T>, cfg: &LinkConfig<T>, model: &PowerModel<T>, budget: T) -> Result<T> {
    if design.n == 0 {
        return Err(Error::InvalidArgument("antenna count must be positive".into()));
    }
    if !(design.bandwidth > T::zero()) || design.bandwidth > cfg.total_bandwidth * (T::one() + T::lit(1e-12)) {
        return Err(Error::InvalidArgument("bandwidth outside (0, W_tot]".into()));
    }
    let power = model.p_total(design.arch, design.nr(), design.bandwidth, design.bins);
    if power > budget * (T::one() + T::lit(1e-12)) {
        let fixed = model.fixed_cost(design.arch, design.nr());
        let why = if fixed > budget {
            Infeasibility::NoAntennasAffordable {
                fixed_cost: fixed.to_f64_lossy(),
                budget: budget.to_f64_lossy(),
            }
        } else {
            Infeasibility::NoAdcPower {
                fixed_cost: fixed.to_f64_lossy(),
                budget: budget.to_f64_lossy(),
            }
        };
        return Err(Error::Infeasible(why));
    }
    Ok(power)
}

fn lookup_beta<T: Real>(betas: &BetaTable<T>, bins: usize) -> Result<T> {
    betas
        .get(bins)
        .ok_or_else(|| Error::InvalidArgument(format!("no beta tabulated for b = {bins}")))
}

/// Expected rate of `design` under the power `budget`, averaged over
/// `mc.samples` fresh channel draws.
pub fn expected_rate<T: Real>(
    design: &DesignPoint<T>,
    cfg: &LinkConfig<T>,
    model: &PowerModel<T>,
    budget: T,
    betas: &BetaTable<T>,
    mc: &McConfig,
) -> Result<RateResult<T>> {
    mc.validate()?;
    let consumed_power = check_design(design, cfg, model, budget)?;
    let beta = lookup_beta(betas, design.bins)?;
    let link = design.link(cfg);
    let batch = ChannelBatch::new(link.nr, link.nt, design.arch, design.csit, mc.samples, mc.seed)?;
    let (mean_rate, std_err) = batch.rate_stats(&link, design.bandwidth, beta)?;
    Ok(RateResult {
        mean_rate,
        std_err,
        ci_half_width: std_err * T::lit(mc.z_score()),
        design: *design,
        consumed_power,
    })
}

/// Which front-end components the budget pays for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BudgetMode {
    /// Only the ADCs.
    AdcOnly,
    /// Every component of the power model.
    Full,
}

impl BudgetMode {
    pub fn apply<T: Real>(self, model: &PowerModel<T>) -> PowerModel<T> {
        match self {
            BudgetMode::AdcOnly => PowerModel::adc_only(model.adc_energy),
            BudgetMode::Full => *model,
        }
    }
}

/// Continuous relaxation of the SISO bandwidth problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelaxedOptimum<T> {
    pub bandwidth: T,
    /// Real-valued resolution implied by the budget at `bandwidth`.
    pub bins: T,
    /// bits/s.
    pub rate: T,
}

/// Result of the SISO bandwidth/resolution search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SisoOptimum<T> {
    pub bins: usize,
    pub bandwidth: T,
    /// bits/s.
    pub rate: T,
    pub consumed_power: T,
    pub relaxed: Option<RelaxedOptimum<T>>,
}

/// Best integer `b` for a single antenna with channel gain `gain2`; for each
/// `b` the bandwidth is the largest the budget allows, capped at `W_tot`.
///
/// The receiver is a single digital chain (LNA, mixer, one I/Q ADC pair).
pub fn siso_optimize<T: Real>(
    budget: T,
    gain2: T,
    cfg: &LinkConfig<T>,
    model: &PowerModel<T>,
    mode: BudgetMode,
    betas: &BetaTable<T>,
) -> Result<SisoOptimum<T>> {
    cfg.validate()?;
    let model = mode.apply(model);
    model.validate()?;
    let siso = LinkConfig {
        nt: 1,
        nr: 1,
        arch: Architecture::Digital,
        ..*cfg
    };
    let mut best: Option<SisoOptimum<T>> = None;
    let mut last_err = None;
    for bins in 2..=betas.b_max() {
        let w = match model.max_bandwidth(Architecture::Digital, 1, bins, budget) {
            Ok(w) => w.min(cfg.total_bandwidth),
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        if !(w > T::zero()) {
            continue;
        }
        let beta = lookup_beta(betas, bins)?;
        let rate = w * aqnm_spectral_efficiency(gain2 * siso.band_snr(w), beta);
        if best.is_none_or(|b| rate > b.rate) {
            best = Some(SisoOptimum {
                bins,
                bandwidth: w,
                rate,
                consumed_power: model.p_total(Architecture::Digital, 1, w, bins),
                relaxed: None,
            });
        }
    }
    let mut best = match (best, last_err) {
        (Some(b), _) => b,
        (None, Some(e)) => return Err(e),
        (None, None) => return Err(Error::Infeasible(Infeasibility::EmptyDesignSet)),
    };
    best.relaxed = relaxed_siso_optimum(budget, gain2, &siso, &model, ApproxParams::default()).ok();
    Ok(best)
}

/// Relaxed SISO objective with `b` eliminated through the binding
/// budget: `W log2((gP + W N0) / (a·4c²W²·gP / Pr² + W N0))`, where `Pr` is
/// the budget left after the fixed components.
pub fn relaxed_siso_objective<T: Real>(bandwidth: T, gain2: T, cfg: &LinkConfig<T>, residual: T, adc_energy: T, a: T) -> T {
    if !(bandwidth > T::zero()) {
        return T::zero();
    }
    let signal = gain2 * cfg.tx_power;
    let noise = bandwidth * cfg.noise_psd;
    let k = a * T::lit(4.0) * adc_energy * adc_energy / (residual * residual);
    let quant = k * bandwidth * bandwidth * signal;
    bandwidth * ((signal + noise) / (quant + noise)).log2()
}

/// Largest bandwidth at which the relaxed objective is still positive
/// (where `a·b⁻² = 1`).
fn relaxed_siso_zero<T: Real>(residual: T, adc_energy: T, a: T) -> T {
    residual / (T::lit(2.0) * adc_energy * a.sqrt())
}

fn siso_residual<T: Real>(budget: T, model: &PowerModel<T>) -> Result<T> {
    model.adc_budget(Architecture::Digital, 1, budget)
}

/// Maximizes the relaxed SISO objective over `W ∈ (0, min(W_tot, W₀)]`
/// by golden-section search, `W₀` being where the objective returns to zero.
pub fn relaxed_siso_optimum<T: Real>(
    budget: T,
    gain2: T,
    cfg: &LinkConfig<T>,
    model: &PowerModel<T>,
    params: ApproxParams<T>,
) -> Result<RelaxedOptimum<T>> {
    let residual = siso_residual(budget, model)?;
    let c = model.adc_energy;
    let hi = relaxed_siso_zero(residual, c, params.a).min(cfg.total_bandwidth);
    let f = |w: T| relaxed_siso_objective(w, gain2, cfg, residual, c, params.a);
    let w = golden_section_max(f, T::zero(), hi, hi * T::lit(1e-12), 200);
    Ok(RelaxedOptimum {
        bandwidth: w,
        bins: residual / (T::lit(2.0) * c * w),
        rate: f(w),
    })
}

/// Golden-section search for the maximizer of a unimodal `f` on `[lo, hi]`.
pub fn golden_section_max<T: Real>(f: impl Fn(T) -> T, mut lo: T, mut hi: T, tol: T, max_iter: usize) -> T {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..max_iter {
        if hi - lo <= tol {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    (lo + hi) / T::lit(2.0)
}

/// Relaxed SISO objective sampled on a bandwidth grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelaxedSisoProfile<T> {
    pub bandwidth: Vec<T>,
    /// bits/s.
    pub objective: Vec<T>,
    /// Index of the largest objective value.
    pub argmax: usize,
    /// True if the argmax is not at either end of the grid.
    pub interior: bool,
}

impl<T: Real> RelaxedSisoProfile<T> {
    /// Changes of slope between consecutive grid intervals, in units of
    /// rate/W_tot against W/W_tot. Nonpositive for a concave objective.
    pub fn slope_changes(&self, total_bandwidth: T) -> Vec<T> {
        let x: Vec<T> = self.bandwidth.iter().map(|&w| w / total_bandwidth).collect();
        let y: Vec<T> = self.objective.iter().map(|&r| r / total_bandwidth).collect();
        let slopes: Vec<T> = (1..x.len()).map(|i| (y[i] - y[i - 1]) / (x[i] - x[i - 1])).collect();
        slopes.windows(2).map(|s| s[1] - s[0]).collect()
    }

    /// Plain second differences `f(i+1) − 2f(i) + f(i−1)` in the same
    /// normalized units; meaningful on a uniform grid.
    pub fn second_differences(&self, total_bandwidth: T) -> Vec<T> {
        self.objective
            .windows(3)
            .map(|w| (w[2] - T::lit(2.0) * w[1] + w[0]) / total_bandwidth)
            .collect()
    }
}

/// Evaluates the relaxed SISO objective on `grid` (Hz, increasing).
pub fn relaxed_siso_profile<T: Real>(
    budget: T,
    gain2: T,
    cfg: &LinkConfig<T>,
    model: &PowerModel<T>,
    params: ApproxParams<T>,
    grid: &[T],
) -> Result<RelaxedSisoProfile<T>> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("bandwidth grid is empty".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || !(grid[0] > T::zero()) {
        return Err(Error::InvalidArgument("bandwidth grid must be positive and increasing".into()));
    }
    let residual = siso_residual(budget, model)?;
    let objective: Vec<T> = grid
        .iter()
        .map(|&w| relaxed_siso_objective(w, gain2, cfg, residual, model.adc_energy, params.a))
        .collect();
    let mut argmax = 0;
    for (i, v) in objective.iter().enumerate() {
        if *v > objective[argmax] {
            argmax = i;
        }
    }
    Ok(RelaxedSisoProfile {
        bandwidth: grid.to_vec(),
        argmax,
        interior: argmax > 0 && argmax + 1 < grid.len(),
        objective,
    })
}

/// Search space of [`joint_optimize`].
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub antennas: Vec<usize>,
    pub bins: Vec<usize>,
    pub topology: Topology,
    /// Points of the bandwidth refinement below the budget maximum, applied
    /// to the best resolution of every `N`. Zero disables it.
    pub w_refine: usize,
}

impl SearchSpace {
    pub fn new(antennas: impl IntoIterator<Item = usize>, bins: impl IntoIterator<Item = usize>) -> Self {
        Self {
            antennas: antennas.into_iter().collect(),
            bins: bins.into_iter().collect(),
            topology: Topology::Mimo,
            w_refine: DEFAULT_W_REFINE,
        }
    }

    pub fn with_topology(mut self, topology: Topology) -> Self {
        self.topology = topology;
        self
    }

    pub fn with_refinement(mut self, points: usize) -> Self {
        self.w_refine = points;
        self
    }
}

/// Every evaluated design and the best one.
#[derive(Debug, Clone)]
pub struct JointOptimum<T> {
    pub best: RateResult<T>,
    /// In (N, b, W) order.
    pub evaluated: Vec<RateResult<T>>,
}

/// Better-than with ties going to smaller N, then b, then W.
fn beats<T: Real>(a: &RateResult<T>, b: &RateResult<T>) -> bool {
    if a.mean_rate != b.mean_rate {
        return a.mean_rate > b.mean_rate;
    }
    let ka = (a.design.n, a.design.bins);
    let kb = (b.design.n, b.design.bins);
    if ka != kb {
        return ka < kb;
    }
    a.design.bandwidth < b.design.bandwidth
}

fn pick_best<'a, T: Real>(results: impl IntoIterator<Item = &'a RateResult<T>>) -> Option<RateResult<T>> {
    results.into_iter().fold(None, |acc: Option<RateResult<T>>, r| match acc {
        Some(best) if !beats(r, &best) => Some(best),
        _ => Some(*r),
    })
}

/// Exhaustive search over `N × b` with `W = min(W_tot, max_bandwidth)`,
/// followed by a bandwidth sweep below that maximum for each `N`'s best
/// resolution. All designs with the same antenna count share one channel
/// batch. Resolutions whose bandwidth is capped at `W_tot` are dominated by
/// the largest capped one and are not evaluated.
#[allow(clippy::too_many_arguments)]
pub fn joint_optimize<T: Real>(
    budget: T,
    arch: Architecture,
    csit: Csit,
    cfg: &LinkConfig<T>,
    model: &PowerModel<T>,
    space: &SearchSpace,
    betas: &BetaTable<T>,
    mc: &McConfig,
) -> Result<JointOptimum<T>> {
    mc.validate()?;
    let cache = BatchCache::new(*mc);
    joint_optimize_cached(budget, arch, csit, cfg, model, space, betas, &cache)
}

/// [`joint_optimize`] drawing channels from `cache`.
#[allow(clippy::too_many_arguments)]
pub fn joint_optimize_cached<T: Real>(
    budget: T,
    arch: Architecture,
    csit: Csit,
    cfg: &LinkConfig<T>,
    model: &PowerModel<T>,
    space: &SearchSpace,
    betas: &BetaTable<T>,
    cache: &BatchCache<T>,
) -> Result<JointOptimum<T>> {
    let mc = *cache.mc();
    mc.validate()?;
    cfg.validate()?;
    model.validate()?;
    if space.antennas.is_empty() || space.bins.is_empty() {
        return Err(Error::InvalidArgument("search ranges must be nonempty".into()));
    }
    if space.antennas.contains(&0) || space.bins.iter().any(|&b| b < 1) {
        return Err(Error::InvalidArgument("antenna counts and bins must be positive".into()));
    }
    for &b in &space.bins {
        lookup_beta(betas, b)?;
    }

    let mut evaluated = Vec::new();
    for &n in &space.antennas {
        let (nr, nt) = space.topology.dims(n);
        let mut designs = Vec::new();
        for &bins in &space.bins {
            if let Ok(w) = model.max_bandwidth(arch, nr, bins, budget) {
                let w = w.min(cfg.total_bandwidth);
                if w > T::zero() {
                    designs.push(DesignPoint {
                        n,
                        bins,
                        bandwidth: w,
                        arch,
                        csit,
                        topology: space.topology,
                    });
                }
            }
        }
        // At the band cap, more bins only lower β at the same W, so only
        // the largest capped resolution can win.
        let capped_top = designs
            .iter()
            .filter(|d| d.bandwidth >= cfg.total_bandwidth)
            .map(|d| d.bins)
            .max();
        if let Some(top) = capped_top {
            designs.retain(|d| d.bandwidth < cfg.total_bandwidth || d.bins == top);
        }
        if designs.is_empty() {
            continue;
        }
        let batch = cache.get(nr, nt, arch, csit)?;
        let link = designs[0].link(cfg);
        let eval = |d: &DesignPoint<T>| -> Result<RateResult<T>> {
            let beta = lookup_beta(betas, d.bins)?;
            let (mean_rate, std_err) = batch.rate_stats(&link, d.bandwidth, beta)?;
            Ok(RateResult {
                mean_rate,
                std_err,
                ci_half_width: std_err * T::lit(mc.z_score()),
                design: *d,
                consumed_power: model.p_total(arch, nr, d.bandwidth, d.bins),
            })
        };
        let mut results: Vec<RateResult<T>> = designs.par_iter().map(eval).collect::<Result<_>>()?;

        if space.w_refine > 0 {
            if let Some(top) = pick_best(&results) {
                let w_max = top.design.bandwidth;
                let steps = space.w_refine;
                let refine: Vec<DesignPoint<T>> = (1..=steps)
                    .map(|k| DesignPoint {
                        bandwidth: w_max * T::lit(k as f64 / (steps + 1) as f64),
                        ..top.design
                    })
                    .collect();
                let extra: Vec<RateResult<T>> = refine.par_iter().map(eval).collect::<Result<_>>()?;
                results.extend(extra);
            }
        }
        results.sort_by(|a, b| {
            (a.design.bins, a.design.bandwidth.to_f64_lossy())
                .partial_cmp(&(b.design.bins, b.design.bandwidth.to_f64_lossy()))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        evaluated.extend(results);
    }
    let best = pick_best(&evaluated).ok_or(Error::Infeasible(Infeasibility::EmptyDesignSet))?;
    Ok(JointOptimum { best, evaluated })
}
