//! Achievable rates under the additive quantization noise model.
//!
//! Every rate here is for one channel realization over a band of width `W`;
//! the expectation over fading lives in [`crate::sweep`]. Noise is white
//! with PSD `N0` per receive antenna.

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{mat_vec, svd, vec_norm, CMatrix, Svd};
use crate::scalar::Real;

/// Receiver combining architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    /// One I/Q ADC pair per antenna, combining after quantization.
    Digital,
    /// Phase shifters and a single I/Q ADC pair after analog summation.
    Analog,
}

impl Architecture {
    pub fn short(self) -> &'static str {
        match self {
            Architecture::Digital => "DC",
            Architecture::Analog => "AC",
        }
    }
}

/// Whether the transmitter knows the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Csit {
    Yes,
    No,
}

impl Csit {
    pub fn label(self) -> &'static str {
        match self {
            Csit::Yes => "csit",
            Csit::No => "nocsit",
        }
    }
}

/// Link parameters shared by every rate formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig<T> {
    /// Transmit power P, watts.
    pub tx_power: T,
    /// Noise PSD N0, watts/Hz.
    pub noise_psd: T,
    /// Available bandwidth W_tot, Hz.
    pub total_bandwidth: T,
    pub nt: usize,
    pub nr: usize,
    pub arch: Architecture,
    pub csit: Csit,
}

impl<T: Real> LinkConfig<T> {
    /// Config with unit transmit power and the noise PSD chosen so that the
    /// full-band SNR `P / (W_tot N0)` equals `snr_db`.
    pub fn from_full_band_snr_db(
        snr_db: T,
        total_bandwidth: T,
        nt: usize,
        nr: usize,
        arch: Architecture,
        csit: Csit,
    ) -> Self {
        let snr = crate::scalar::db_to_linear(snr_db);
        Self {
            tx_power: T::one(),
            noise_psd: T::one() / (total_bandwidth * snr),
            total_bandwidth,
            nt,
            nr,
            arch,
            csit,
        }
    }

    /// P / (W_tot N0).
    pub fn full_band_snr(&self) -> T {
        self.tx_power / (self.total_bandwidth * self.noise_psd)
    }

    /// P / (W N0).
    pub fn band_snr(&self, bandwidth: T) -> T {
        self.tx_power / (bandwidth * self.noise_psd)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: T, name: &str| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive and finite")))
            }
        };
        if !(self.tx_power >= T::zero()) {
            return Err(Error::InvalidArgument("transmit power must be nonnegative".into()));
        }
        positive(self.noise_psd, "noise PSD")?;
        positive(self.total_bandwidth, "total bandwidth")?;
        if self.nt == 0 || self.nr == 0 {
            return Err(Error::InvalidArgument("antenna counts must be positive".into()));
        }
        Ok(())
    }

    fn check_band(&self, bandwidth: T, beta: T) -> Result<()> {
        if !(bandwidth > T::zero()) {
            return Err(Error::InvalidArgument("bandwidth must be positive".into()));
        }
        if bandwidth > self.total_bandwidth * (T::one() + T::lit(1e-12)) {
            return Err(Error::InvalidArgument("bandwidth exceeds the available band".into()));
        }
        if !(beta >= T::zero() && beta <= T::one()) {
            return Err(Error::InvalidArgument("beta must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// One narrowband channel matrix, `nr × nt`.
#[derive(Debug, Clone)]
pub struct ChannelRealization<T> {
    pub h: CMatrix<T>,
}

impl<T: Real> ChannelRealization<T> {
    pub fn new(h: CMatrix<T>) -> Self {
        Self { h }
    }

    pub fn nr(&self) -> usize {
        self.h.rows()
    }

    pub fn nt(&self) -> usize {
        self.h.cols()
    }

    fn check_dims(&self, cfg: &LinkConfig<T>) -> Result<()> {
        if self.nr() != cfg.nr || self.nt() != cfg.nt {
            return Err(Error::InvalidArgument(format!(
                "channel is {}x{}, link expects {}x{}",
                self.nr(),
                self.nt(),
                cfg.nr,
                cfg.nt
            )));
        }
        Ok(())
    }
}

/// log2(1 + x) without losing precision for small x.
#[inline]
fn log2_1p<T: Real>(x: T) -> T {
    x.ln_1p() / T::LN_2()
}

/// AQNM spectral efficiency at received SNR `snr`:
/// log2(1 + (1−β)·snr / (β·snr + 1)).
#[inline]
pub fn aqnm_spectral_efficiency<T: Real>(snr: T, beta: T) -> T {
    if snr <= T::zero() {
        return T::zero();
    }
    log2_1p((T::one() - beta) * snr / (beta * snr + T::one()))
}

/// SISO rate in bits/s for channel power gain `gain2 = |h|²`.
pub fn siso_rate<T: Real>(gain2: T, cfg: &LinkConfig<T>, bandwidth: T, beta: T) -> Result<T> {
    cfg.check_band(bandwidth, beta)?;
    Ok(bandwidth * aqnm_spectral_efficiency(gain2 * cfg.band_snr(bandwidth), beta))
}

/// Digital combining, no CSIT, input covariance (P/Nt)·I; bits/s.
pub fn digital_rate_nocsit<T: Real>(
    channel: &ChannelRealization<T>,
    cfg: &LinkConfig<T>,
    bandwidth: T,
    beta: T,
) -> Result<T> {
    cfg.check_band(bandwidth, beta)?;
    channel.check_dims(cfg)?;
    let rho = cfg.band_snr(bandwidth) / T::lit(cfg.nt as f64);
    Ok(bandwidth * digital_nocsit_se(&channel.h.gram_rows(), rho, beta)?)
}

/// Spectral efficiency of digital combining without CSIT given the row Gram
/// matrix `H Hᴴ` and the per-transmit-antenna SNR `rho = P / (Nt W N0)`.
///
/// log2 det(I + (1−β) A D⁻¹) with A = ρ H Hᴴ and D = β diag(A) + I, computed
/// as log2 det(D + (1−β) A) − log2 det D.
pub fn digital_nocsit_se<T: Real>(gram: &CMatrix<T>, rho: T, beta: T) -> Result<T> {
    let n = gram.rows();
    if rho <= T::zero() {
        return Ok(T::zero());
    }
    let alpha = T::one() - beta;
    let mut m = gram.scale(rho * alpha);
    let mut log_d = T::zero();
    for i in 0..n {
        let d = beta * rho * gram[(i, i)].re + T::one();
        m[(i, i)] = m[(i, i)] + Complex::new(d, T::zero());
        log_d = log_d + d.log2();
    }
    Ok(m.log2_det_hpd()? - log_d)
}

/// SVD `H = U Λ Vᴴ` used for CSIT precoding and combining.
pub fn svd_csit_transform<T: Real>(channel: &ChannelRealization<T>) -> Result<Svd<T>> {
    if channel.h.is_zero() {
        return Err(Error::InvalidArgument("channel matrix is zero".into()));
    }
    svd(&channel.h)
}

/// Waterfilling solution over parallel channels.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation<T> {
    /// Power per eigen-channel, in the order of the input gains.
    pub q: Vec<T>,
    /// Water level μ.
    pub water_level: T,
}

/// q_i = max(0, μ − noise/λ²_i) with Σ q_i = P.
pub fn waterfill<T: Real>(lambda2: &[T], power: T, noise: T) -> Result<PowerAllocation<T>> {
    if lambda2.iter().any(|&l| !(l >= T::zero())) {
        return Err(Error::InvalidArgument("eigenvalues must be nonnegative".into()));
    }
    if !(power > T::zero()) || !(noise > T::zero()) {
        return Err(Error::InvalidArgument("power and noise must be positive".into()));
    }
    let mut order: Vec<usize> = (0..lambda2.len()).filter(|&i| lambda2[i] > T::zero()).collect();
    if order.is_empty() {
        return Err(Error::InvalidArgument("all eigenvalues are zero".into()));
    }
    order.sort_by(|&a, &b| lambda2[b].partial_cmp(&lambda2[a]).unwrap_or(std::cmp::Ordering::Equal));
    let floors: Vec<T> = order.iter().map(|&i| noise / lambda2[i]).collect();

    // Largest active set whose weakest member still sits below the water.
    let mut mu = T::zero();
    let mut active = 0;
    let mut prefix = T::zero();
    for (k, &f) in floors.iter().enumerate() {
        prefix = prefix + f;
        let candidate = (power + prefix) / T::lit((k + 1) as f64);
        if candidate > f {
            mu = candidate;
            active = k + 1;
        } else {
            break;
        }
    }
    let mut q = vec![T::zero(); lambda2.len()];
    for (&i, &f) in order.iter().zip(&floors).take(active) {
        q[i] = (mu - f).max(T::zero());
    }
    Ok(PowerAllocation { q, water_level: mu })
}

/// Digital combining with CSIT: SVD precoding/combining with power
/// waterfilled against thermal noise only; bits/s.
pub fn digital_rate_csit<T: Real>(
    channel: &ChannelRealization<T>,
    cfg: &LinkConfig<T>,
    bandwidth: T,
    beta: T,
) -> Result<T> {
    cfg.check_band(bandwidth, beta)?;
    channel.check_dims(cfg)?;
    if cfg.tx_power == T::zero() {
        return Ok(T::zero());
    }
    let s = svd_csit_transform(channel)?;
    Ok(bandwidth * digital_csit_se(&s, cfg.band_snr(bandwidth), beta)?)
}

/// Spectral efficiency of SVD-based digital combining with total SNR
/// `rho = P / (W N0)`.
///
/// log2 det(R + (1−β) Λ Q Λ) − log2 det R with
/// R = β Uᴴ diag(U Λ Q Λ Uᴴ) U + I, everything normalized by W N0.
pub fn digital_csit_se<T: Real>(s: &Svd<T>, rho: T, beta: T) -> Result<T> {
    if rho <= T::zero() {
        return Ok(T::zero());
    }
    let lambda2: Vec<T> = s.singular_values.iter().map(|&v| v * v).collect();
    let alloc = waterfill(&lambda2, rho, T::one())?;
    let nr = s.u.rows();
    let mut signal = vec![T::zero(); nr];
    for (i, (&l2, &q)) in lambda2.iter().zip(&alloc.q).enumerate() {
        signal[i] = l2 * q;
    }

    // diag(U L Uᴴ)
    let u = &s.u;
    let m: Vec<T> = (0..nr)
        .map(|r| (0..nr).map(|k| u[(r, k)].norm_sqr() * signal[k]).sum())
        .collect();
    // R = β Uᴴ diag(m) U + I
    let mut noise = CMatrix::zeros(nr, nr);
    for i in 0..nr {
        for j in i..nr {
            let mut acc = Complex::zero();
            for r in 0..nr {
                acc = acc + u[(r, i)].conj() * u[(r, j)] * m[r];
            }
            acc = acc * beta;
            if i == j {
                noise[(i, i)] = Complex::new(acc.re + T::one(), T::zero());
            } else {
                noise[(i, j)] = acc;
                noise[(j, i)] = acc.conj();
            }
        }
    }
    let mut total = noise.clone();
    let alpha = T::one() - beta;
    for (i, &sv) in signal.iter().enumerate() {
        total[(i, i)] = total[(i, i)] + Complex::new(alpha * sv, T::zero());
    }
    Ok(total.log2_det_hpd()? - noise.log2_det_hpd()?)
}

/// Analog combiner and transmit beamformer with the resulting power gain
/// `|w_rᴴ H w_t|²`.
#[derive(Debug, Clone)]
pub struct AnalogCombiner<T> {
    /// Unit-modulus receive phases.
    pub wr: Vec<Complex<T>>,
    /// Unit-norm transmit beamformer.
    pub wt: Vec<Complex<T>>,
    pub gain2: T,
    /// False if the iterative search hit its iteration cap.
    pub converged: bool,
}

/// Receive phase shifts aligned with the row sums of `H`, equal-gain
/// transmission. Attains (1/Nt)(Σ_i |Σ_j h_ij|)².
pub fn analog_combiner_nocsit<T: Real>(channel: &ChannelRealization<T>) -> AnalogCombiner<T> {
    let h = &channel.h;
    let nt = h.cols();
    let scale = T::one() / T::lit(nt as f64).sqrt();
    let mut total = T::zero();
    let wr = (0..h.rows())
        .map(|i| {
            let row_sum = h.row(i).iter().fold(Complex::zero(), |a, z| a + z);
            total = total + row_sum.norm();
            // zero rows contribute nothing; any phase works
            if row_sum.is_zero() {
                Complex::new(T::one(), T::zero())
            } else {
                row_sum / row_sum.norm()
            }
        })
        .collect();
    AnalogCombiner {
        wr,
        wt: vec![Complex::new(scale, T::zero()); nt],
        gain2: total * total / T::lit(nt as f64),
        converged: true,
    }
}

/// `‖Hᴴ w‖²`.
fn combined_power<T: Real>(h_adj: &CMatrix<T>, w: &[Complex<T>]) -> T {
    let v = mat_vec(h_adj, w);
    v.iter().map(|z| z.norm_sqr()).sum()
}

fn unit_phase<T: Real>(z: Complex<T>, fallback: Complex<T>) -> Complex<T> {
    let n = z.norm();
    if n > T::zero() {
        z / n
    } else {
        fallback
    }
}

/// Unit-modulus combiner maximizing `‖w_rᴴ H‖²` by projected power
/// iteration `w ← exp(j·arg(H Hᴴ w))`, started from the phases of the top
/// left singular vector, with maximum ratio transmission on top.
pub fn analog_combiner_csit<T: Real>(
    channel: &ChannelRealization<T>,
    max_iter: usize,
    tol: T,
) -> Result<AnalogCombiner<T>> {
    let h = &channel.h;
    if h.is_zero() {
        return Err(Error::InvalidArgument("channel matrix is zero".into()));
    }
    let one = Complex::new(T::one(), T::zero());
    let gram = h.gram_rows();
    let h_adj = h.adjoint();
    let mut w: Vec<Complex<T>> = if h.rows() == 1 {
        vec![one]
    } else {
        let s = svd(h)?;
        s.u.column(0).into_iter().map(|z| unit_phase(z, one)).collect()
    };
    let mut obj = combined_power(&h_adj, &w);
    let mut converged = false;
    for _ in 0..max_iter {
        let g = mat_vec(&gram, &w);
        let next: Vec<Complex<T>> = g.iter().zip(&w).map(|(z, prev)| unit_phase(*z, *prev)).collect();
        let next_obj = combined_power(&h_adj, &next);
        let gain = next_obj - obj;
        if next_obj >= obj {
            w = next;
            obj = next_obj;
        }
        if gain <= tol * obj {
            converged = true;
            break;
        }
    }
    let v = mat_vec(&h_adj, &w);
    let norm = vec_norm(&v);
    let wt = v.iter().map(|z| z / norm).collect();
    Ok(AnalogCombiner {
        wr: w,
        wt,
        gain2: obj,
        converged,
    })
}

/// Analog combining rate for a given beamforming gain; bits/s. The
/// combiner sums `Nr` noisy branches, hence the `Nr·N0` noise term.
pub fn analog_rate<T: Real>(gain2: T, cfg: &LinkConfig<T>, bandwidth: T, beta: T) -> Result<T> {
    cfg.check_band(bandwidth, beta)?;
    if !(gain2 >= T::zero()) {
        return Err(Error::InvalidArgument("gain must be nonnegative".into()));
    }
    let snr = gain2 * cfg.band_snr(bandwidth) / T::lit(cfg.nr as f64);
    Ok(bandwidth * aqnm_spectral_efficiency(snr, beta))
}

/// Rate of the architecture selected by `cfg` for one realization.
pub fn realization_rate<T: Real>(
    channel: &ChannelRealization<T>,
    cfg: &LinkConfig<T>,
    bandwidth: T,
    beta: T,
) -> Result<T> {
    match (cfg.arch, cfg.csit) {
        (Architecture::Digital, Csit::No) => digital_rate_nocsit(channel, cfg, bandwidth, beta),
        (Architecture::Digital, Csit::Yes) => digital_rate_csit(channel, cfg, bandwidth, beta),
        (Architecture::Analog, Csit::No) => {
            channel.check_dims(cfg)?;
            analog_rate(analog_combiner_nocsit(channel).gain2, cfg, bandwidth, beta)
        }
        (Architecture::Analog, Csit::Yes) => {
            channel.check_dims(cfg)?;
            let c = analog_combiner_csit(channel, CSIT_COMBINER_ITERS, T::lit(CSIT_COMBINER_TOL))?;
            analog_rate(c.gain2, cfg, bandwidth, beta)
        }
    }
}

pub const CSIT_COMBINER_ITERS: usize = 500;
pub const CSIT_COMBINER_TOL: f64 = 1e-12;
