//! Receiver front-end power accounting.
//!
//! ADC power follows the figure-of-merit model `P_ADC = c·W·b` per ADC, and
//! each I/Q branch has two ADCs. Analog combining pays for `Nr` LNAs and
//! phase shifters plus one combiner, one mixer and one I/Q pair; digital
//! combining pays for `Nr` LNAs, `Nr` mixers and `Nr` I/Q pairs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Infeasibility, Result};
use crate::rates::Architecture;
use crate::scalar::Real;

/// Per-component powers in watts and ADC energy per conversion step in
/// joules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerModel<T> {
    pub lna: T,
    pub phase_shifter: T,
    pub combiner: T,
    pub mixer: T,
    pub adc_energy: T,
}

impl<T: Real> Default for PowerModel<T> {
    fn default() -> Self {
        Self {
            lna: T::lit(39e-3),
            phase_shifter: T::lit(19.5e-3),
            combiner: T::lit(19.5e-3),
            mixer: T::lit(16.8e-3),
            adc_energy: T::lit(494e-15),
        }
    }
}

impl<T: Real> PowerModel<T> {
    /// Only the ADCs draw power; every other component is free.
    pub fn adc_only(adc_energy: T) -> Self {
        Self {
            lna: T::zero(),
            phase_shifter: T::zero(),
            combiner: T::zero(),
            mixer: T::zero(),
            adc_energy,
        }
    }

    pub fn is_adc_only(&self) -> bool {
        self.lna == T::zero()
            && self.phase_shifter == T::zero()
            && self.combiner == T::zero()
            && self.mixer == T::zero()
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            (self.lna, "lna"),
            (self.phase_shifter, "phase_shifter"),
            (self.combiner, "combiner"),
            (self.mixer, "mixer"),
        ];
        for (v, name) in fields {
            if !(v >= T::zero() && v.is_finite()) {
                return Err(Error::Config(format!("{name} power must be nonnegative")));
            }
        }
        if !(self.adc_energy > T::zero() && self.adc_energy.is_finite()) {
            return Err(Error::Config("adc_energy must be positive".into()));
        }
        Ok(())
    }

    /// Power of one ADC sampling a band of width `bandwidth` with `bins`
    /// levels.
    pub fn p_adc(&self, bandwidth: T, bins: usize) -> T {
        self.adc_energy * bandwidth * T::lit(bins as f64)
    }

    /// Bandwidth-independent part of the front-end power.
    pub fn fixed_cost(&self, arch: Architecture, nr: usize) -> T {
        let n = T::lit(nr as f64);
        match arch {
            Architecture::Analog => n * (self.lna + self.phase_shifter) + self.combiner + self.mixer,
            Architecture::Digital => n * (self.lna + self.mixer),
        }
    }

    /// Number of ADCs the architecture runs (two per I/Q pair).
    pub fn adc_count(arch: Architecture, nr: usize) -> usize {
        match arch {
            Architecture::Analog => 2,
            Architecture::Digital => 2 * nr,
        }
    }

    /// Total receiver power.
    pub fn p_total(&self, arch: Architecture, nr: usize, bandwidth: T, bins: usize) -> T {
        self.fixed_cost(arch, nr) + T::lit(Self::adc_count(arch, nr) as f64) * self.p_adc(bandwidth, bins)
    }

    /// Largest bandwidth keeping `p_total` within `budget`. Callers clamp
    /// the result to the available band.
    pub fn max_bandwidth(&self, arch: Architecture, nr: usize, bins: usize, budget: T) -> Result<T> {
        if bins == 0 {
            return Err(Error::InvalidArgument("bins must be at least 1".into()));
        }
        let fixed = self.fixed_cost(arch, nr);
        let residual = budget - fixed;
        if residual < T::zero() {
            let reason = if fixed > T::zero() {
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
            return Err(Error::Infeasible(reason));
        }
        let per_hz = T::lit(Self::adc_count(arch, nr) as f64) * self.adc_energy * T::lit(bins as f64);
        Ok(residual / per_hz)
    }

    /// Power left for the ADCs after the fixed components, or an
    /// infeasibility if the fixed part alone breaks the budget.
    pub fn adc_budget(&self, arch: Architecture, nr: usize, budget: T) -> Result<T> {
        let fixed = self.fixed_cost(arch, nr);
        let residual = budget - fixed;
        if residual > T::zero() {
            Ok(residual)
        } else if fixed > budget {
            Err(Error::Infeasible(Infeasibility::NoAntennasAffordable {
                fixed_cost: fixed.to_f64_lossy(),
                budget: budget.to_f64_lossy(),
            }))
        } else {
            Err(Error::Infeasible(Infeasibility::NoAdcPower {
                fixed_cost: fixed.to_f64_lossy(),
                budget: budget.to_f64_lossy(),
            }))
        }
    }
}
