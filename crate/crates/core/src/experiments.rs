//! Experiment drivers producing deterministic CSV tables.
//!
//! Each driver returns typed rows; [`Report`] renders them with a fixed
//! column order and float formatting, preceded by one `#` comment line that
//! records the seed and the other settings that shape the numbers.

use std::fmt::Write as _;

use crate::config::{Experiment, Resolved, Scenario};
use crate::error::{Error, Result};
use crate::oracle::{fig2_comparison, Fig2Row};
use crate::quantizer::{beta_approx, ApproxParams, BetaTable};
use crate::rates::{Architecture, Csit, LinkConfig};
use crate::sweep::{
    joint_optimize_cached, siso_optimize, with_thread_cap, BatchCache, RateResult, SearchSpace, SisoOptimum,
    Topology,
};

/// Column header of every design-sweep CSV.
pub const SWEEP_COLUMNS: &str = "scenario,arch,csit,P_tot_mW,N,b,W_GHz,rate_Gbps,stderr_Gbps,power_mW,feasible";

/// One rendered table.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub experiment: Experiment,
    /// Settings comment, without the leading `# `.
    pub comment: String,
    pub columns: String,
    pub rows: Vec<String>,
    /// One human-readable line per row.
    pub summaries: Vec<String>,
}

impl Report {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {}", self.comment);
        let _ = writeln!(out, "{}", self.columns);
        for r in &self.rows {
            let _ = writeln!(out, "{r}");
        }
        out
    }
}

/// Quantizer table row.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizerRow {
    pub bins: usize,
    pub beta_lloyd: f64,
    /// `None` where a·b⁻² > 1.
    pub beta_approx: Option<f64>,
    pub alpha: f64,
}

pub fn quantizer_rows(cfg: &Resolved) -> Result<Vec<QuantizerRow>> {
    let table = BetaTable::<f64>::lloyd_max(cfg.bins.iter().copied().max().unwrap_or(1))?;
    cfg.bins
        .iter()
        .map(|&b| {
            let beta = table
                .get(b)
                .ok_or_else(|| Error::InvalidArgument(format!("bins {b} out of range")))?;
            let approx = match beta_approx(b, ApproxParams::default()) {
                Ok(v) => Some(v),
                Err(Error::Domain { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok(QuantizerRow {
                bins: b,
                beta_lloyd: beta,
                beta_approx: approx,
                alpha: 1.0 - beta,
            })
        })
        .collect()
}

pub fn fig2_rows(cfg: &Resolved) -> Result<Vec<Fig2Row>> {
    if let Some(db) = cfg.snr_db.iter().find(|d| !(-20.0..=25.0).contains(*d)) {
        return Err(Error::Config(format!("fig2 SNR {db} dB outside [-20, 25] dB")));
    }
    with_thread_cap(|| fig2_comparison(&cfg.snr_db, &cfg.bins, cfg.oracle_tol))
}

/// SISO optimum at one SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct Fig3Row {
    pub snr_db: f64,
    /// `None` if the budget admits no design.
    pub optimum: Option<SisoOptimum<f64>>,
}

pub fn fig3_rows(cfg: &Resolved) -> Result<Vec<Fig3Row>> {
    let betas = BetaTable::<f64>::lloyd_max(cfg.b_max)?;
    let budget = first_budget(cfg)?;
    cfg.snr_db
        .iter()
        .map(|&db| {
            let link = LinkConfig::from_full_band_snr_db(db, cfg.total_bandwidth, 1, 1, Architecture::Digital, Csit::No);
            let optimum = match siso_optimize(budget, 1.0, &link, &cfg.power, cfg.budget_mode, &betas) {
                Ok(o) => Some(o),
                Err(Error::Infeasible(_)) => None,
                Err(e) => return Err(e),
            };
            Ok(Fig3Row { snr_db: db, optimum })
        })
        .collect()
}

fn first_budget(cfg: &Resolved) -> Result<f64> {
    cfg.budgets_mw
        .first()
        .map(|b| b * 1e-3)
        .ok_or_else(|| Error::Config("no budget configured".into()))
}

/// One design-sweep row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Topology, SNR and any pinned resolution, e.g. `mimo@0dB` or
    /// `simo@-10dB/b=2`.
    pub scenario: String,
    pub arch: Architecture,
    pub csit: Csit,
    /// Watts.
    pub budget: f64,
    /// `None` when no design fits the budget.
    pub result: Option<RateResult<f64>>,
}

impl SweepRow {
    pub fn feasible(&self) -> bool {
        self.result.is_some()
    }

    pub fn rate_gbps(&self) -> Option<f64> {
        self.result.map(|r| r.mean_rate / 1e9)
    }

    fn csv(&self) -> String {
        let head = format!(
            "{},{},{},{:.3}",
            self.scenario,
            self.arch.short(),
            self.csit.label(),
            self.budget * 1e3
        );
        match &self.result {
            Some(r) => format!(
                "{head},{},{},{:.6},{:.6},{:.6},{:.6},true",
                r.design.n,
                r.design.bins,
                r.design.bandwidth / 1e9,
                r.mean_rate / 1e9,
                r.std_err / 1e9,
                r.consumed_power * 1e3
            ),
            None => format!("{head},,,,,,,false"),
        }
    }

    fn summary(&self, experiment: Experiment) -> String {
        let who = format!(
            "{} {} {}-{} {:.0} mW",
            experiment.name(),
            self.scenario,
            self.arch.short(),
            self.csit.label(),
            self.budget * 1e3
        );
        match &self.result {
            Some(r) => format!(
                "{who}: {:.3} ± {:.3} Gbit/s at N={} b={} W={:.3} GHz ({:.2} mW)",
                r.mean_rate / 1e9,
                r.ci_half_width / 1e9,
                r.design.n,
                r.design.bins,
                r.design.bandwidth / 1e9,
                r.consumed_power * 1e3
            ),
            None => format!("{who}: infeasible"),
        }
    }
}

fn db_label(db: f64) -> String {
    if db == db.trunc() {
        format!("{db:.0}dB")
    } else {
        format!("{db}dB")
    }
}

/// Shared state of the sweep experiments.
struct SweepRunner<'a> {
    cfg: &'a Resolved,
    betas: BetaTable<f64>,
    cache: BatchCache<f64>,
}

impl<'a> SweepRunner<'a> {
    fn new(cfg: &'a Resolved) -> Result<Self> {
        Ok(Self {
            cfg,
            betas: BetaTable::lloyd_max(cfg.b_max)?,
            cache: BatchCache::new(cfg.mc),
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn row(
        &self,
        label: String,
        scenario: Scenario,
        budget: f64,
        snr_db: f64,
        topology: Topology,
        antennas: &[usize],
        bins: &[usize],
        w_refine: usize,
    ) -> Result<SweepRow> {
        let link = LinkConfig::from_full_band_snr_db(
            snr_db,
            self.cfg.total_bandwidth,
            1,
            1,
            scenario.arch,
            scenario.csit,
        );
        let space = SearchSpace {
            antennas: antennas.to_vec(),
            bins: bins.to_vec(),
            topology,
            w_refine,
        };
        let result = match joint_optimize_cached(
            budget,
            scenario.arch,
            scenario.csit,
            &link,
            &self.cfg.effective_power(),
            &space,
            &self.betas,
            &self.cache,
        ) {
            Ok(o) => Some(o.best),
            Err(Error::Infeasible(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(SweepRow {
            scenario: label,
            arch: scenario.arch,
            csit: scenario.csit,
            budget,
            result,
        })
    }
}

/// Optimized design for every budget × SNR × scenario of `cfg`, over its
/// antenna and resolution ranges.
pub fn sweep_rows(cfg: &Resolved) -> Result<Vec<SweepRow>> {
    with_thread_cap(|| {
        let runner = SweepRunner::new(cfg)?;
        let mut rows = Vec::new();
        for &budget_mw in &cfg.budgets_mw {
            for &db in &cfg.snr_db {
                for &sc in &cfg.scenarios {
                    rows.push(runner.row(
                        format!("{}@{}", cfg.topology.label(), db_label(db)),
                        sc,
                        budget_mw * 1e-3,
                        db,
                        cfg.topology,
                        &cfg.antennas,
                        &cfg.bins,
                        cfg.w_refine,
                    )?);
                }
            }
        }
        Ok(rows)
    })
}

/// Fixed-`N` comparison of `1 × N` SIMO and `N × N` MIMO across SNR
/// (first configured antenna count). SIMO with digital combining also gets
/// rows pinned to 2 and 3 bins.
pub fn fig4_rows(cfg: &Resolved) -> Result<Vec<SweepRow>> {
    let n = *cfg
        .antennas
        .first()
        .ok_or_else(|| Error::Config("no antenna count configured".into()))?;
    with_thread_cap(|| {
        let runner = SweepRunner::new(cfg)?;
        let budget = first_budget(cfg)?;
        let mut rows = Vec::new();
        for &db in &cfg.snr_db {
            for topology in [Topology::Simo, Topology::Mimo] {
                let label = format!("{}@{}", topology.label(), db_label(db));
                for &sc in &cfg.scenarios {
                    rows.push(runner.row(label.clone(), sc, budget, db, topology, &[n], &cfg.bins, cfg.w_refine)?);
                }
                rows.extend(pinned_simo_rows(&runner, cfg, topology, &label, budget, db, n)?);
            }
        }
        Ok(rows)
    })
}

fn pinned_simo_rows(
    runner: &SweepRunner<'_>,
    cfg: &Resolved,
    topology: Topology,
    label: &str,
    budget: f64,
    db: f64,
    n: usize,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    if topology != Topology::Simo {
        return Ok(rows);
    }
    for sc in cfg.scenarios.iter().filter(|s| s.arch == Architecture::Digital) {
        for b in [2usize, 3] {
            if b <= cfg.b_max {
                rows.push(runner.row(format!("{label}/b={b}"), *sc, budget, db, topology, &[n], &[b], 0)?);
            }
        }
    }
    Ok(rows)
}

/// Rate versus antenna count at each configured SNR, for SIMO and MIMO.
pub fn fig5_rows(cfg: &Resolved) -> Result<Vec<SweepRow>> {
    with_thread_cap(|| {
        let runner = SweepRunner::new(cfg)?;
        let budget = first_budget(cfg)?;
        let mut rows = Vec::new();
        for &db in &cfg.snr_db {
            for topology in [Topology::Simo, Topology::Mimo] {
                for &n in &cfg.antennas {
                    let label = format!("{}@{}/N={n}", topology.label(), db_label(db));
                    for &sc in &cfg.scenarios {
                        rows.push(runner.row(label.clone(), sc, budget, db, topology, &[n], &cfg.bins, cfg.w_refine)?);
                    }
                    rows.extend(pinned_simo_rows(&runner, cfg, topology, &label, budget, db, n)?);
                }
            }
        }
        Ok(rows)
    })
}

fn comment(cfg: &Resolved) -> String {
    let snr = cfg
        .snr_db
        .iter()
        .map(|s| format!("{s}"))
        .collect::<Vec<_>>()
        .join(";");
    let mut c = format!(
        "adc-planner experiment={} seed={} samples={} snr_db={} total_bandwidth_GHz={}",
        cfg.experiment.name(),
        cfg.mc.seed,
        cfg.mc.samples,
        snr,
        cfg.total_bandwidth / 1e9
    );
    match cfg.experiment {
        Experiment::Quantizer | Experiment::Fig2 => {}
        _ => {
            let _ = write!(
                c,
                " budget_mode={} b_max={} w_refine={}",
                match cfg.budget_mode {
                    crate::sweep::BudgetMode::AdcOnly => "adc-only",
                    crate::sweep::BudgetMode::Full => "full",
                },
                cfg.b_max,
                cfg.w_refine
            );
        }
    }
    c
}

fn sweep_report(cfg: &Resolved, rows: Vec<SweepRow>) -> Report {
    Report {
        experiment: cfg.experiment,
        comment: comment(cfg),
        columns: SWEEP_COLUMNS.into(),
        summaries: rows.iter().map(|r| r.summary(cfg.experiment)).collect(),
        rows: rows.iter().map(SweepRow::csv).collect(),
    }
}

/// Runs the experiment selected in `cfg`.
pub fn run(cfg: &Resolved) -> Result<Report> {
    cfg.validate()?;
    match cfg.experiment {
        Experiment::Quantizer => {
            let rows = quantizer_rows(cfg)?;
            Ok(Report {
                experiment: cfg.experiment,
                comment: comment(cfg),
                columns: "b,beta_lloyd,beta_approx,alpha".into(),
                summaries: rows
                    .iter()
                    .map(|r| format!("quantizer b={}: beta={:.6} alpha={:.6}", r.bins, r.beta_lloyd, r.alpha))
                    .collect(),
                rows: rows
                    .iter()
                    .map(|r| {
                        let approx = r.beta_approx.map_or_else(String::new, |v| format!("{v:.9}"));
                        format!("{},{:.9},{approx},{:.9}", r.bins, r.beta_lloyd, r.alpha)
                    })
                    .collect(),
            })
        }
        Experiment::Fig2 => {
            let rows = fig2_rows(cfg)?;
            Ok(Report {
                experiment: cfg.experiment,
                comment: comment(cfg),
                columns: "snr_db,b,capacity_bph,aqnm_bph,ratio".into(),
                summaries: rows
                    .iter()
                    .map(|r| {
                        format!(
                            "fig2 {} dB b={}: capacity {:.4} b/s/Hz, AQNM {:.4} b/s/Hz, ratio {:.4}",
                            r.snr_db, r.bins, r.capacity_bph, r.aqnm_bph, r.ratio
                        )
                    })
                    .collect(),
                rows: rows
                    .iter()
                    .map(|r| {
                        format!(
                            "{},{},{:.6},{:.6},{:.6}",
                            r.snr_db, r.bins, r.capacity_bph, r.aqnm_bph, r.ratio
                        )
                    })
                    .collect(),
            })
        }
        Experiment::Fig3 => {
            let rows = fig3_rows(cfg)?;
            Ok(Report {
                experiment: cfg.experiment,
                comment: comment(cfg),
                columns: "snr_db,b,W_GHz,rate_Gbps,power_mW,relaxed_W_GHz,relaxed_b,relaxed_rate_Gbps,feasible".into(),
                summaries: rows
                    .iter()
                    .map(|r| match &r.optimum {
                        Some(o) => format!(
                            "fig3 {} dB: b={} W={:.4} GHz rate={:.4} Gbit/s",
                            r.snr_db,
                            o.bins,
                            o.bandwidth / 1e9,
                            o.rate / 1e9
                        ),
                        None => format!("fig3 {} dB: infeasible", r.snr_db),
                    })
                    .collect(),
                rows: rows
                    .iter()
                    .map(|r| match &r.optimum {
                        Some(o) => {
                            let relaxed = o.relaxed.map_or_else(
                                || ",,".to_string(),
                                |x| format!("{:.6},{:.6},{:.6}", x.bandwidth / 1e9, x.bins, x.rate / 1e9),
                            );
                            format!(
                                "{},{},{:.6},{:.6},{:.6},{relaxed},true",
                                r.snr_db,
                                o.bins,
                                o.bandwidth / 1e9,
                                o.rate / 1e9,
                                o.consumed_power * 1e3
                            )
                        }
                        None => format!("{},,,,,,,,false", r.snr_db),
                    })
                    .collect(),
            })
        }
        Experiment::Fig4 => Ok(sweep_report(cfg, fig4_rows(cfg)?)),
        Experiment::Fig5 => Ok(sweep_report(cfg, fig5_rows(cfg)?)),
        Experiment::Table1 | Experiment::Custom => Ok(sweep_report(cfg, sweep_rows(cfg)?)),
    }
}
