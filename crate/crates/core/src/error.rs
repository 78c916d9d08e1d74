use thiserror::Error;

/// Errors produced by the planner library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The additive noise approximation is outside its valid range.
    #[error("approximation a*b^-2 = {value} exceeds 1 at b = {bins}")]
    Domain { bins: usize, value: f64 },

    /// An iterative routine stopped before reaching its tolerance.
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
        /// Last iterate, flattened, for diagnostics.
        last: Vec<f64>,
    },

    #[error("infeasible design: {0}")]
    Infeasible(Infeasibility),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Why a power budget cannot support a design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Infeasibility {
    /// The bandwidth-independent front-end cost already exceeds the budget.
    NoAntennasAffordable { fixed_cost: f64, budget: f64 },
    /// Fixed costs fit but no power remains for sampling.
    NoAdcPower { fixed_cost: f64, budget: f64 },
    /// No candidate in the searched grid fits the budget.
    EmptyDesignSet,
}

impl std::fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Infeasibility::NoAntennasAffordable { fixed_cost, budget } => write!(
                f,
                "fixed front-end cost {:.3} mW exceeds budget {:.3} mW",
                fixed_cost * 1e3,
                budget * 1e3
            ),
            Infeasibility::NoAdcPower { fixed_cost, budget } => write!(
                f,
                "fixed front-end cost {:.3} mW leaves no ADC power in budget {:.3} mW",
                fixed_cost * 1e3,
                budget * 1e3
            ),
            Infeasibility::EmptyDesignSet => write!(f, "no feasible design point"),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
