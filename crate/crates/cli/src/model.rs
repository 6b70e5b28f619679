//! Shared model flags and their translation into a validated spec.

use clap::{Args, ValueEnum};
use mixprior_core::priors::{ComponentCountPrior, ModelSpec, TruncationPolicy};

use crate::commands::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    /// Dirichlet process mixture (needs --alpha).
    Dpm,
    /// Constant Dirichlet parameter (needs --gamma and --prior-k).
    Static,
    /// Dirichlet parameter alpha/K (needs --alpha and --prior-k).
    Dynamic,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model class.
    #[arg(long, value_enum)]
    pub model: ModelKind,

    /// Sample size N.
    #[arg(long)]
    pub n: u32,

    /// Concentration (dpm) or dynamic hyperparameter (dynamic).
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Dirichlet parameter for the static model.
    #[arg(long)]
    pub gamma: Option<f64>,

    /// Prior on the number of components:
    /// uniform:LO:HI | geometric:P | bnb:R:A:B | fixed:K | infinity.
    #[arg(long = "prior-k")]
    pub prior_k: Option<String>,

    /// Hard cap on the truncation over K.
    #[arg(long)]
    pub kmax: Option<u32>,

    /// Tail mass allowed beyond the truncation point.
    #[arg(long)]
    pub eps: Option<f64>,
}

impl ModelArgs {
    pub fn to_spec(&self) -> Result<ModelSpec, CliError> {
        self.spec_with(self.n, self.alpha, self.gamma)
    }

    /// Build a spec with overridden fields (used by sweeps).
    pub fn spec_with(
        &self,
        n: u32,
        alpha: Option<f64>,
        gamma: Option<f64>,
    ) -> Result<ModelSpec, CliError> {
        let policy = self.policy()?;
        let spec = match self.model {
            ModelKind::Dpm => {
                let alpha = alpha.ok_or_else(|| usage("--model dpm requires --alpha"))?;
                if self.gamma.is_some() {
                    return Err(usage("--gamma makes no sense for a Dirichlet process"));
                }
                if let Some(p) = &self.prior_k {
                    if p != "infinity" {
                        return Err(usage("--model dpm admits only --prior-k infinity"));
                    }
                }
                ModelSpec::dpm(n, alpha)
            }
            ModelKind::Static => {
                let gamma = gamma.ok_or_else(|| usage("--model static requires --gamma"))?;
                if self.alpha.is_some() {
                    return Err(usage("--alpha makes no sense for a static mixture"));
                }
                ModelSpec::static_mfm(n, gamma, self.parse_prior()?)
            }
            ModelKind::Dynamic => {
                let alpha = alpha.ok_or_else(|| usage("--model dynamic requires --alpha"))?;
                if self.gamma.is_some() {
                    return Err(usage("--gamma makes no sense for a dynamic mixture"));
                }
                ModelSpec::dynamic_mfm(n, alpha, self.parse_prior()?)
            }
        };
        spec.map_err(|e| usage(&e.to_string()))?
            .with_truncation(policy)
            .map_err(|e| usage(&e.to_string()))
    }

    fn parse_prior(&self) -> Result<ComponentCountPrior, CliError> {
        let s = self
            .prior_k
            .as_deref()
            .ok_or_else(|| usage("this model class requires --prior-k"))?;
        let prior: ComponentCountPrior = s.parse().map_err(|e: mixprior_core::Error| {
            usage(&e.to_string())
        })?;
        if prior.is_infinite() {
            return Err(usage(
                "--prior-k infinity describes a Dirichlet process; use --model dpm",
            ));
        }
        Ok(prior)
    }

    fn policy(&self) -> Result<TruncationPolicy, CliError> {
        let default = TruncationPolicy::default();
        TruncationPolicy::new(
            self.eps.unwrap_or(default.tail_mass_epsilon()),
            self.kmax.unwrap_or(default.hard_cap()),
            default.min_covered_mass_warn(),
        )
        .map_err(|e| usage(&e.to_string()))
    }
}

pub fn usage(msg: &str) -> CliError {
    CliError::Usage(msg.to_string())
}

/// Comma-separated positive integers (`--kplus 2,4,6,8`, `--sizes 3,2,1`).
pub fn parse_u32_list(s: &str, what: &str) -> Result<Vec<u32>, CliError> {
    let values: Result<Vec<u32>, _> = s.split(',').map(|t| t.trim().parse::<u32>()).collect();
    match values {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(usage(&format!("cannot parse {what} list {s:?}"))),
    }
}

/// Comma-separated reals for sweep grids.
pub fn parse_f64_list(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    let values: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    match values {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(usage(&format!("cannot parse {what} list {s:?}"))),
    }
}
