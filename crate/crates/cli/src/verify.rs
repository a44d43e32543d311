use clap::{Args, Subcommand};
use evseq_core::verify::{
    self, Covariates, Generator, SimConfig, VerificationReport,
};
use evseq_core::{EffectSpec, ModelKind, StoppingRule};

use crate::fail::{Failure, EXIT_FAIL};
use crate::input;
use crate::run::ModelArg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GeneratorArg {
    Gaussian,
    Rademacher,
    Bernoulli,
    Regression,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    #[arg(long = "delta0", visible_aliases = ["sigma0", "theta0"], allow_negative_numbers = true)]
    pub delta0: f64,
    #[arg(long = "dplus", visible_aliases = ["delta-plus", "sigma-plus", "theta-plus"], allow_negative_numbers = true,
          required_unless_present = "prior", conflicts_with = "prior")]
    pub dplus: Option<f64>,
    #[arg(long)]
    pub prior: Option<String>,
    /// Data-generating process; defaults to the model's own family.
    #[arg(long, value_enum)]
    pub generator: Option<GeneratorArg>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
    /// Effect size of the regression generator.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub delta: f64,
    /// Nuisance coefficients of the regression generator.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub beta: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
}

impl SimArgs {
    fn spec(&self) -> Result<EffectSpec, Failure> {
        match (&self.dplus, &self.prior) {
            (Some(alt), None) => Ok(EffectSpec::point(self.delta0, *alt)),
            (None, Some(path)) => EffectSpec::prior(self.delta0, input::read_prior(path)?).map_err(Failure::setup),
            _ => Err(Failure::config("give exactly one of --dplus or --prior")),
        }
    }

    fn sim(&self, checkpoints: Vec<u64>) -> Result<SimConfig, Failure> {
        let kind = ModelKind::from(self.model);
        let gen = self.generator.unwrap_or(match kind {
            ModelKind::T | ModelKind::ChiSq => GeneratorArg::Gaussian,
            ModelKind::Bernoulli => GeneratorArg::Bernoulli,
            ModelKind::Linreg => GeneratorArg::Regression,
        });
        let generator = match gen {
            GeneratorArg::Gaussian => Generator::Gaussian { mu: self.mu, sigma: self.sigma },
            GeneratorArg::Rademacher => Generator::Rademacher,
            GeneratorArg::Bernoulli => Generator::Bernoulli { theta: self.theta },
            GeneratorArg::Regression => Generator::Regression {
                delta: self.delta,
                beta: self.beta.clone(),
                sigma: self.sigma,
                covariates: Covariates::default(),
            },
        };
        SimConfig::new(generator, self.seed, self.reps, checkpoints).map_err(Failure::setup)
    }
}

#[derive(Debug, Subcommand)]
pub enum VerifyCmd {
    /// Exact Rademacher expectations and the extrapolated δ⁴ coefficient.
    Counterexample {
        #[arg(long, default_value_t = 5)]
        n: u32,
        #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.05")]
        deltas: Vec<f64>,
    },
    /// Monotone likelihood ratio of the noncentral t on a grid.
    Mlr {
        #[arg(long)]
        nu: f64,
        #[arg(long, allow_negative_numbers = true)]
        lplus: f64,
        #[arg(long, allow_negative_numbers = true)]
        l0: f64,
        #[arg(long, default_value_t = -15.0, allow_negative_numbers = true)]
        grid_min: f64,
        #[arg(long, default_value_t = 15.0, allow_negative_numbers = true)]
        grid_max: f64,
        #[arg(long, default_value_t = 0.01)]
        grid_step: f64,
    },
    /// E-variable integral h(λ) over a grid of true noncentralities.
    Evariable {
        #[arg(long)]
        nu: f64,
        #[arg(long, allow_negative_numbers = true)]
        lplus: f64,
        #[arg(long, allow_negative_numbers = true)]
        l0: f64,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "-2,-1,-0.5,0,0.5,1,2")]
        lambdas: Vec<f64>,
    },
    /// Monte Carlo mean of the e-value at checkpoints.
    Mc {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, value_delimiter = ',', default_value = "2,5,10,25")]
        checkpoints: Vec<u64>,
    },
    /// Rejection frequency of the anytime test up to a horizon.
    Type1 {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 100)]
        horizon: u64,
    },
    /// Mean log e-value at sample size n (diagnostic).
    Epower {
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        n: u64,
    },
    /// Mixed-derivative positivity and T-monotonicity of the Bernoulli ratio.
    BernPositivity {
        #[arg(long, value_delimiter = ',', default_value = "0.501,0.55,0.6,0.7,0.8,0.9,0.99")]
        thetas: Vec<f64>,
        #[arg(long, default_value_t = 30)]
        n_max: u64,
    },
    /// Exact Rademacher expectation against Monte Carlo.
    Rademacher {
        #[arg(long)]
        n: u32,
        #[arg(long, allow_negative_numbers = true)]
        delta: f64,
        #[arg(long, default_value_t = 1_000_000)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(subcommand)]
    pub cmd: VerifyCmd,
    /// Report file; standard output if omitted.
    #[arg(long, global = true)]
    pub output: Option<String>,
}

fn report(cmd: &VerifyCmd) -> Result<VerificationReport, Failure> {
    let r = match cmd {
        VerifyCmd::Counterexample { n, deltas } => verify::counterexample_report(*n, deltas),
        VerifyCmd::Mlr { nu, lplus, l0, grid_min, grid_max, grid_step } => {
            if !(grid_step > &0.0 && grid_max >= grid_min) {
                return Err(Failure::config("grid needs step > 0 and max >= min"));
            }
            verify::mlr_report(*nu, *lplus, *l0, &verify::linspace_step(*grid_min, *grid_max, *grid_step))
        }
        VerifyCmd::Evariable { nu, lplus, l0, lambdas } => verify::evariable_report(*nu, *lplus, *l0, lambdas),
        VerifyCmd::Mc { sim, checkpoints } => {
            verify::mc_expectation(sim.model.into(), &sim.spec()?, &sim.sim(checkpoints.clone())?)
        }
        VerifyCmd::Type1 { sim, alpha, horizon } => {
            let rule = StoppingRule::new(*alpha).map_err(Failure::setup)?;
            verify::type1_error_mc(sim.model.into(), &sim.spec()?, &rule, *horizon, &sim.sim(vec![*horizon])?)
        }
        VerifyCmd::Epower { sim, n } => verify::epower_estimate(sim.model.into(), &sim.spec()?, *n, &sim.sim(vec![*n])?),
        VerifyCmd::BernPositivity { thetas, n_max } => verify::bern_report(thetas, *n_max),
        VerifyCmd::Rademacher { n, delta, reps, seed } => verify::rademacher_mc_report(*n, *delta, *reps, *seed),
    };
    r.map_err(|e| match e {
        evseq_core::Error::Config(_) | evseq_core::Error::Contract(_) => Failure::setup(e),
        other => other.into(),
    })
}

pub fn run(args: &VerifyArgs) -> Result<(), Failure> {
    let rep = report(&args.cmd)?;
    let text = rep.to_json_pretty() + "\n";
    match args.output.as_deref() {
        None | Some("-") => print!("{text}"),
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::io(path, e))?,
    }
    eprintln!("{}: {}", rep.check, if rep.pass { "pass" } else { "FAIL" });
    if rep.pass {
        Ok(())
    } else {
        Err(Failure { code: EXIT_FAIL, message: format!("{} check failed", rep.check) })
    }
}
