use std::fs::File;
use std::io::{self, BufWriter, Write};

use clap::Args;
use evseq_core::{AnyTest, EffectSpec, ModelKind, StoppingRule, TrajectoryRecord};

use crate::fail::Failure;
use crate::format::g17;
use crate::input::{self, Format};
use crate::plot::{self, PlotPoint, TRAJECTORY_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModelArg {
    T,
    Chisq,
    Linreg,
    Bernoulli,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::T => ModelKind::T,
            ModelArg::Chisq => ModelKind::ChiSq,
            ModelArg::Linreg => ModelKind::Linreg,
            ModelArg::Bernoulli => ModelKind::Bernoulli,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Null boundary: effect size (t, linreg), scale (chisq) or success probability (bernoulli).
    #[arg(long = "delta0", visible_aliases = ["sigma0", "theta0"], allow_negative_numbers = true)]
    pub delta0: f64,
    /// Point alternative.
    #[arg(long = "dplus", visible_aliases = ["delta-plus", "sigma-plus", "theta-plus"], allow_negative_numbers = true,
          required_unless_present = "prior", conflicts_with = "prior")]
    pub dplus: Option<f64>,
    /// CSV prior over the alternative with columns delta,weight.
    #[arg(long)]
    pub prior: Option<String>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Data file, or - for standard input.
    #[arg(long, default_value = "-")]
    pub input: String,
    /// Trajectory file; standard output if omitted.
    #[arg(long)]
    pub output: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Also write an SVG plot of the trajectory.
    #[arg(long)]
    pub plot: Option<String>,
}

pub fn trajectory_line(rec: &TrajectoryRecord) -> String {
    let log10_e = rec.log_e / std::f64::consts::LN_10;
    format!("{},{},{},{},{}", rec.n, g17(rec.statistic), g17(log10_e), g17(rec.log_e.exp()), rec.rejected)
}

fn out_writer(path: Option<&str>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        None | Some("-") => Box::new(BufWriter::new(io::stdout())),
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Failure::io(p, e))?)),
    })
}

pub fn run(args: &RunArgs) -> Result<(), Failure> {
    let kind = ModelKind::from(args.model);
    let rule = StoppingRule::new(args.alpha).map_err(Failure::setup)?;
    let spec = match (&args.dplus, &args.prior) {
        (Some(alt), None) => EffectSpec::point(args.delta0, *alt),
        (None, Some(path)) => EffectSpec::prior(args.delta0, input::read_prior(path)?).map_err(Failure::setup)?,
        _ => return Err(Failure::config("give exactly one of --dplus or --prior")),
    };
    let void = !spec.guarantee_holds();
    let rows = input::rows(kind, args.format, input::open(&args.input)?)?;
    let mut test = AnyTest::new(kind, spec, rule, rows.nuisance_dim).map_err(Failure::setup)?;

    let mut out = out_writer(args.output.as_deref())?;
    let live = args.input == "-";
    let write_err = |e| Failure::io("writing trajectory", e);
    writeln!(out, "{TRAJECTORY_HEADER}").map_err(write_err)?;
    let mut uninformative = 0usize;
    let mut outcome = Ok(());
    for item in rows {
        let rec = match item.and_then(|(row, datum)| test.observe(&datum).map_err(|e| Failure::at_row(row, e))) {
            Ok(rec) => rec,
            Err(f) => {
                outcome = Err(f);
                break;
            }
        };
        uninformative += usize::from(!rec.informative);
        writeln!(out, "{}", trajectory_line(&rec)).map_err(write_err)?;
        if live {
            out.flush().map_err(write_err)?;
        }
    }
    out.flush().map_err(write_err)?;

    let traj = test.trajectory();
    let tau = traj.first_crossing().map_or_else(|| "none".to_string(), |n| n.to_string());
    eprintln!("model = {kind}, alpha = {}, threshold = {}", args.alpha, rule.threshold());
    eprintln!("observations = {}, final e = {}", test.n(), g17(test.log_e().exp()));
    eprintln!("tau = {tau}");
    eprintln!("uninformative steps = {uninformative}");
    if void {
        eprintln!("guarantee = void (alternative below the null boundary)");
    }
    outcome?;

    if let Some(path) = &args.plot {
        let points: Vec<PlotPoint> = traj
            .records()
            .iter()
            .map(|r| PlotPoint { n: r.n, log10_e: r.log_e / std::f64::consts::LN_10, rejected: r.rejected })
            .collect();
        if points.is_empty() {
            return Err(Failure::data("empty trajectory: nothing to plot"));
        }
        std::fs::write(path, plot::render(&points, args.alpha)).map_err(|e| Failure::io(path, e))?;
    }
    Ok(())
}
