//! Command-line front end: `report`, `minimize`, `alpha0` and `verify`.
//!
//! Exit codes: 0 success, 1 validation error, 2 solver failure,
//! 3 counterexample found by `verify`.

pub mod config;
pub mod io;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::alpha0::{estimate_alpha0, Alpha0Estimate};
use crate::domain::{DiscreteDomain, DomainKind, Field};
use crate::error::{LabError, Result};
use crate::functionals::{evaluate, Params};
use crate::instanton::{half_space_threshold, sample_instanton, InstantonSpec};
use crate::minimize::{discretization_tolerance, minimize_psi, MinimizeConfig, Start};
use crate::sampling::random_cosine_field;
use crate::verify::run_verification;

use config::{CenterConfig, FieldConfig, NamedCenter, RunConfig};
use io::{domain_metadata, Report};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_COUNTEREXAMPLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "sobolev-lab",
    version,
    about = "Sharp Sobolev-type quotients on grids"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate every functional on one field.
    Report(RunArgs),
    /// Estimate S_alpha by multi-start descent.
    Minimize(RunArgs),
    /// Bracket alpha_0.
    Alpha0(RunArgs),
    /// Check the sharp inequality and its consequences on sample fields.
    Verify(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Overrides the seed of the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Outcome of a successful command.
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub counterexamples: usize,
}

pub fn exit_code(e: &LabError) -> i32 {
    match e {
        LabError::SolverFailure(_) | LabError::ClassificationInversion { .. } => EXIT_SOLVER,
        _ => EXIT_VALIDATION,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to stderr.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            };
        }
    };
    match run(&cli.command) {
        Ok(o) if o.counterexamples > 0 => {
            eprintln!("verify: {} counterexample(s) found", o.counterexamples);
            EXIT_COUNTEREXAMPLE
        }
        Ok(_) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cmd: &Command) -> Result<Outcome> {
    let args = match cmd {
        Command::Report(a) | Command::Minimize(a) | Command::Alpha0(a) | Command::Verify(a) => a,
    };
    if let Some(t) = args.threads {
        if t == 0 {
            return Err(LabError::InvalidParameter("--threads must be >= 1".into()));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    let mut cfg = RunConfig::parse(&io::read_text(&args.config)?)?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let base = args.config.parent().unwrap_or(Path::new("."));
    let ctx = Context {
        domain: cfg.domain.build()?,
        params: cfg.params()?,
        out: args.out.clone(),
        base: base.to_path_buf(),
        cfg,
    };
    let outcome = match cmd {
        Command::Report(_) => ctx.report()?,
        Command::Minimize(_) => ctx.minimize()?,
        Command::Alpha0(_) => ctx.alpha0()?,
        Command::Verify(_) => ctx.verify()?,
    };
    io::write_text(
        &ctx.out.join(&ctx.cfg.output.report),
        &outcome.report.render(),
    )?;
    Ok(outcome)
}

struct Context {
    cfg: RunConfig,
    domain: DiscreteDomain,
    params: Params,
    out: PathBuf,
    /// Directory relative field-file paths are resolved against.
    base: PathBuf,
}

impl Context {
    fn header(&self, command: &str) -> Report {
        let mut r = Report::new();
        r.text("command", command).text("seed", self.cfg.seed);
        domain_metadata(&mut r, &self.domain);
        r.float("a", self.params.a())
            .float("alpha", self.params.alpha());
        r
    }

    fn minimize_config(&self) -> Result<MinimizeConfig> {
        let mut m = self.cfg.minimize.build()?;
        if self.cfg.minimize.starts.is_empty() {
            for s in &mut m.starts {
                if let Start::Random(seed) = s {
                    *seed = self.cfg.seed;
                }
            }
        }
        Ok(m)
    }

    fn field(&self) -> Result<(String, Field)> {
        let d = &self.domain;
        let fc = self
            .cfg
            .field
            .clone()
            .unwrap_or(FieldConfig::Constant { value: 1.0 });
        Ok(match fc {
            FieldConfig::Constant { value } => ("constant".into(), Field::constant(d, value)),
            FieldConfig::Instanton {
                epsilon,
                center,
                cutoff_radius,
            } => {
                let c = match center {
                    CenterConfig::Named(NamedCenter::Interior) => d.center(),
                    CenterConfig::Named(NamedCenter::Boundary) => match d.kind() {
                        DomainKind::Box => d.face_center(0)?,
                        DomainKind::RadialBall => {
                            return Err(LabError::InvalidParameter(
                                "boundary instantons need a box domain".into(),
                            ))
                        }
                    },
                    CenterConfig::Point(p) => p,
                };
                let spec = InstantonSpec::new(epsilon, c, cutoff_radius);
                ("instanton".into(), sample_instanton(d, &spec)?)
            }
            FieldConfig::Random { seed } => {
                let s = seed.unwrap_or(self.cfg.seed);
                (format!("random_{s}"), random_cosine_field(d, s))
            }
            FieldConfig::File { path } => {
                let path = if path.is_absolute() {
                    path
                } else {
                    self.base.join(path)
                };
                let u = io::parse_field(d, &io::read_text(&path)?)?;
                (format!("file:{}", path.display()), u)
            }
        })
    }

    fn report(&self) -> Result<Outcome> {
        let (name, u) = self.field()?;
        let f = evaluate(&self.domain, &u, &self.params)?;
        let mut r = self.header("report");
        r.text("field", name)
            .float("grad_sq", f.grad_sq)
            .float("h1_norm_sq", f.h1_norm_sq)
            .float("l2", f.l2)
            .float("l2star", f.l2star)
            .float("l2sharp_int", f.l2sharp_int)
            .float("delta", f.delta)
            .float("beta", f.beta)
            .float("gamma", f.gamma)
            .float("psi", f.psi)
            .float("phi", f.phi)
            .float("nehari_t", f.nehari_t);
        Ok(Outcome {
            report: r,
            counterexamples: 0,
        })
    }

    fn minimize(&self) -> Result<Outcome> {
        let d = &self.domain;
        let m = self.minimize_config()?;
        let tol_disc = discretization_tolerance(d, &self.params)?;
        let res = minimize_psi(d, &self.params, &m)?;
        io::write_text(
            &self.out.join(&self.cfg.output.trace),
            &io::render_trace(res.trace()),
        )?;
        io::write_text(
            &self.out.join("best_field.txt"),
            &io::render_field(d, &res.best_field)?,
        )?;
        let c = &res.concentration;
        let mut r = self.header("minimize");
        r.float("s_alpha_estimate", res.s_alpha_estimate)
            .float("tol_disc", tol_disc)
            .text("converged", res.converged)
            .text("best_start", res.best_start)
            .float("max_value", c.max_value)
            .float("eps_scale", c.eps_scale)
            .text("grid_limited", c.eps_scale < 2.0 * d.min_spacing())
            .text("argmax_node", c.argmax_node)
            .floats("argmax_point", &c.argmax_point)
            .float("boundary_distance", c.boundary_distance)
            .float("mass_in_eps_ball_fraction", c.mass_in_eps_ball_fraction)
            .text("num_starts", res.starts.len());
        for (i, s) in res.starts.iter().enumerate() {
            r.text(format!("start_{i}_label"), s.start.label())
                .text(format!("start_{i}_status"), s.status.as_str())
                .float(format!("start_{i}_initial_psi"), s.initial_psi)
                .float(format!("start_{i}_final_psi"), s.final_psi)
                .float(format!("start_{i}_grad_norm"), s.grad_norm)
                .text(format!("start_{i}_iterations"), s.iterations);
            if let crate::minimize::StartStatus::Diverged(msg) = &s.status {
                r.text(format!("start_{i}_error"), msg);
            }
        }
        Ok(Outcome {
            report: r,
            counterexamples: 0,
        })
    }

    fn estimate(&self) -> Result<Alpha0Estimate> {
        estimate_alpha0(
            &self.domain,
            &self.params.with_alpha(0.0)?,
            &self.minimize_config()?,
            &self.cfg.alpha0.build(),
        )
    }

    fn alpha0(&self) -> Result<Outcome> {
        let est = self.estimate()?;
        let mut r = self.header("alpha0");
        alpha0_lines(&mut r, &est);
        Ok(Outcome {
            report: r,
            counterexamples: 0,
        })
    }

    fn verify(&self) -> Result<Outcome> {
        let d = &self.domain;
        let n = d.dimension();
        let a = self.params.a();
        let samples = self.cfg.verify.samples;
        let mut r = self.header("verify");
        let (alpha_hat, tol_disc) = match self.cfg.verify.alpha0_proxy {
            Some(p) => {
                if !(p.is_finite() && p >= 0.0) {
                    return Err(LabError::InvalidParameter(format!(
                        "alpha0_proxy must be >= 0, got {p}"
                    )));
                }
                r.text("alpha_hat_source", "proxy");
                (
                    p,
                    discretization_tolerance(d, &self.params.with_alpha(0.0)?)?,
                )
            }
            None if samples == 0 => {
                r.text("alpha_hat_source", "none");
                (0.0, 0.0)
            }
            None => {
                let est = self.estimate()?;
                r.text("alpha_hat_source", "bracket_upper");
                alpha0_lines(&mut r, &est);
                (est.upper, est.tol_disc)
            }
        };
        let threshold = half_space_threshold(n)?;
        let v = run_verification(d, a, alpha_hat, threshold, tol_disc, samples, self.cfg.seed)?;
        r.float("alpha_hat", v.alpha_hat)
            .float("threshold", v.threshold)
            .float("verify_tol_disc", v.tol_disc)
            .float("c_split", v.c_split)
            .text("random_samples", samples)
            .text("fields_checked", v.samples);
        for c in &v.checks {
            let k = c.check.name();
            r.text(format!("{k}_passed"), c.passed)
                .text(format!("{k}_failed"), c.failed)
                .float(format!("{k}_worst_margin"), c.worst_margin)
                .text(format!("{k}_worst_sample"), &c.worst_sample);
        }
        r.text("counterexamples", v.counterexamples.len());
        for (i, ce) in v.counterexamples.iter().enumerate() {
            let file = format!("counterexamples/{i}_{}.txt", ce.check.name());
            io::write_text(&self.out.join(&file), &io::render_field(d, &ce.field)?)?;
            r.text(format!("counterexample_{i}_check"), ce.check.name())
                .text(format!("counterexample_{i}_sample"), &ce.sample)
                .float(format!("counterexample_{i}_margin"), ce.margin)
                .text(format!("counterexample_{i}_file"), file);
        }
        Ok(Outcome {
            report: r,
            counterexamples: v.counterexamples.len(),
        })
    }
}

fn alpha0_lines(r: &mut Report, est: &Alpha0Estimate) {
    r.float("bracket_lower", est.lower)
        .float("bracket_upper", est.upper)
        .text("upper_resolved", est.upper_resolved)
        .float("threshold", est.threshold)
        .float("margin", est.margin)
        .float("tol_disc", est.tol_disc)
        .float("analytic_lower_bound", est.analytic_lower_bound)
        .text("num_evaluations", est.evaluations.len());
    for (i, e) in est.evaluations.iter().enumerate() {
        r.float(format!("eval_{i}_alpha"), e.alpha)
            .float(format!("eval_{i}_s_alpha"), e.s_alpha)
            .text(format!("eval_{i}_below"), e.below)
            .text(format!("eval_{i}_grid_limited"), e.grid_limited)
            .float(format!("eval_{i}_eps_scale"), e.eps_scale)
            .text(format!("eval_{i}_converged"), e.converged);
    }
}
