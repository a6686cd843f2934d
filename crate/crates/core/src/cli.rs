//! The `fmarkov` command-line front end. All file I/O lives here.
//!
//! Exit codes: 0 success, 1 validation or check failure, 2 usage error,
//! 3 capability or sizing refusal, 4 I/O or format error.

use std::ffi::OsString;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::approx::markov_approximation;
use crate::entropy::{big_f, big_f_star, f_markov, f_sequence, fmt_value, EntropyReport};
use crate::error::Error;
use crate::freegroup::{Domain, GroupKind, GroupSpec};
use crate::measure::{coarsen, sample, MeasureSource};
use crate::transition::{
    bernoulli_system, cyclic_system, flip_system, matching_system,
    permutation_system_from_positive, validate, wsf_system, TransitionSystem, USER_TOL,
};
use crate::verify::{self, DEFAULT_SEED};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CAPABILITY: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "fmarkov",
    version,
    about = "Markov chains over free groups and the f-invariant"
)]
pub struct Cli {
    /// Base of the logarithm used for printed entropies and f values.
    #[arg(long, value_enum, default_value_t = LogBase::E, global = true)]
    pub log_base: LogBase,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LogBase {
    #[value(name = "e")]
    E,
    #[value(name = "2")]
    Two,
}

impl LogBase {
    /// Multiplier turning nats into this base.
    pub fn scale(self) -> f64 {
        match self {
            LogBase::E => 1.0,
            LogBase::Two => 1.0 / std::f64::consts::LN_2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExampleKind {
    Wsf,
    Matching,
    Flip,
    Bernoulli,
    Perm,
    Cycle,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a built-in transition system.
    Example {
        kind: ExampleKind,
        #[arg(long, default_value_t = 2)]
        rank: usize,
        /// Use the free semigroup (flip, bernoulli, perm, cycle).
        #[arg(long)]
        semigroup: bool,
        /// Flip probability of the flip system.
        #[arg(long, default_value_t = 0.3)]
        eps: f64,
        /// Single-site law of the Bernoulli system.
        #[arg(long, value_delimiter = ',', default_value = "0.5,0.5")]
        p: Vec<f64>,
        /// Number of points (perm, cycle).
        #[arg(long)]
        n: Option<usize>,
        /// Permutations of the positive generators, `;`-separated lists of
        /// images (perm). Defaults to a rotation under `a` and the identity
        /// elsewhere.
        #[arg(long)]
        perms: Option<String>,
        /// Probability of staying put (cycle).
        #[arg(long, default_value_t = 0.2)]
        stay: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Print a validation report; exits 1 on violations.
    Validate {
        file: Option<PathBuf>,
        #[arg(long, default_value_t = USER_TOL)]
        tol: f64,
    },
    /// Print f from the closed form, cross-checked by F(alpha^0), F(alpha^1).
    Finv { file: Option<PathBuf> },
    /// Print the F(alpha^n) sequence as CSV.
    Fseq {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        nmax: usize,
        /// Also compute F* with this truncation.
        #[arg(long)]
        fstar: Option<usize>,
    },
    /// Write the exact marginal on B(e, radius) as JSON.
    Marginal {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        radius: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write sampled patterns on B(e, radius) as CSV.
    Sample {
        file: Option<PathBuf>,
        #[arg(long)]
        radius: usize,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write the depth-m Markov approximation and its f.
    Approx {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        depth: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the verification suite; exits 1 on any failure.
    Check {
        /// Run only checks with this name or name prefix.
        #[arg(long)]
        only: Option<String>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Print a JSON array instead of text lines.
        #[arg(long)]
        json: bool,
        /// List check names and exit.
        #[arg(long)]
        list: bool,
    },
}

#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Transition-system file; standard input when absent or `-`.
    pub file: Option<PathBuf>,
    /// Coarsen by a comma-separated list with one target label per state.
    #[arg(long, value_delimiter = ',')]
    pub coarsen: Option<Vec<String>>,
}

struct Io<'a> {
    stdin: &'a mut dyn Read,
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

/// Failure of a subcommand and the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidSystem(_) => EXIT_FAILURE,
            Error::Capability(_) => EXIT_CAPABILITY,
            Error::Io(_)
            | Error::Json(_)
            | Error::Format(_)
            | Error::Structural(_)
            | Error::NegativeProbability { .. }
            | Error::NotNormalized(_)
            | Error::InconsistentMarginals { .. } => EXIT_IO,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e).into()
    }
}

type Outcome = std::result::Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(
    args: I,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    let mut io = Io {
        stdin,
        stdout,
        stderr,
    };
    match execute(&cli, &mut io) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(io.stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn read_input(path: Option<&Path>, io: &mut Io) -> std::result::Result<String, Failure> {
    let mut text = String::new();
    match path {
        Some(p) if p != Path::new("-") => {
            text = fs::read_to_string(p).map_err(|e| Failure {
                code: EXIT_IO,
                message: format!("{}: {e}", p.display()),
            })?;
        }
        _ => {
            io.stdin.read_to_string(&mut text)?;
        }
    }
    Ok(text)
}

fn read_system(path: Option<&Path>, io: &mut Io) -> std::result::Result<TransitionSystem, Failure> {
    Ok(TransitionSystem::from_json(&read_input(path, io)?)?)
}

fn read_source(args: &SourceArgs, io: &mut Io) -> std::result::Result<MeasureSource, Failure> {
    let ts = read_system(args.file.as_deref(), io)?;
    Ok(match &args.coarsen {
        Some(labels) => coarsen(&ts, labels)?,
        None => MeasureSource::Markov(ts),
    })
}

fn write_output(path: Option<&Path>, text: &str, io: &mut Io) -> std::result::Result<(), Failure> {
    match path {
        Some(p) if p != Path::new("-") => fs::write(p, text).map_err(|e| Failure {
            code: EXIT_IO,
            message: format!("{}: {e}", p.display()),
        }),
        _ => Ok(io.stdout.write_all(text.as_bytes())?),
    }
}

fn with_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}

fn parse_perms(text: &str) -> std::result::Result<Vec<Vec<usize>>, Failure> {
    text.split(';')
        .map(|p| {
            p.split(',')
                .map(|x| x.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
        })
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Failure {
            code: EXIT_USAGE,
            message: format!("invalid --perms: {e}"),
        })
}

fn execute(cli: &Cli, io: &mut Io) -> Outcome {
    let scale = cli.log_base.scale();
    match &cli.command {
        Command::Example {
            kind,
            rank,
            semigroup,
            eps,
            p,
            n,
            perms,
            stay,
            output,
        } => {
            let kind_of = if *semigroup {
                GroupKind::Semigroup
            } else {
                GroupKind::Group
            };
            let spec = GroupSpec::new(*rank, kind_of)?;
            let ts = match kind {
                ExampleKind::Wsf | ExampleKind::Matching if *semigroup => {
                    return Err(Failure {
                        code: EXIT_USAGE,
                        message: format!("{kind:?} systems need a free group"),
                    })
                }
                ExampleKind::Wsf => wsf_system(*rank)?,
                ExampleKind::Matching => matching_system(*rank)?,
                ExampleKind::Flip => flip_system(spec, *eps)?,
                ExampleKind::Bernoulli => bernoulli_system(spec, p)?,
                ExampleKind::Perm => {
                    let points = n.unwrap_or(2);
                    let perms = match perms {
                        Some(t) => parse_perms(t)?,
                        None => {
                            let mut v = vec![(0..points).collect::<Vec<_>>(); *rank];
                            v[0] = (0..points).map(|i| (i + 1) % points).collect();
                            v
                        }
                    };
                    permutation_system_from_positive(spec, points, &perms)?
                }
                ExampleKind::Cycle => cyclic_system(spec, n.unwrap_or(3), *stay)?,
            };
            write_output(output.as_deref(), &with_newline(ts.to_json()), io)?;
            Ok(EXIT_OK)
        }
        Command::Validate { file, tol } => {
            let ts = read_system(file.as_deref(), io)?;
            let report = validate(&ts, *tol);
            write!(io.stdout, "{report}")?;
            Ok(if report.is_empty() {
                EXIT_OK
            } else {
                EXIT_FAILURE
            })
        }
        Command::Finv { file } => {
            let ts = read_system(file.as_deref(), io)?;
            let f = f_markov(&ts)?;
            let src = MeasureSource::Markov(ts);
            writeln!(io.stdout, "f = {}", fmt_value(f * scale))?;
            for n in 0..=1 {
                match big_f(&src, n) {
                    Ok(rep) => writeln!(
                        io.stdout,
                        "F(alpha^{n}) = {}  (difference {:.3e})",
                        fmt_value(rep.big_f * scale),
                        ((rep.big_f - f) * scale).abs()
                    )?,
                    Err(Error::Capability(msg)) => {
                        writeln!(io.stdout, "F(alpha^{n}) skipped: {msg}")?
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            Ok(EXIT_OK)
        }
        Command::Fseq {
            source,
            nmax,
            fstar,
        } => {
            let src = read_source(source, io)?;
            let mut reports = f_sequence(&src, *nmax)?;
            if let Some(m) = fstar {
                for rep in &mut reports {
                    rep.big_f_star = Some(big_f_star(&src, rep.n, *m)?);
                }
            }
            let mut out = EntropyReport::csv_header(src.spec().rank());
            out.push('\n');
            for rep in &reports {
                out.push_str(&rep.csv_row(scale));
                out.push('\n');
            }
            io.stdout.write_all(out.as_bytes())?;
            Ok(EXIT_OK)
        }
        Command::Marginal {
            source,
            radius,
            output,
        } => {
            let src = read_source(source, io)?;
            let marginal = src.ball_marginal(&Domain::ball(src.spec(), *radius))?;
            write_output(output.as_deref(), &with_newline(marginal.to_json()), io)?;
            Ok(EXIT_OK)
        }
        Command::Sample {
            file,
            radius,
            count,
            seed,
            output,
        } => {
            let ts = read_system(file.as_deref(), io)?;
            let samples = sample(&ts, *radius, *seed, *count)?;
            write_output(output.as_deref(), &samples.to_csv(), io)?;
            Ok(EXIT_OK)
        }
        Command::Approx {
            source,
            depth,
            output,
        } => {
            let src = read_source(source, io)?;
            let approx = markov_approximation(&src, *depth)?;
            let f = f_markov(&approx.inner)?;
            write_output(output.as_deref(), &with_newline(approx.to_json()), io)?;
            let summary = format!(
                "f = {}\nsuperstates = {}\noverlap_violations = {}\n",
                fmt_value(f * scale),
                approx.inner.num_states(),
                approx.overlap_violations
            );
            // keep stdout parseable when the system itself went there
            if output.as_deref().is_some_and(|p| p != Path::new("-")) {
                io.stdout.write_all(summary.as_bytes())?;
            } else {
                io.stderr.write_all(summary.as_bytes())?;
            }
            Ok(EXIT_OK)
        }
        Command::Check {
            only,
            seed,
            json,
            list,
        } => {
            if *list {
                for name in verify::check_names() {
                    writeln!(io.stdout, "{name}")?;
                }
                return Ok(EXIT_OK);
            }
            let results = verify::run_selected(*seed, only.as_deref());
            if results.is_empty() {
                return Err(Failure {
                    code: EXIT_USAGE,
                    message: format!("no check matches {:?}", only.as_deref().unwrap_or("")),
                });
            }
            if *json {
                writeln!(io.stdout, "{}", verify::to_json(&results))?;
            } else {
                for r in &results {
                    writeln!(io.stdout, "{r}")?;
                }
                let passed = results.iter().filter(|r| r.passed).count();
                writeln!(io.stdout, "{passed}/{} checks passed", results.len())?;
            }
            Ok(if results.iter().all(|r| r.passed) {
                EXIT_OK
            } else {
                EXIT_FAILURE
            })
        }
    }
}
