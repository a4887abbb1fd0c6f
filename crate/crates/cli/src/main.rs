use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use minap_cli::commands::{self, CliError, Outcome, Source, TseqArgs};

#[derive(Parser)]
#[command(
    name = "minap",
    version,
    about = "Group topologies with prescribed von Neumann radicals"
)]
struct Cli {
    /// Emit a JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print d_0..d_N of the triangular T-sequence.
    Construct {
        /// Group specification file.
        #[arg(long)]
        group: PathBuf,
        /// Last index N to print.
        #[arg(long)]
        index: usize,
        /// Use H_j = <e_j> instead of the h-coordinates.
        #[arg(long)]
        self_e: bool,
    },
    /// Bounded check of g against A(k, m) for the triangular T-sequence.
    TseqCheck {
        /// Group specification file.
        #[arg(long)]
        group: PathBuf,
        /// Element expression, e.g. `h[0,1] + 2*e[3]`.
        #[arg(long, allow_hyphen_values = true)]
        element: String,
        /// Sums of at most k+1 terms.
        #[arg(long)]
        k: usize,
        /// Largest starting index m to examine.
        #[arg(long)]
        mmax: usize,
        /// Number of terms N the search may use.
        #[arg(long)]
        prefix: usize,
        /// Use H_j = <e_j> instead of the h-coordinates.
        #[arg(long)]
        self_e: bool,
    },
    /// Radical of the triangular T-sequence topology on blocks 0..=B.
    Radical {
        /// Group specification file.
        #[arg(long)]
        group: PathBuf,
        /// Last block B of the characters examined.
        #[arg(long)]
        support: usize,
        /// Sequence terms evaluated per character.
        #[arg(long)]
        window: usize,
        /// Use H_j = <e_j> instead of the h-coordinates.
        #[arg(long)]
        self_e: bool,
    },
    /// Route (G, H) to its block-form recipe.
    Decompose {
        /// Group specification file.
        #[arg(long)]
        group: PathBuf,
        /// Subgroup file: one element per line, `tail` for all tail coordinates.
        #[arg(long)]
        subgroup: PathBuf,
        /// Size of the truncation on which infinite quantifiers are checked.
        #[arg(long, default_value_t = minap::decompose::DEFAULT_WINDOW)]
        window: usize,
    },
    /// Whether a bounded group admits a MinAP group topology.
    Minap {
        /// Group specification file.
        #[arg(long)]
        group: PathBuf,
    },
    /// Whether u_n * x -> 0 in Q/Z for an integer rule u.
    Circle {
        /// `geom(q)`, `factorial`, `affine(a,b,u0)` or `list(v0,...;r)`.
        #[arg(long)]
        rule: String,
        /// Rational point a/b of the circle.
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Construct { .. } => "construct",
            Cmd::TseqCheck { .. } => "tseq-check",
            Cmd::Radical { .. } => "radical",
            Cmd::Decompose { .. } => "decompose",
            Cmd::Minap { .. } => "minap",
            Cmd::Circle { .. } => "circle",
        }
    }
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn budget() -> Result<usize, CliError> {
    match std::env::var("MINAP_BUDGET") {
        Ok(v) => v
            .trim()
            .parse()
            .ok()
            .filter(|&b: &usize| b > 0)
            .ok_or_else(|| {
                CliError::Usage(format!(
                    "MINAP_BUDGET must be a positive integer, got {v:?}"
                ))
            }),
        Err(_) => Ok(minap::tseq::DEFAULT_BUDGET),
    }
}

fn run(cmd: &Cmd) -> Result<Outcome, CliError> {
    match cmd {
        Cmd::Construct {
            group,
            index,
            self_e,
        } => {
            let text = read(group)?;
            let name = group.display().to_string();
            commands::construct(
                Source {
                    name: &name,
                    text: &text,
                },
                *index,
                *self_e,
            )
        }
        Cmd::TseqCheck {
            group,
            element,
            k,
            mmax,
            prefix,
            self_e,
        } => {
            let text = read(group)?;
            let name = group.display().to_string();
            let args = TseqArgs {
                element,
                k: *k,
                m_max: *mmax,
                prefix: *prefix,
                self_e: *self_e,
                budget: budget()?,
            };
            commands::tseq_check(
                Source {
                    name: &name,
                    text: &text,
                },
                args,
            )
        }
        Cmd::Radical {
            group,
            support,
            window,
            self_e,
        } => {
            let text = read(group)?;
            let name = group.display().to_string();
            commands::radical(
                Source {
                    name: &name,
                    text: &text,
                },
                *support,
                *window,
                *self_e,
            )
        }
        Cmd::Decompose {
            group,
            subgroup,
            window,
        } => {
            let (gt, st) = (read(group)?, read(subgroup)?);
            let (gn, sn) = (group.display().to_string(), subgroup.display().to_string());
            commands::decompose(
                Source {
                    name: &gn,
                    text: &gt,
                },
                Source {
                    name: &sn,
                    text: &st,
                },
                *window,
            )
        }
        Cmd::Minap { group } => {
            let text = read(group)?;
            let name = group.display().to_string();
            commands::minap(Source {
                name: &name,
                text: &text,
            })
        }
        Cmd::Circle { rule, x } => commands::circle(rule, x),
    }
}

// A closed pipe (e.g. `| head`) is not an error worth a panic.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn emit_json(v: &serde_json::Value) {
    emit(&format!(
        "{}\n",
        serde_json::to_string_pretty(v).expect("serializable report")
    ));
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                emit(&e.to_string());
                return ExitCode::SUCCESS;
            }
            if std::env::args().any(|a| a == "--json") {
                let err = CliError::Usage(e.kind().to_string());
                let mut v = err.json(&std::env::args().nth(1).unwrap_or_default());
                v["error"]["message"] = serde_json::json!(e.to_string());
                emit_json(&v);
            } else {
                eprint!("{e}");
            }
            return ExitCode::from(1);
        }
    };
    let name = cli.cmd.name();
    match run(&cli.cmd) {
        Ok(out) => {
            if cli.json {
                emit_json(&out.json());
            } else {
                emit(&out.text);
            }
            ExitCode::from(out.exit as u8)
        }
        Err(e) => {
            if cli.json {
                emit_json(&e.json(name));
            } else {
                eprintln!("minap {name}: {e}");
            }
            ExitCode::from(1)
        }
    }
}
