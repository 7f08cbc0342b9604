//! CLI entry point. Exit codes: 0 when a verdict was rendered (passing or
//! not), 1 when selftest finds a verdict mismatch, 2 for input problems,
//! 3 for numerical inconsistencies.

use clap::{Parser, Subcommand};
use feffcheck::pipeline::{self, Options, PipelineError};
use feffcheck::report::{self, sign_consistent};
use feffcheck::{corpus, format};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "feffcheck", version, about = "Conformal tractor checker for Fefferman-type structures")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the identity suite on one geometry file and render a verdict.
    Check {
        file: PathBuf,
        /// Identity tolerance tau (default 1e-8).
        #[arg(long)]
        tolerance: Option<f64>,
        /// Override the file's sample count.
        #[arg(long)]
        samples: Option<usize>,
        /// Override the file's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Emit the report as JSON instead of text.
        #[arg(long)]
        json: bool,
        /// Also transport holonomy loops and test the group containment.
        #[arg(long)]
        holonomy: bool,
        /// Rerun under g -> exp(2 omega) g and compare.
        #[arg(long)]
        rescale: bool,
        /// Worker threads for sample and loop evaluation.
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Check every corpus entry against its recorded verdict.
    Selftest {
        /// Directory of .geom files to use instead of the bundled corpus.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Emit all reports as a JSON array.
        #[arg(long)]
        json: bool,
        /// Worker threads for sample evaluation.
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Print the curvature stack of a geometry at one chart point.
    Curvature {
        file: PathBuf,
        /// Chart point, comma separated: v1,v2,...
        #[arg(long)]
        point: String,
    },
}

fn main() -> ExitCode {
    // Die of SIGPIPE like any other filter instead of panicking mid-report
    // when the reader goes away (`feffcheck check --json | head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    match Cli::parse().cmd {
        Cmd::Check {
            file,
            tolerance,
            samples,
            seed,
            json,
            holonomy,
            rescale,
            threads,
        } => {
            let opt = Options {
                tolerance: tolerance.unwrap_or(tractorcalc::tol::IDENTITY),
                samples,
                seed,
                holonomy,
                rescale,
                threads,
            };
            cmd_check(&file, &opt, json)
        }
        Cmd::Selftest {
            corpus,
            json,
            threads,
        } => cmd_selftest(corpus.as_deref(), json, threads),
        Cmd::Curvature { file, point } => cmd_curvature(&file, &point),
    }
}

fn exit_for(e: &PipelineError) -> ExitCode {
    match e {
        PipelineError::Input(_) => ExitCode::from(2),
        PipelineError::Numerical(_) => ExitCode::from(3),
    }
}

fn read_input(path: &Path) -> Result<String, ExitCode> {
    std::fs::read_to_string(path).map_err(|e| {
        eprintln!("feffcheck: {}: {e}", path.display());
        ExitCode::from(2)
    })
}

fn cmd_check(path: &Path, opt: &Options, json: bool) -> ExitCode {
    let text = match read_input(path) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let name = path.display().to_string();
    match pipeline::check_source(&name, &text, opt) {
        Ok(rep) => {
            if json {
                println!("{}", rep.to_json());
            } else {
                print!("{}", rep.render_text());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("feffcheck: {name}: {e}");
            exit_for(&e)
        }
    }
}

fn cmd_selftest(dir: Option<&Path>, json: bool, threads: usize) -> ExitCode {
    let entries: Vec<(String, String)> = match dir {
        None => corpus::ENTRIES
            .iter()
            .map(|&(n, t)| (n.to_string(), t.to_string()))
            .collect(),
        Some(d) => {
            let rd = match std::fs::read_dir(d) {
                Ok(rd) => rd,
                Err(e) => {
                    eprintln!("feffcheck: {}: {e}", d.display());
                    return ExitCode::from(2);
                }
            };
            let mut found = Vec::new();
            for entry in rd {
                let entry = match entry {
                    Ok(e) => e,
                    Err(e) => {
                        eprintln!("feffcheck: {}: {e}", d.display());
                        return ExitCode::from(2);
                    }
                };
                let p = entry.path();
                if p.extension().is_some_and(|x| x == "geom") {
                    let name = p
                        .file_name()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_default();
                    match std::fs::read_to_string(&p) {
                        Ok(t) => found.push((name, t)),
                        Err(e) => {
                            eprintln!("feffcheck: {}: {e}", p.display());
                            return ExitCode::from(2);
                        }
                    }
                }
            }
            found.sort_by(|a, b| a.0.cmp(&b.0));
            found
        }
    };
    if entries.is_empty() {
        eprintln!("feffcheck: no corpus");
        return ExitCode::from(2);
    }

    let opt = Options {
        threads,
        ..Options::default()
    };
    let mut reports = Vec::new();
    for (name, text) in &entries {
        let gf = match format::parse(text) {
            Ok(g) => g,
            Err(e) => {
                eprintln!("feffcheck: {name}: {e}");
                return ExitCode::from(2);
            }
        };
        let Some(expected) = gf.expected_verdict else {
            eprintln!("feffcheck: {name}: corpus entry lacks expected_verdict");
            return ExitCode::from(2);
        };
        let rep = match pipeline::run_check(&gf, name, report::fnv1a(text.as_bytes()), &opt) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("feffcheck: {name}: {e}");
                return exit_for(&e);
            }
        };
        if rep.verdict != expected {
            eprintln!(
                "feffcheck: verdict mismatch in {name}: expected {expected}, got {}",
                rep.verdict
            );
            return ExitCode::from(1);
        }
        if !sign_consistent(rep.verdict, rep.lambda.sign) {
            eprintln!(
                "feffcheck: lambda sign mismatch in {name}: verdict {} with sign {}",
                rep.verdict,
                rep.lambda.sign.as_str()
            );
            return ExitCode::from(1);
        }
        if !json {
            println!(
                "ok {name} {} lambda mean {:+.6e}",
                rep.verdict, rep.lambda.mean
            );
        }
        reports.push(rep);
    }
    if json {
        let body: Vec<String> = reports.iter().map(|r| r.to_json()).collect();
        println!("[\n{}\n]", body.join(",\n"));
    } else {
        println!("selftest: {} entries ok", reports.len());
    }
    ExitCode::SUCCESS
}

fn cmd_curvature(path: &Path, point: &str) -> ExitCode {
    let text = match read_input(path) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let gf = match format::parse(&text) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("feffcheck: {}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    let mut pt = Vec::new();
    for tok in point.split(',') {
        match tok.trim().parse::<f64>() {
            Ok(v) => pt.push(v),
            Err(_) => {
                eprintln!("feffcheck: '{}' is not a number in --point", tok.trim());
                return ExitCode::from(2);
            }
        }
    }
    match pipeline::curvature_dump(&gf, &pt) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("feffcheck: {}: {e}", path.display());
            exit_for(&e)
        }
    }
}
