use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use vineyard_core::field::{Field, PrimeField, Rationals};
use vineyard_core::io::format::{self, AnyModule};
use vineyard_core::io::generate::{generate_annulus, generate_random, RandomParams, TwistSite};
use vineyard_core::io::svg::render_svg;
use vineyard_core::module::VineyardModuleRep;
use vineyard_core::oracle::{brute_force_witness, OracleError, OracleLimits};
use vineyard_core::simplify::{backward_simplify, block_partition, forward_simplify, simplify, verify_witness};
use vineyard_core::with_module;

/// Vineyard modules: validation, simplification and triviality.
#[derive(Parser)]
#[command(name = "vineyard", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a module file; exit 0 iff it is valid.
    Validate { file: PathBuf },
    /// Write the simplified module.
    Simplify {
        file: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = PassArg::Both)]
        pass: PassArg,
    },
    /// Print the λ-vector with times and (k, l).
    Lambda(Report),
    /// Decide triviality; exit 0 iff trivial.
    Trivial(Report),
    /// Print the block partition of the simplified module.
    Decompose(Report),
    /// Exhaustive triviality check for small modules over prime fields; exit 0 iff trivial.
    Oracle {
        file: PathBuf,
        #[arg(long)]
        json: bool,
        #[arg(long, default_value_t = OracleLimits::default().max_grid)]
        max_grid: usize,
        #[arg(long, default_value_t = OracleLimits::default().max_vines)]
        max_vines: usize,
    },
    /// Write a generated module.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Draw the vineyard as SVG.
    Render {
        file: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Report {
    file: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum PassArg {
    Forward,
    Backward,
    Both,
}

#[derive(Subcommand)]
enum GenerateKind {
    /// The two-vine annulus over GF(2).
    Annulus {
        #[arg(long)]
        twisted: bool,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// A seeded random module.
    Random {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        vines: usize,
        /// Points of the coarse grid before refinement.
        #[arg(long, default_value_t = 6)]
        times: usize,
        /// `q`, `gf2`, or `gfP` for a prime P.
        #[arg(long, default_value = "gf2", value_parser = parse_field)]
        field: FieldArg,
        #[arg(long)]
        obfuscate: bool,
        /// Number of random admissible twists.
        #[arg(long, default_value_t = 0)]
        twists: usize,
        /// Number of twists placed just below backwards-incompatible times.
        #[arg(long, default_value_t = 0)]
        stuck: usize,
        /// Give the last vine interior support.
        #[arg(long)]
        interior: bool,
        /// Crop to at most this many grid points around an incompatible time.
        #[arg(long)]
        window: Option<usize>,
        /// Make vines 0 and 1 touch without crossing at an interior time.
        #[arg(long)]
        bounce: bool,
        #[arg(short, long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy)]
enum FieldArg {
    Q,
    Gf(u64),
}

fn parse_field(s: &str) -> Result<FieldArg, String> {
    if s == "q" {
        return Ok(FieldArg::Q);
    }
    let p = s
        .strip_prefix("gf")
        .and_then(|p| p.parse::<u64>().ok())
        .ok_or_else(|| format!("expected q or gfP, got {s:?}"))?;
    PrimeField::new(p).map(|_| FieldArg::Gf(p)).map_err(|e| e.to_string())
}

/// Failure with an exit code; the message goes to stderr.
struct Fail(u8, String);

impl<E: std::fmt::Display> From<E> for Fail {
    fn from(e: E) -> Self {
        Fail(1, e.to_string())
    }
}

fn read(path: &PathBuf) -> Result<String, Fail> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        return Ok(s);
    }
    fs::read_to_string(path).map_err(|e| Fail(1, format!("{}: {e}", path.display())))
}

fn write(path: &PathBuf, text: &str) -> Result<(), Fail> {
    if path.as_os_str() == "-" {
        io::stdout().write_all(text.as_bytes())?;
        return Ok(());
    }
    fs::write(path, text).map_err(|e| Fail(1, format!("{}: {e}", path.display())))
}

fn load(path: &PathBuf) -> Result<AnyModule, Fail> {
    Ok(format::parse(&read(path)?)?)
}

fn blocks_text(blocks: &[BTreeSet<usize>]) -> String {
    blocks
        .iter()
        .map(|b| format!("{{{}}}", b.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")))
        .collect::<Vec<_>>()
        .join(" ")
}

fn lambda<F: Field>(m: &VineyardModuleRep<F>, as_json: bool) -> Result<u8, Fail> {
    let s = simplify(m)?;
    let f = m.field();
    if as_json {
        let entries: Vec<_> = s
            .lambda
            .iter()
            .map(|r| json!({"index": r.index, "time": r.time.to_string(), "k": r.k, "l": r.l, "value": f.format_elem(&r.value)}))
            .collect();
        println!("{}", json!({ "lambda": entries }));
    } else {
        if s.lambda.is_empty() {
            println!("no backwards-incompatible times");
        }
        for r in &s.lambda {
            println!("t={} k={} l={} value={}", r.time, r.k, r.l, f.format_elem(&r.value));
        }
    }
    for d in &s.diagnostics {
        eprintln!("warning: {d}");
    }
    Ok(0)
}

fn trivial<F: Field>(m: &VineyardModuleRep<F>, as_json: bool) -> Result<u8, Fail> {
    let s = simplify(m)?;
    let (yes, witness) = s.is_trivial();
    let checked = witness.is_some_and(|w| verify_witness(m, w));
    if yes && !checked {
        return Err(Fail(1, "internal error: witness does not conjugate to the trivial module".into()));
    }
    let nonzero = s.lambda.iter().filter(|r| !m.field().is_zero(&r.value)).count();
    if as_json {
        println!("{}", json!({"trivial": yes, "witness_verified": checked, "nonzero_lambda": nonzero}));
    } else if yes {
        println!("trivial (witness verified)");
    } else {
        println!("nontrivial ({nonzero} nonzero λ entries)");
    }
    Ok(if yes { 0 } else { 1 })
}

fn decompose<F: Field>(m: &VineyardModuleRep<F>, as_json: bool) -> Result<u8, Fail> {
    let s = simplify(m)?;
    let blocks = block_partition(&s.rep);
    if as_json {
        println!("{}", json!({ "blocks": blocks }));
    } else {
        println!("{}", blocks_text(&blocks));
    }
    Ok(0)
}

fn oracle<F: Field>(m: &VineyardModuleRep<F>, as_json: bool, limits: &OracleLimits) -> Result<u8, Fail> {
    let found = match brute_force_witness(m, limits) {
        Ok(w) => w,
        Err(e @ (OracleError::TooLarge(_) | OracleError::NotPrimeField(_))) => {
            return Err(Fail(3, format!("refused: {e}")))
        }
        Err(e) => return Err(e.into()),
    };
    let yes = found.is_some();
    if as_json {
        println!("{}", json!({ "trivial": yes }));
    } else {
        println!("{}", if yes { "trivial" } else { "nontrivial" });
    }
    Ok(if yes { 0 } else { 1 })
}

fn simplify_to<F: Field>(m: &VineyardModuleRep<F>, pass: PassArg) -> Result<String, Fail> {
    let rep = match pass {
        PassArg::Forward => forward_simplify(m)?.rep,
        PassArg::Backward => backward_simplify(m)?.rep,
        PassArg::Both => simplify(m)?.rep,
    };
    Ok(format::serialize(&rep))
}

fn generate(kind: GenerateKind) -> Result<u8, Fail> {
    match kind {
        GenerateKind::Annulus { twisted, out } => write(&out, &format::serialize(&generate_annulus(twisted)))?,
        GenerateKind::Random { seed, vines, times, field, obfuscate, twists, stuck, interior, window, bounce, out } => {
            let params = RandomParams {
                seed,
                n_vines: vines,
                n_times: times,
                obfuscate,
                twists: [vec![TwistSite::Random; twists], vec![TwistSite::Stuck; stuck]].concat(),
                interior_vine: interior,
                window,
                bounce,
            };
            let text = match field {
                FieldArg::Q => format::serialize(&generate_random(&Rationals, &params)?),
                FieldArg::Gf(p) => format::serialize(&generate_random(&PrimeField::new(p)?, &params)?),
            };
            write(&out, &text)?;
        }
    }
    Ok(0)
}

fn run(cli: Cli) -> Result<u8, Fail> {
    match cli.command {
        Command::Validate { file } => {
            let m = format::parse_unchecked(&read(&file)?)?;
            let report = m.validate();
            if report.is_empty() {
                println!(
                    "valid: {} vines, {} grid points over {}",
                    m.vineyard().num_vines(),
                    m.vineyard().grid().len(),
                    m.field_spec()
                );
                Ok(0)
            } else {
                for v in &report {
                    println!("{v}");
                }
                Ok(1)
            }
        }
        Command::Simplify { file, out, pass } => {
            let m = load(&file)?;
            let text = with_module!(&m, m => simplify_to(m, pass))?;
            write(&out, &text)?;
            Ok(0)
        }
        Command::Lambda(r) => with_module!(&load(&r.file)?, m => lambda(m, r.json)),
        Command::Trivial(r) => with_module!(&load(&r.file)?, m => trivial(m, r.json)),
        Command::Decompose(r) => with_module!(&load(&r.file)?, m => decompose(m, r.json)),
        Command::Oracle { file, json, max_grid, max_vines } => {
            let limits = OracleLimits { max_grid, max_vines, ..OracleLimits::default() };
            with_module!(&load(&file)?, m => oracle(m, json, &limits))
        }
        Command::Generate { kind } => generate(kind),
        Command::Render { file, out } => {
            let m = format::parse_unchecked(&read(&file)?)?;
            write(&out, &render_svg(m.vineyard()))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
