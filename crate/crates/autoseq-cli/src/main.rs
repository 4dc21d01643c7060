//! Command-line front end: structural analysis, pattern counting, bound
//! verification, interval covers, uniformity probes, densities, and the
//! maximality check, with machine-readable JSON/CSV output.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use autoseq::apk::{self, ApkError, ApkSet, BracketConfig};
use autoseq::automaton::{AutomatonError, Dfao, DigitWord, ParseError};
use autoseq::complexity::{self, BoundBudgets, ComplexityError, ComplexityProfile, IntegerPolynomial, ProfileKind, ProfileRow};
use autoseq::cover::{self, CoverError};
use autoseq::structure::{self, StructureConfig, StructureError};
use autoseq::uniformity::{self, UniformityError};

#[derive(Parser)]
#[command(
    name = "autoseq",
    version,
    about = "Structural and statistical analysis of base-k automatic sequences"
)]
struct Cli {
    /// Automaton description file
    #[arg(long, global = true)]
    input: Option<PathBuf>,

    /// Write the report here instead of standard output
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format; csv is available for complexity, verify, and gowers
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Seed for every randomized search; fixed seed means identical output
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads for independent work items (0 uses all cores)
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Ordinary,
    Ap,
    Poly,
}

#[derive(Subcommand)]
enum Command {
    /// Component, image, height, and class structure with the effective
    /// alphabet size
    Analyze {
        /// Cap on distinct state subsets explored per component
        #[arg(long, default_value_t = 1 << 20)]
        image_budget: usize,
    },
    /// Distinct word counts along windows, progressions, or polynomials
    Complexity {
        #[arg(long, value_enum, default_value_t = Kind::Ordinary)]
        kind: Kind,
        /// Word length; ordinary profiles list every length up to it
        #[arg(long, default_value_t = 8)]
        ell: u32,
        /// Prefix budget (ordinary and ap kinds)
        #[arg(long = "N", default_value_t = 1 << 12)]
        budget_n: u64,
        /// Largest progression step (ap kind)
        #[arg(long = "Mmax", default_value_t = 64)]
        budget_m: u64,
        /// Polynomial degree (poly kind)
        #[arg(long, default_value_t = 1)]
        degree: u32,
        /// Coefficient box bound (poly kind)
        #[arg(long, default_value_t = 64)]
        coeff_bound: u64,
    },
    /// Check observed progression counts against the effective-alphabet
    /// floor and the label ceiling, and the window/progression/polynomial
    /// count chain
    Verify {
        #[arg(long, default_value_t = 1)]
        ell_min: u32,
        #[arg(long, default_value_t = 8)]
        ell_max: u32,
        #[arg(long = "N", default_value_t = 1 << 12)]
        budget_n: u64,
        #[arg(long = "Mmax", default_value_t = 64)]
        budget_m: u64,
        #[arg(long, default_value_t = 1 << 20)]
        image_budget: usize,
    },
    /// Build and verify an interval cover for a polynomial range
    Cover {
        /// Digit base for the block indices
        #[arg(long, default_value_t = 2)]
        base: u64,
        /// Binomial-basis coefficients, constant first, comma separated
        #[arg(long)]
        poly: String,
        /// Digit word the block indices must contain
        #[arg(long)]
        word: String,
        #[arg(long, default_value_t = 1000)]
        ell: u64,
    },
    /// Uniformity-norm decay probe over a list of lengths
    Gowers {
        /// Output label whose balanced indicator is probed
        #[arg(long)]
        label: String,
        #[arg(long, default_value_t = 2)]
        d: u32,
        /// Comma-separated signal lengths
        #[arg(long, default_value = "64,128,256")]
        n_list: String,
        /// Use the cyclic Fourier norm instead of the interval norm
        #[arg(long, default_value_t = false)]
        cyclic: bool,
    },
    /// Value set and logarithmic densities over a generalized residue set
    Density {
        /// Set description, e.g. "u=1,v=01,len=0%2,res=1%3" or
        /// "unconstrained"
        #[arg(long, default_value = "unconstrained")]
        set: String,
        #[arg(long = "N", default_value_t = 1 << 16)]
        budget_n: u64,
    },
    /// Compare the structural alphabet size against the empirical bracket
    Masc {
        #[arg(long, default_value_t = 4)]
        depth: u32,
        #[arg(long = "N", default_value_t = 1 << 14)]
        budget_n: u64,
        #[arg(long, default_value_t = 1 << 20)]
        image_budget: usize,
    },
}

enum CliError {
    /// exit code 2
    Input(String),
    /// exit code 1
    Contract(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<AutomatonError> for CliError {
    fn from(e: AutomatonError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<StructureError> for CliError {
    fn from(e: StructureError) -> Self {
        CliError::Contract(e.to_string())
    }
}

impl From<ApkError> for CliError {
    fn from(e: ApkError) -> Self {
        match e {
            ApkError::LabelBudget { .. } | ApkError::SearchBudget { .. } | ApkError::Structure(_) => {
                CliError::Contract(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<ComplexityError> for CliError {
    fn from(e: ComplexityError) -> Self {
        match e {
            ComplexityError::Structure(inner) => CliError::Contract(inner.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<CoverError> for CliError {
    fn from(e: CoverError) -> Self {
        match e {
            CoverError::NonConvergence { .. } | CoverError::ValueOverflow => {
                CliError::Contract(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<UniformityError> for CliError {
    fn from(e: UniformityError) -> Self {
        CliError::Input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Contract(msg)) => {
            eprintln!("contract violation: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| CliError::Input(e.to_string()))?;
    match &cli.command {
        Command::Analyze { image_budget } => cmd_analyze(&cli, *image_budget),
        Command::Complexity { kind, ell, budget_n, budget_m, degree, coeff_bound } => {
            cmd_complexity(&cli, *kind, *ell, *budget_n, *budget_m, *degree, *coeff_bound)
        }
        Command::Verify { ell_min, ell_max, budget_n, budget_m, image_budget } => {
            cmd_verify(&cli, *ell_min, *ell_max, *budget_n, *budget_m, *image_budget)
        }
        Command::Cover { base, poly, word, ell } => cmd_cover(&cli, *base, poly, word, *ell),
        Command::Gowers { label, d, n_list, cyclic } => {
            cmd_gowers(&cli, label, *d, n_list, *cyclic)
        }
        Command::Density { set, budget_n } => cmd_density(&cli, set, *budget_n),
        Command::Masc { depth, budget_n, image_budget } => {
            cmd_masc(&cli, *depth, *budget_n, *image_budget)
        }
    }
}

fn load_machine(cli: &Cli) -> Result<Dfao, CliError> {
    let path = cli
        .input
        .as_ref()
        .ok_or_else(|| CliError::Input("--input is required for this command".into()))?;
    let text = std::fs::read_to_string(path)?;
    Ok(Dfao::parse(&text)?)
}

fn emit(cli: &Cli, content: &str) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => std::fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn emit_json<T: Serialize>(cli: &Cli, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Input(e.to_string()))?;
    text.push('\n');
    emit(cli, &text)
}

fn require_json(cli: &Cli, command: &str) -> Result<(), CliError> {
    if cli.format == Format::Csv {
        return Err(CliError::Input(format!("{command} reports have no csv form; use json")));
    }
    Ok(())
}

fn cmd_analyze(cli: &Cli, image_budget: usize) -> Result<(), CliError> {
    require_json(cli, "analyze")?;
    let a = load_machine(cli)?;
    let report = structure::effective_alphabet_size(&a, &StructureConfig { image_budget })?;
    emit_json(cli, &report)
}

fn cmd_complexity(
    cli: &Cli,
    kind: Kind,
    ell: u32,
    budget_n: u64,
    budget_m: u64,
    degree: u32,
    coeff_bound: u64,
) -> Result<(), CliError> {
    let a = load_machine(cli)?;
    let profile = match kind {
        Kind::Ordinary => complexity::subword_complexity_profile(&a, ell, budget_n)?,
        Kind::Ap => {
            let c = complexity::ap_complexity_profile(&a, ell, budget_n, budget_m)?;
            ComplexityProfile {
                kind: ProfileKind::Arithmetic,
                rows: vec![ProfileRow {
                    ell,
                    count: c.count,
                    budget_n,
                    budget_m,
                    exact: c.saturated,
                }],
            }
        }
        Kind::Poly => {
            let c = complexity::poly_complexity_profile(&a, ell, degree, coeff_bound)?;
            ComplexityProfile {
                kind: ProfileKind::Polynomial { degree },
                rows: vec![ProfileRow {
                    ell,
                    count: c.count,
                    budget_n: coeff_bound,
                    budget_m: degree as u64,
                    exact: c.saturated,
                }],
            }
        }
    };
    match cli.format {
        Format::Csv => emit(cli, &profile.to_csv()),
        Format::Json => emit_json(cli, &profile),
    }
}

fn cmd_verify(
    cli: &Cli,
    ell_min: u32,
    ell_max: u32,
    budget_n: u64,
    budget_m: u64,
    image_budget: usize,
) -> Result<(), CliError> {
    if ell_min == 0 || ell_min > ell_max {
        return Err(CliError::Input(format!(
            "need 1 <= ell_min <= ell_max, got {ell_min}..{ell_max}"
        )));
    }
    let a = load_machine(cli)?;
    let report = complexity::verify_theorem_bounds(
        &a,
        ell_min..=ell_max,
        BoundBudgets { n: budget_n, m_max: budget_m },
        &StructureConfig { image_budget },
    )?;
    match cli.format {
        Format::Csv => {
            let mut text = String::from(
                "ell,r_pow,observed,ceiling,met_lower,excess_epsilon,ordinary,arithmetic,poly_deg1,poly_deg2\n",
            );
            for (row, chain) in report.rows.iter().zip(&report.chain) {
                writeln!(
                    text,
                    "{},{},{},{},{},{},{},{},{},{}",
                    row.ell,
                    row.r_pow,
                    row.observed,
                    row.ceiling.map_or_else(|| "overflow".into(), |c| c.to_string()),
                    row.met_lower,
                    row.excess_epsilon,
                    chain.ordinary,
                    chain.arithmetic,
                    chain.poly_deg1,
                    chain.poly_deg2,
                )
                .expect("string writes cannot fail");
            }
            emit(cli, &text)?;
        }
        Format::Json => emit_json(cli, &report)?,
    }
    if !report.sanity_ok {
        return Err(CliError::Contract(
            "an observed count exceeds the label ceiling".into(),
        ));
    }
    if !report.chain_ok {
        return Err(CliError::Contract(
            "the window/progression/polynomial chain lost monotonicity".into(),
        ));
    }
    Ok(())
}

#[derive(Serialize)]
struct CoverReport {
    params: cover::CoverParams,
    verdict: cover::CoverVerdict,
    pieces: Vec<cover::CoverPiece>,
}

fn parse_digit_word(text: &str, base: u64) -> Result<DigitWord, CliError> {
    let digits: Option<Vec<u64>> = text
        .chars()
        .map(|c| c.to_digit(36).map(|d| d as u64))
        .collect();
    let digits = digits.ok_or_else(|| {
        CliError::Input(format!("cannot read {text:?} as a digit word"))
    })?;
    DigitWord::new(digits, base).map_err(CliError::from)
}

fn cmd_cover(cli: &Cli, base: u64, poly: &str, word: &str, ell: u64) -> Result<(), CliError> {
    require_json(cli, "cover")?;
    let coeffs: Result<Vec<u64>, _> = poly.split(',').map(|c| c.trim().parse::<u64>()).collect();
    let coeffs = coeffs.map_err(|e| CliError::Input(format!("bad coefficient list: {e}")))?;
    let p = IntegerPolynomial::new(coeffs);
    let w = parse_digit_word(word, base)?;
    let built = cover::build_cover(&p, &w, base, ell)?;
    let verdict = cover::verify_cover(&built.pieces, &built.params, &p, &w, base, ell);
    let ok = verdict.ok();
    eprintln!(
        "cover {}: {} pieces ({} blocks, {} singletons) over {} integers, count/ell^theta = {:.4}",
        if ok { "ok" } else { "INVALID" },
        verdict.piece_count,
        verdict.blocks,
        verdict.singletons,
        ell,
        verdict.normalized_count,
    );
    emit_json(cli, &CoverReport { params: built.params, verdict, pieces: built.pieces })?;
    if !ok {
        return Err(CliError::Contract("built cover failed verification".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct GowersRow {
    n: usize,
    d: u32,
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    cube_count: Option<u64>,
}

fn cmd_gowers(cli: &Cli, label: &str, d: u32, n_list: &str, cyclic: bool) -> Result<(), CliError> {
    let a = load_machine(cli)?;
    let lengths: Result<Vec<usize>, _> =
        n_list.split(',').map(|t| t.trim().parse::<usize>()).collect();
    let lengths = lengths.map_err(|e| CliError::Input(format!("bad length list: {e}")))?;
    if lengths.is_empty() {
        return Err(CliError::Input("need at least one length".into()));
    }
    // independent lengths fan out across the pool; collect keeps input order
    let rows: Result<Vec<GowersRow>, CliError> = lengths
        .par_iter()
        .map(|&n| {
            if cyclic {
                if n == 0 {
                    return Err(CliError::Input("cyclic norm needs positive length".into()));
                }
                let b = a.normalize_leading_zeros();
                let prefix = b.generate_prefix(n).map_err(CliError::from)?;
                let hits = prefix.iter().filter(|&&l| l == label).count();
                let density = hits as f64 / n as f64;
                let vals: Vec<f64> =
                    prefix.iter().map(|&l| (l == label) as u8 as f64 - density).collect();
                let f = uniformity::FiniteSignal::from_reals(&vals).map_err(CliError::from)?;
                Ok(GowersRow { n, d: 2, value: uniformity::gowers_u2_cyclic(&f), cube_count: None })
            } else {
                let g = uniformity::uniformity_probe(&a, label, d, n).map_err(CliError::from)?;
                Ok(GowersRow { n, d, value: g.value, cube_count: Some(g.cube_count) })
            }
        })
        .collect();
    let rows = rows?;
    match cli.format {
        Format::Csv => {
            let mut text = String::from("N,d,value\n");
            for row in &rows {
                writeln!(text, "{},{},{}", row.n, row.d, row.value)
                    .expect("string writes cannot fail");
            }
            emit(cli, &text)
        }
        Format::Json => emit_json(cli, &rows),
    }
}

#[derive(Serialize)]
struct DensityReport {
    set: String,
    budget_n: u64,
    values: Vec<String>,
    log_densities: std::collections::BTreeMap<String, f64>,
}

fn cmd_density(cli: &Cli, set: &str, budget_n: u64) -> Result<(), CliError> {
    require_json(cli, "density")?;
    let a = load_machine(cli)?;
    let q = ApkSet::parse(a.base(), set)?;
    let values = apk::value_set(&a, &q, budget_n)?;
    let mut log_densities = std::collections::BTreeMap::new();
    for label in &values {
        log_densities
            .insert(label.clone(), apk::log_density_estimate(&a, label, &q, budget_n)?);
    }
    emit_json(
        cli,
        &DensityReport {
            set: q.to_string(),
            budget_n,
            values: values.into_iter().collect(),
            log_densities,
        },
    )
}

fn cmd_masc(cli: &Cli, depth: u32, budget_n: u64, image_budget: usize) -> Result<(), CliError> {
    require_json(cli, "masc")?;
    let a = load_machine(cli)?;
    let report = apk::masc_check(
        &a,
        depth,
        budget_n,
        &BracketConfig { seed: cli.seed, ..BracketConfig::default() },
        &StructureConfig { image_budget },
    )?;
    emit_json(cli, &report)
}
