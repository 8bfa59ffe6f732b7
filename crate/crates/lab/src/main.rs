use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use leverage::bounds::{
    bound_c1, bound_t1, bound_t2, bound_t3_1, bound_t3_2, bound_t3_3, bound_t3_4, BoundReport,
};
use leverage::leverage::absolute_diffs;
use leverage::linalg::householder_qr;
use leverage::{
    leverage_qr, leverage_svd, matrix_stats, measure, principal_angles, relative_diffs, GenSpec,
    LeverageScores, PerturbationKind, PerturbationSpec, RngState, Theorem,
};
use leverage_lab::checks;
use leverage_lab::config::{ExperimentConfig, FigureId};
use leverage_lab::matrix_io::{read_matrix, write_matrix};
use leverage_lab::report::{write_csv, write_svg, SvgOptions};
use leverage_lab::{run_figure, LabError};
use serde::Serialize;

/// `println!` that ignores write errors, so a closed pipe (`| head`) ends
/// output quietly instead of panicking.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

const DEFAULT_SEED: u64 = 42;

#[derive(Parser, Debug)]
#[command(
    name = "levlab",
    version,
    about = "Leverage scores via QR and their sensitivity to perturbations"
)]
struct Cli {
    /// Seed for every random draw (default 42, or the config file's seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default ".", or the config file's output_dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Format for tabular output.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Report bound violations instead of failing on them.
    #[arg(long, global = true)]
    no_assert: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Preset {
    /// 1000x25 orthonormal matrix with four leverage plateaus.
    Stepped,
    /// The same row scaling on a kappa = 1e6 geometric matrix.
    IllConditioned,
    /// The row-scaled Gaussian before orthonormalization.
    SteppedRaw,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Method {
    Qr,
    Svd,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
#[value(rename_all = "snake_case")]
enum KindArg {
    Rotation,
    NormwiseTwo,
    NormwiseFro,
    RowSubset,
    SameRowScaling,
    ComponentwiseRows,
    RangeDominant,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a test matrix and write it to <out>/<name>.
    Gen {
        #[arg(long, value_enum, default_value_t = Preset::Stepped)]
        preset: Preset,
        /// JSON generator recipe; overrides --preset.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value = "A.txt")]
        name: String,
    },
    /// Perturb a matrix; writes <out>/delta.txt and <out>/perturbed.txt and
    /// prints the perturbation magnitudes.
    Perturb {
        #[arg(long)]
        matrix: PathBuf,
        /// JSON perturbation spec (with its own seed); overrides --kind.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        /// eps, eps_F, eta or target sin(theta_n), depending on the kind.
        #[arg(long, default_value_t = 1e-8)]
        magnitude: f64,
        /// Projected magnitude for range_dominant.
        #[arg(long, default_value_t = 0.0)]
        perp: f64,
        /// Half-open row range START:END for row_subset.
        #[arg(long)]
        rows: Option<String>,
    },
    /// Leverage scores of a matrix file.
    Levscores {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Qr)]
        method: Method,
    },
    /// Evaluate one bound (t1_abs, t1_sandwich, c1_rel, t2_perp, t2_gen,
    /// t3_1, t3_2, t3_3, t3_4) for a matrix and a perturbation.
    Bounds {
        theorem: String,
        #[arg(long)]
        matrix: PathBuf,
        /// Perturbation file; required except for t3_4.
        #[arg(long)]
        delta: Option<PathBuf>,
        /// Uniform eta_j for t3_4.
        #[arg(long)]
        eta: Option<f64>,
    },
    /// Run one figure experiment and write figN.csv (or .json) and figN.svg.
    Figure {
        /// Figure number, 1 to 5.
        number: String,
    },
    /// Run the acceptance suite; exits 1 if any check fails.
    Check,
}

enum Failure {
    Usage(String),
    Component(LabError),
}

impl<E: Into<LabError>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Component(e.into())
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(Failure::Component(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

struct Globals {
    seed: u64,
    out: PathBuf,
    format: Format,
    assert_bounds: bool,
    config: Option<ExperimentConfig>,
}

fn run(cli: Cli) -> CmdResult {
    let config = cli
        .config
        .as_deref()
        .map(ExperimentConfig::load)
        .transpose()?;
    let g = Globals {
        seed: cli
            .seed
            .or(config.as_ref().map(|c| c.seed))
            .unwrap_or(DEFAULT_SEED),
        out: cli
            .out
            .clone()
            .or(config.as_ref().map(|c| c.output_dir.clone()))
            .unwrap_or_else(|| PathBuf::from(".")),
        format: cli.format,
        assert_bounds: !cli.no_assert,
        config,
    };
    match cli.command {
        Command::Gen { preset, spec, name } => cmd_gen(&g, preset, spec.as_deref(), &name),
        Command::Perturb {
            matrix,
            spec,
            kind,
            magnitude,
            perp,
            rows,
        } => cmd_perturb(
            &g,
            &matrix,
            spec.as_deref(),
            kind,
            magnitude,
            perp,
            rows.as_deref(),
        ),
        Command::Levscores { matrix, method } => cmd_levscores(&g, &matrix, method),
        Command::Bounds {
            theorem,
            matrix,
            delta,
            eta,
        } => cmd_bounds(&g, &theorem, &matrix, delta.as_deref(), eta),
        Command::Figure { number } => cmd_figure(&g, &number),
        Command::Check => cmd_check(&g),
    }
}

fn ensure_dir(dir: &Path) -> CmdResult {
    std::fs::create_dir_all(dir).map_err(|e| LabError::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, LabError> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))
}

fn print_json<T: Serialize>(value: &T) {
    out!(
        "{}",
        serde_json::to_string_pretty(value).expect("plain data serializes")
    );
}

/// Prints scalar name/value pairs as CSV or as one JSON object.
fn print_scalars(format: Format, pairs: &[(&str, f64)]) {
    match format {
        Format::Csv => {
            out!("quantity,value");
            for (k, v) in pairs {
                out!("{k},{v:e}");
            }
        }
        Format::Json => {
            let map: serde_json::Map<String, serde_json::Value> = pairs
                .iter()
                .map(|(k, v)| (k.to_string(), serde_json::json!(v)))
                .collect();
            print_json(&map);
        }
    }
}

fn cmd_gen(g: &Globals, preset: Preset, spec: Option<&Path>, name: &str) -> CmdResult {
    let recipe = match spec {
        Some(p) => read_json::<GenSpec>(p)?,
        None => match preset {
            Preset::Stepped => g
                .config
                .as_ref()
                .and_then(|c| c.overrides.gen.clone())
                .unwrap_or_else(GenSpec::stepped),
            Preset::IllConditioned => g
                .config
                .as_ref()
                .and_then(|c| c.overrides.gen_b.clone())
                .unwrap_or_else(GenSpec::ill_conditioned),
            Preset::SteppedRaw => GenSpec::stepped_raw(),
        },
    };
    let a = leverage::gen::generate(&recipe, &mut RngState::new(g.seed))?;
    ensure_dir(&g.out)?;
    let path = g.out.join(name);
    write_matrix(&path, &a)?;
    let st = matrix_stats(&a)?;
    eprintln!("wrote {}", path.display());
    print_scalars(
        g.format,
        &[
            ("rows", a.rows() as f64),
            ("cols", a.cols() as f64),
            ("kappa2", st.kappa2),
            ("stable_rank", st.stable_rank),
            ("two_norm", st.two_norm),
            ("frobenius_norm", st.frobenius_norm),
        ],
    );
    Ok(())
}

fn parse_rows(s: &str) -> Result<(usize, usize), Failure> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| Failure::Usage(format!("--rows expects START:END, got '{s}'")))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<usize>()
            .map_err(|_| Failure::Usage(format!("--rows expects START:END, got '{s}'")))
    };
    Ok((parse(a)?, parse(b)?))
}

#[allow(clippy::too_many_arguments)]
fn cmd_perturb(
    g: &Globals,
    matrix: &Path,
    spec: Option<&Path>,
    kind: Option<KindArg>,
    magnitude: f64,
    perp: f64,
    rows: Option<&str>,
) -> CmdResult {
    let a = read_matrix(matrix)?;
    let spec = match (spec, kind) {
        (Some(p), _) => read_json::<PerturbationSpec>(p)?,
        (None, Some(kind)) => {
            let kind = match kind {
                KindArg::Rotation => PerturbationKind::Rotation {
                    target_sin_theta_n: magnitude,
                },
                KindArg::NormwiseTwo => PerturbationKind::NormwiseTwo { eps: magnitude },
                KindArg::NormwiseFro => PerturbationKind::NormwiseFro { eps_f: magnitude },
                KindArg::RowSubset => {
                    let (start, end) = parse_rows(rows.ok_or_else(|| {
                        Failure::Usage("row_subset needs --rows START:END".into())
                    })?)?;
                    PerturbationKind::RowSubset {
                        start,
                        end,
                        eps_f: magnitude,
                    }
                }
                KindArg::SameRowScaling => PerturbationKind::SameRowScaling {
                    eps_f: magnitude,
                    recipe: None,
                },
                KindArg::ComponentwiseRows => PerturbationKind::ComponentwiseRows {
                    eta: vec![magnitude; a.rows()],
                },
                KindArg::RangeDominant => PerturbationKind::RangeDominant {
                    eps: magnitude,
                    eps_perp: perp,
                },
            };
            PerturbationSpec { kind, seed: g.seed }
        }
        (None, None) => return Err(Failure::Usage("perturb needs --kind or --spec".into())),
    };
    let p = spec.apply(&a)?;
    ensure_dir(&g.out)?;
    write_matrix(&g.out.join("delta.txt"), &p.delta)?;
    write_matrix(&g.out.join("perturbed.txt"), &p.perturbed)?;
    let m = measure(&a, &p.delta)?;
    match g.format {
        Format::Json => print_json(&m),
        Format::Csv => print_scalars(
            g.format,
            &[
                ("eps_two", m.eps_two),
                ("eps_fro", m.eps_fro),
                ("eps_two_perp", m.eps_two_perp),
                ("eps_fro_perp", m.eps_fro_perp),
            ],
        ),
    }
    Ok(())
}

fn print_scores(format: Format, lev: &LeverageScores) {
    match format {
        Format::Json => print_json(lev),
        Format::Csv => {
            out!("j,ell");
            for (j, l) in lev.iter().enumerate() {
                out!("{j},{l:e}");
            }
        }
    }
}

fn cmd_levscores(g: &Globals, matrix: &Path, method: Method) -> CmdResult {
    let a = read_matrix(matrix)?;
    let lev = match method {
        Method::Qr => leverage_qr(&a)?,
        Method::Svd => leverage_svd(&a)?,
    };
    print_scores(g.format, &lev);
    Ok(())
}

fn cmd_bounds(
    g: &Globals,
    theorem: &str,
    matrix: &Path,
    delta: Option<&Path>,
    eta: Option<f64>,
) -> CmdResult {
    let theorem: Theorem = theorem
        .parse()
        .map_err(|e: leverage::Error| Failure::Usage(e.to_string()))?;
    let a = read_matrix(matrix)?;
    let lev = leverage_qr(&a)?;
    let delta = delta.map(read_matrix).transpose()?;

    let mut report: BoundReport = if theorem == Theorem::T3_4 {
        let eta = eta.ok_or_else(|| Failure::Usage("t3_4 needs --eta".into()))?;
        let stats = matrix_stats(&a)?;
        bound_t3_4(&vec![eta; a.rows()], a.cols(), stats.kappa2)?
    } else {
        let d = delta
            .as_ref()
            .ok_or_else(|| Failure::Usage(format!("{theorem} needs --delta")))?;
        let perturbed = &a + d;
        let stats = matrix_stats(&a)?;
        let metrics = measure(&a, d)?;
        let angles = || -> Result<_, LabError> {
            Ok(principal_angles(
                &householder_qr(&a)?.q,
                &householder_qr(&perturbed)?.q,
            )?)
        };
        match theorem {
            Theorem::T1Abs => bound_t1(&lev, &angles()?).absolute,
            Theorem::T1Sandwich => bound_t1(&lev, &angles()?).sandwich.ok_or_else(|| {
                LabError::Config(format!(
                    "the sandwich needs m = 2n, matrix is {}x{}",
                    a.rows(),
                    a.cols()
                ))
            })?,
            Theorem::C1Rel => bound_c1(&lev, &angles()?),
            Theorem::T2Perp => bound_t2(&lev, &stats, &metrics)?.0,
            Theorem::T2Gen => bound_t2(&lev, &stats, &metrics)?.1,
            Theorem::T3_1 => bound_t3_1(&lev, &stats, &metrics)?,
            Theorem::T3_2 => bound_t3_2(&stats, &metrics)?,
            Theorem::T3_3 => bound_t3_3(&stats, &metrics)?,
            Theorem::T3_4 => unreachable!("handled above"),
        }
    };

    let lev_tilde = delta.as_ref().map(|d| leverage_qr(&(&a + d))).transpose()?;
    if let Some(lt) = &lev_tilde {
        let observed = match theorem {
            Theorem::T1Sandwich => lt.iter().map(Some).collect(),
            Theorem::T1Abs => absolute_diffs(&lev, lt)?.into_iter().map(Some).collect(),
            _ => relative_diffs(&lev, lt, 0.0)?,
        };
        report = report.compare(observed)?;
    }

    match g.format {
        Format::Json => print_json(&report),
        Format::Csv => {
            let f = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
            out!("j,ell,ell_tilde,observed,lower,bound,holds");
            for j in 0..report.len() {
                out!(
                    "{j},{:e},{},{},{},{},{}",
                    lev[j],
                    f(lev_tilde.as_ref().map(|l| l[j])),
                    f(report.observed[j]),
                    f(report.lower.as_ref().and_then(|l| l[j])),
                    f(report.bound[j]),
                    report.holds[j].map(|h| h.to_string()).unwrap_or_default()
                );
            }
        }
    }
    if lev_tilde.is_some() {
        let v = report.verdict();
        eprintln!(
            "{theorem}: {} of {} rows violate, worst observed/bound {:.3e}: {}",
            v.violations,
            v.checked,
            v.worst_ratio,
            if v.passed { "pass" } else { "FAIL" }
        );
        if !v.passed && g.assert_bounds {
            return Err(LabError::Assertion(format!("{theorem} does not hold")).into());
        }
    }
    Ok(())
}

fn cmd_figure(g: &Globals, number: &str) -> CmdResult {
    let figure: FigureId = number
        .parse()
        .map_err(|e: LabError| Failure::Usage(e.to_string()))?;
    let mut cfg = match &g.config {
        Some(c) => ExperimentConfig {
            figure,
            ..c.clone()
        },
        None => ExperimentConfig::new(figure, g.seed),
    };
    cfg.seed = g.seed;
    cfg.output_dir = g.out.clone();
    let run = run_figure(&cfg, g.assert_bounds)?;

    ensure_dir(&cfg.output_dir)?;
    let stem = cfg.output_dir.join(figure.tag());
    match g.format {
        Format::Csv => write_csv(&stem.with_extension("csv"), &run.rows)?,
        Format::Json => {
            let path = stem.with_extension("json");
            let text = serde_json::to_string_pretty(&run).expect("plain data serializes");
            std::fs::write(&path, text).map_err(|e| LabError::Io {
                path: path.display().to_string(),
                source: e,
            })?;
        }
    }
    let options = SvgOptions {
        title: format!("figure {} (seed {})", figure.number(), cfg.seed),
        ..SvgOptions::default()
    };
    write_svg(&stem.with_extension("svg"), &run.rows, &options)?;

    for (k, v) in &run.summary {
        out!("{k} = {v:e}");
    }
    for f in run.failures() {
        eprintln!("warning: {f}");
    }
    eprintln!(
        "wrote {}.{{{},svg}}",
        stem.display(),
        match g.format {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    );
    Ok(())
}

fn cmd_check(g: &Globals) -> CmdResult {
    let results = checks::run_all(g.seed);
    for r in &results {
        out!("{r}");
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    out!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        return Err(LabError::Assertion(format!("{failed} acceptance criteria failed")).into());
    }
    Ok(())
}
