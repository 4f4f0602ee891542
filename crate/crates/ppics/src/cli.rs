//! The `pp` command line.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ppics_core::entropy::{gaussian_reference_entropy, EntropyConfig};
use ppics_core::optimizer::local_pp;
use ppics_core::pipeline::{Mode, PipelineConfig, StartPolicy};
use ppics_core::scatter::ScatterConfig;
use ppics_core::synthetic::{
    generate, noisy_circle, parallel_planes, projection_score, three_clusters, GeneratorSpec,
    Mixing, Structure,
};
use ppics_core::Matrix;
use serde::{Deserialize, Serialize};

use crate::error::{exit, AppError, AppResult};
use crate::io::{
    format_value, ingest_csv, read_matrix_csv, write_matrix_csv, write_text, CsvOptions,
};
use crate::manifest::{one_based, start_rows, ConfigEcho, InputFingerprint, RunManifest, Timings};
use crate::runner::{default_jobs, run_prepared};
use crate::svg;

#[derive(Debug, Parser)]
#[command(
    name = "pp",
    version,
    about = "Entropy-based projection pursuit with invariant coordinate starts"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the pipeline on a CSV file and write results to --out-dir.
    Run(RunArgs),
    /// Write a synthetic data set with planted structure.
    Generate(GenerateArgs),
    /// Print the entropy estimate of a standard normal sample.
    Reference(ReferenceArgs),
    /// Score a written transform against a planted structure.
    Score(ScoreArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// Prewhiten, invariant coordinates, local PP.
    IcsPp,
    /// Prewhiten, local PP from the prewhitened coordinates.
    GlobalPp,
    /// Prewhiten and invariant coordinates only.
    IcsOnly,
}

impl ModeArg {
    fn mode(self) -> Mode {
        match self {
            ModeArg::IcsPp => Mode::IcsThenPp,
            ModeArg::GlobalPp => Mode::GlobalPp,
            ModeArg::IcsOnly => Mode::IcsOnly,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Numeric CSV, one observation per row.
    #[arg(long)]
    pub input: PathBuf,
    /// The first row of --input holds column names.
    #[arg(long)]
    pub header: bool,
    /// Projection dimension.
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::IcsPp)]
    pub mode: ModeArg,
    /// all-pairs, ics-adjacent, best-initial or explicit=j,k[;j,k...]
    /// (1-based). Defaults to all-pairs for d = 2, ics-adjacent otherwise.
    #[arg(long)]
    pub starts: Option<String>,
    /// Kernel bandwidth.
    #[arg(long, default_value_t = 0.5)]
    pub h: f64,
    /// Offset of the M-scatter weight (nu + r^2)^-gamma.
    #[arg(long, default_value_t = 0.0)]
    pub nu: f64,
    /// Exponent of the M-scatter weight.
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Stop once the squared gradient norm falls below this.
    #[arg(long, default_value_t = 1e-11)]
    pub delta0: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,
    /// Step halvings allowed per iteration.
    #[arg(long, default_value_t = 60)]
    pub max_halvings: usize,
    /// Extra random pre-rotations in global-pp mode.
    #[arg(long, default_value_t = 0)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "pp-out")]
    pub out_dir: PathBuf,
    /// Iteration counts at which the best start is drawn.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
    pub snapshot_iters: Vec<usize>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Clusters,
    Circle,
    Hyperplanes,
    Gaussian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MixingArg {
    None,
    Orthogonal,
    Nonsingular,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    /// Rows; defaults to 500.
    #[arg(long)]
    pub n: Option<usize>,
    /// Columns; defaults to 8 (clusters, gaussian), 16 (circle) or 6 (hyperplanes).
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = MixingArg::Orthogonal)]
    pub mixing: MixingArg,
    /// Output CSV, headerless.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the planted basis and mixing matrix as JSON.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReferenceArgs {
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    #[arg(long, default_value_t = 0.5)]
    pub h: f64,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// JSON written by `generate --truth`.
    #[arg(long)]
    pub truth: PathBuf,
    /// transform_B.csv written by `run`.
    #[arg(long)]
    pub transform: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
}

/// Planted structure of a generated data set, in latent coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub kind: String,
    pub n: usize,
    pub p: usize,
    pub seed: u64,
    /// Rows of the `p × k` planted basis.
    pub planted_basis: Vec<Vec<f64>>,
    /// Rows of `M`, with observed `x = M s`.
    pub mixing: Vec<Vec<f64>>,
}

fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.rows_iter().map(<[f64]>::to_vec).collect()
}

fn from_rows(rows: &[Vec<f64>], cols: usize, what: &str) -> AppResult<Matrix> {
    if rows.iter().any(|r| r.len() != cols) {
        return Err(AppError::Argument(format!("{what} is not rectangular")));
    }
    Ok(Matrix::from_row_major(rows.len(), cols, rows.concat()))
}

/// Parses the --starts value; returns the policy and its canonical spelling.
pub fn parse_starts(value: Option<&str>, d: usize) -> AppResult<(StartPolicy, String)> {
    let policy = match value {
        None => StartPolicy::default_for(d),
        Some("all-pairs") => StartPolicy::AllPairs,
        Some("ics-adjacent") => StartPolicy::IcsAdjacent,
        Some("best-initial") => StartPolicy::BestInitialOnly,
        Some(s) if s.starts_with("explicit=") => {
            let mut tuples = Vec::new();
            for part in s["explicit=".len()..].split(';') {
                let tuple = part
                    .split(',')
                    .map(|k| match k.trim().parse::<usize>() {
                        Ok(k) if k >= 1 => Ok(k - 1),
                        _ => Err(AppError::Argument(format!(
                            "start index {k:?} is not a positive integer"
                        ))),
                    })
                    .collect::<AppResult<Vec<_>>>()?;
                tuples.push(tuple);
            }
            StartPolicy::Explicit(tuples)
        }
        Some(other) => {
            return Err(AppError::Argument(format!(
                "unknown start policy {other:?}"
            )));
        }
    };
    let name = match &policy {
        StartPolicy::AllPairs => "all-pairs".to_owned(),
        StartPolicy::IcsAdjacent => "ics-adjacent".to_owned(),
        StartPolicy::BestInitialOnly => "best-initial".to_owned(),
        StartPolicy::Explicit(t) => {
            let parts: Vec<String> = t
                .iter()
                .map(|tuple| {
                    one_based(tuple)
                        .iter()
                        .map(usize::to_string)
                        .collect::<Vec<_>>()
                        .join(",")
                })
                .collect();
            format!("explicit={}", parts.join(";"))
        }
    };
    Ok((policy, name))
}

fn pipeline_config(args: &RunArgs, starts: StartPolicy) -> AppResult<PipelineConfig> {
    let mut cfg = PipelineConfig::new(args.d);
    cfg.scatter = ScatterConfig::new(args.nu, args.gamma)?;
    cfg.optimizer.entropy = EntropyConfig::new(args.h)?;
    cfg.optimizer.threshold = args.delta0;
    cfg.optimizer.max_outer_iters = args.max_iters;
    cfg.optimizer.max_halvings = args.max_halvings;
    cfg.optimizer.validate()?;
    cfg.mode = args.mode.mode();
    cfg.starts = starts;
    cfg.restarts = args.restarts;
    cfg.seed = args.seed;
    Ok(cfg)
}

fn millis(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn coordinate_names(p: usize) -> Vec<String> {
    (1..=p).map(|k| format!("c{k}")).collect()
}

/// Runs the pipeline and writes every output file. Returns the exit status.
pub fn run(args: &RunArgs) -> AppResult<i32> {
    let t0 = Instant::now();
    let table = ingest_csv(
        &args.input,
        &CsvOptions {
            header: args.header,
        },
    )?;
    let ingest = millis(t0);

    let (starts, starts_name) = parse_starts(args.starts.as_deref(), args.d)?;
    let cfg = pipeline_config(args, starts)?;
    let jobs = args.jobs.unwrap_or_else(default_jobs).max(1);

    let t1 = Instant::now();
    let (prepared, result) = run_prepared(&table.data, &cfg, jobs)?;
    let pipeline = millis(t1);

    let t2 = Instant::now();
    let dir = &args.out_dir;
    std::fs::create_dir_all(dir).map_err(|source| AppError::Write {
        path: dir.clone(),
        source,
    })?;
    let (n, p) = table.data.rows().shape();
    let mut outputs = Vec::new();
    let emit = |name: &str, outputs: &mut Vec<String>| {
        outputs.push(name.to_owned());
        dir.join(name)
    };

    write_matrix_csv(
        &emit("projected.csv", &mut outputs),
        &result.final_data.columns(0, cfg.d),
    )?;
    write_matrix_csv(&emit("transform_B.csv", &mut outputs), &result.b)?;

    let mut trace = String::new();
    for s in &result.per_start {
        let Some(t) = &s.trace else { continue };
        for r in &t.records {
            let line = serde_json::json!({
                "restart": s.restart,
                "start": one_based(&s.indices),
                "iter": r.iter,
                "h_before": r.h_before,
                "h_after": r.h_after,
                "grad_norm_sq": r.grad_norm_sq,
                "halvings": r.halvings,
                "t": r.accepted_t,
            });
            trace.push_str(&line.to_string());
            trace.push('\n');
        }
    }
    write_text(&emit("trace.jsonl", &mut outputs), &trace)?;

    let names = coordinate_names(p);
    let title = format!(
        "{} coordinates, final entropy {:.4}",
        args.mode.to_possible_value().unwrap().get_name(),
        result.final_h()
    );
    write_text(
        &emit("splom.svg", &mut outputs),
        &svg::splom(&result.final_data, &names, &title),
    )?;

    if result.best.is_some() {
        let start = prepared.start_data(&result.best_start)?;
        let mut snap_cfg = cfg.optimizer;
        for &k in &args.snapshot_iters {
            let data = if k == 0 {
                start.rows().clone()
            } else {
                snap_cfg.max_outer_iters = k;
                local_pp(&start, cfg.d, &snap_cfg)?.rotated_data.into_rows()
            };
            let x = data.column(0);
            let y = data.column(1);
            let title = format!("best start after {k} iterations");
            let doc = svg::scatter(&x, &y, &names[0], &names[1], &title);
            write_text(&emit(&format!("snapshot_iter_{k}.svg"), &mut outputs), &doc)?;
        }
    }
    outputs.push("manifest.json".to_owned());

    let (rows, best) = start_rows(&result);
    let manifest = RunManifest {
        tool: "pp".to_owned(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        config: ConfigEcho {
            d: cfg.d,
            mode: args.mode.to_possible_value().unwrap().get_name().to_owned(),
            starts: starts_name,
            h: args.h,
            nu: args.nu,
            gamma: args.gamma,
            delta0: args.delta0,
            max_iters: args.max_iters,
            max_halvings: args.max_halvings,
            restarts: args.restarts,
            seed: args.seed,
            jobs,
            snapshot_iters: args.snapshot_iters.clone(),
        },
        input: InputFingerprint {
            path: args.input.display().to_string(),
            rows: n,
            cols: p,
            sha256: table.sha256.clone(),
            column_names: table.column_names.clone(),
        },
        reference_entropy: gaussian_reference_entropy(cfg.d, cfg.entropy()),
        center: result.center.clone(),
        starts: rows,
        best,
        best_final_h: result.final_h(),
        b_discrepancy: result.b_discrepancy(),
        all_starts_capped: result.all_capped(),
        outputs,
        timings_ms: Timings {
            ingest,
            pipeline,
            outputs: millis(t2),
        },
    };
    write_text(
        &dir.join("manifest.json"),
        &serde_json::to_string_pretty(&manifest)?,
    )?;

    println!(
        "best start {:?} (restart {}), final entropy {}, {} iterations; wrote {}",
        manifest.best.indices,
        manifest.best.restart,
        format_value(manifest.best_final_h),
        manifest.best.iterations,
        dir.display()
    );
    if result.all_capped() {
        eprintln!("warning: every optimized start stopped at an iteration or step-size cap");
        return Ok(exit::ALL_CAPPED);
    }
    Ok(exit::OK)
}

fn generator_spec(args: &GenerateArgs) -> AppResult<GeneratorSpec> {
    let mut spec = match args.kind {
        KindArg::Clusters => three_clusters(args.seed),
        KindArg::Circle => noisy_circle(args.seed),
        KindArg::Hyperplanes => parallel_planes(args.seed),
        KindArg::Gaussian => GeneratorSpec {
            structure: Structure::PureGaussian,
            n: 500,
            p: 8,
            mixing: Mixing::RandomOrthogonal,
            seed: args.seed,
        },
    };
    if let Some(n) = args.n {
        spec.n = n;
    }
    if let Some(p) = args.p {
        spec.p = p;
    }
    spec.mixing = match args.mixing {
        MixingArg::None => Mixing::None,
        MixingArg::Orthogonal => Mixing::RandomOrthogonal,
        MixingArg::Nonsingular => Mixing::RandomNonsingular,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn generate_cmd(args: &GenerateArgs) -> AppResult<i32> {
    let spec = generator_spec(args)?;
    let set = generate(&spec)?;
    write_matrix_csv(&args.out, set.data.rows())?;
    if let Some(path) = &args.truth {
        let truth = Truth {
            kind: spec.structure.kind_name().to_owned(),
            n: spec.n,
            p: spec.p,
            seed: spec.seed,
            planted_basis: to_rows(&set.planted_basis),
            mixing: to_rows(&set.mixing),
        };
        write_text(path, &serde_json::to_string_pretty(&truth)?)?;
    }
    Ok(exit::OK)
}

pub fn read_truth(path: &Path) -> AppResult<Truth> {
    let text = std::fs::read_to_string(path).map_err(|source| AppError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

/// Recovery score of the first `d` columns of a transform.
pub fn score(truth: &Truth, transform: &Matrix, d: usize) -> AppResult<f64> {
    let p = truth.p;
    if transform.shape() != (p, p) || d == 0 || d > p {
        return Err(AppError::Argument(format!(
            "transform is {}x{}, expected {p}x{p} with 1 <= d <= {p}",
            transform.nrows(),
            transform.ncols()
        )));
    }
    let k = truth.planted_basis.first().map_or(0, Vec::len);
    let planted = from_rows(&truth.planted_basis, k, "planted_basis")?;
    let mixing = from_rows(&truth.mixing, p, "mixing")?;
    if planted.nrows() != p || mixing.nrows() != p {
        return Err(AppError::Argument(
            "truth matrices do not match p".to_owned(),
        ));
    }
    Ok(projection_score(
        &transform.columns(0, d),
        &mixing,
        &planted,
    ))
}

/// Parses arguments, runs the command and reports errors as one JSON line on
/// stderr. Returns the process exit status.
pub fn main() -> i32 {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(a) => run(a),
        Command::Generate(a) => generate_cmd(a),
        Command::Reference(a) => EntropyConfig::new(a.h)
            .map_err(AppError::from)
            .and_then(|cfg| {
                if a.d == 0 {
                    return Err(AppError::Argument("d must be at least 1".to_owned()));
                }
                println!("{:.4}", gaussian_reference_entropy(a.d, &cfg));
                Ok(exit::OK)
            }),
        Command::Score(a) => read_truth(&a.truth).and_then(|truth| {
            let b = read_matrix_csv(&a.transform)?;
            println!("{:.6}", score(&truth, &b, a.d)?);
            Ok(exit::OK)
        }),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let line = serde_json::json!({ "category": e.category(), "message": e.to_string() });
            eprintln!("{line}");
            e.exit_code()
        }
    }
}
