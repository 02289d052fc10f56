//! `place`: batch front end for persistence-landmark classification.
//!
//! Every subcommand reads a TU-format graph dataset (or diagram files for
//! `bottleneck`), prints a tab-separated table on stdout and, with `--out`,
//! writes line-delimited JSON records, TSV tables and the run configuration
//! under the output directory.
//!
//! Diagram files hold one JSON record per line:
//! `{"points": [[birth, death], ...], "dim": 0}` with `dim` optional and
//! `0 <= birth < death` for every point. Blank lines are skipped.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric guard.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use place_core::diagram::{bottleneck, read_diagrams, write_diagrams};
use place_core::embedding::{embed_checked, EmbeddedVector, ScaleConfig, ScaleConfigRecord};
use place_core::graphfilt::{corpus_diagrams, load_tu_dataset, parse_descriptors, TuDataset};
use place_core::protocol::{
    evaluate, fit_scale_config, run_audit, select_pool, DescriptorSet, TauRule,
};
use place_core::stats::SelectionRule;
use place_core::{PersistenceDiagram, PlaceError};
use serde::Serialize;

use config::{set_dir_name, Overrides, RunConfig};
use output::{json, jsonl, opt, Sink, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] PlaceError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Core(PlaceError::InvalidParameter(_)) => 1,
            CliError::Core(PlaceError::Numeric(_)) => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "place",
    version,
    about = "Persistence-landmark embeddings with certified classification"
)]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for pair sampling and the crossing scale rule.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated cross-validation seeds.
    #[arg(long, global = true, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    n_scales: Option<usize>,
    /// Scale-center rule: proxy or crossing.
    #[arg(long, global = true)]
    tau: Option<TauRule>,
    /// Comma-separated descriptor sets, each `+`-joined, e.g. `degree,degree+hks:10`.
    #[arg(long, global = true, value_delimiter = ',')]
    descriptors: Option<Vec<String>>,
    /// Points kept per pooled diagram.
    #[arg(long, global = true)]
    n_max: Option<usize>,
    #[arg(long, global = true)]
    folds: Option<usize>,
    /// Comma-separated regularization grid for the linear model.
    #[arg(long, global = true, value_delimiter = ',')]
    c_grid: Option<Vec<f64>>,
    /// Selection rule: mah, delta_over_r or eta.
    #[arg(long, global = true)]
    rule: Option<SelectionRule>,
    /// Cross-class pairs sampled by the audit.
    #[arg(long, global = true)]
    pairs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute pooled diagrams and their embeddings.
    Embed { dataset: Option<PathBuf> },
    /// Rank descriptor sets by the closed-form selection statistics.
    Select { dataset: Option<PathBuf> },
    /// Stratified cross-validation with certificates.
    Evaluate { dataset: Option<PathBuf> },
    /// Coherence and certificate-bound audits.
    Audit { dataset: Option<PathBuf> },
    /// Pairwise bottleneck distances between two diagram files.
    Bottleneck { a: PathBuf, b: Option<PathBuf> },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let dataset = match &cli.cmd {
        Command::Embed { dataset }
        | Command::Select { dataset }
        | Command::Evaluate { dataset }
        | Command::Audit { dataset } => dataset.clone(),
        Command::Bottleneck { .. } => None,
    };
    cfg.apply(Overrides {
        dataset,
        descriptors: cli.descriptors,
        tau_rule: cli.tau,
        n_scales: cli.n_scales,
        n_max: cli.n_max,
        folds: cli.folds,
        seeds: cli.seeds,
        seed: cli.seed,
        alpha: cli.alpha,
        c_grid: cli.c_grid,
        rule: cli.rule,
        audit_pairs: cli.pairs,
        out: cli.out,
    });
    cfg.validate()?;
    let sink = Sink::new(cfg.out.clone());
    match &cli.cmd {
        Command::Bottleneck { a, b } => return cmd_bottleneck(a, b.as_deref(), &sink),
        _ => sink.write(
            "run_config.toml",
            &toml::to_string(&cfg).map_err(|e| CliError::Usage(e.to_string()))?,
        )?,
    }
    let data = load_tu_dataset(cfg.dataset()?)?;
    log::info!(
        "loaded {} graphs in {} classes from {}",
        data.graphs.len(),
        data.n_classes(),
        data.name
    );
    match cli.cmd {
        Command::Embed { .. } => cmd_embed(&cfg, &data, &sink),
        Command::Select { .. } => cmd_select(&cfg, &data, &sink),
        Command::Evaluate { .. } => cmd_evaluate(&cfg, &data, &sink),
        Command::Audit { .. } => cmd_audit(&cfg, &data, &sink),
        Command::Bottleneck { .. } => unreachable!(),
    }
}

fn set_diagrams(
    cfg: &RunConfig,
    data: &TuDataset,
    set: &str,
) -> Result<Vec<PersistenceDiagram>, CliError> {
    let descriptors = parse_descriptors(set)?;
    Ok(corpus_diagrams(&data.graphs, &descriptors, cfg.n_max)?)
}

#[derive(Serialize)]
struct EmbeddedRow<'a> {
    index: usize,
    label: i64,
    row: &'a [f64],
}

#[derive(Serialize)]
struct FittedScale {
    tau_star: f64,
    #[serde(flatten)]
    record: ScaleConfigRecord,
}

fn grid_table(scale: &ScaleConfig) -> Table {
    let mut t = Table::new(&[
        "scale_index",
        "scale",
        "coordinate",
        "m",
        "n",
        "birth",
        "death",
    ]);
    let mut offset = 0;
    for (k, g) in scale.grids().iter().enumerate() {
        for (i, lm) in g.landmarks.iter().enumerate() {
            t.push(row![
                k,
                g.scale,
                offset + i,
                lm.m,
                lm.n,
                lm.point.birth,
                lm.point.death
            ]);
        }
        if g.has_diagonal {
            t.push(row![
                k,
                g.scale,
                offset + g.diagonal_index(),
                "*",
                "*",
                "*",
                "*"
            ]);
        }
        offset += g.len();
    }
    t
}

fn cmd_embed(cfg: &RunConfig, data: &TuDataset, sink: &Sink) -> Result<(), CliError> {
    let mut summary = Table::new(&[
        "set", "diagrams", "tau_star", "bound", "n_scales", "dim", "mean_nnz",
    ]);
    for set in &cfg.descriptors {
        let diagrams = set_diagrams(cfg, data, set)?;
        let (tau_star, scale) = fit_scale_config(
            &diagrams,
            &data.labels,
            cfg.tau_rule,
            cfg.n_scales,
            cfg.crossing_pairs,
            cfg.seed,
        )?;
        let embedded = diagrams
            .iter()
            .map(|d| embed_checked(d, &scale))
            .collect::<Result<Vec<_>, _>>()?;
        let rows: Vec<Vec<f64>> = embedded.iter().map(EmbeddedVector::to_flat).collect();
        let dir = PathBuf::from(set_dir_name(set));

        let mut buf = Vec::new();
        write_diagrams(&mut buf, &diagrams).map_err(|e| CliError::io("<memory>", e))?;
        sink.write(dir.join("diagrams.jsonl"), &String::from_utf8_lossy(&buf))?;

        let labels: Vec<i64> = data.labels.iter().map(|&l| data.label_values[l]).collect();
        let records = rows.iter().enumerate().map(|(index, row)| EmbeddedRow {
            index,
            label: labels[index],
            row,
        });
        sink.write(dir.join("embedding.jsonl"), &jsonl(records)?)?;

        let mut header = vec!["index".to_string(), "label".to_string()];
        header.extend((0..scale.total_dim()).map(|j| format!("x{j}")));
        let mut table = Table::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
        for (i, r) in rows.iter().enumerate() {
            let mut line = row![i, labels[i]];
            line.extend(r.iter().map(f64::to_string));
            table.push(line);
        }
        sink.write(dir.join("embedding.tsv"), &table.render())?;
        sink.write(
            dir.join("scale_config.json"),
            &json(&FittedScale {
                tau_star,
                record: scale.record(),
            })?,
        )?;
        sink.write(dir.join("grid.tsv"), &grid_table(&scale).render())?;

        let nnz = embedded.iter().map(EmbeddedVector::nnz).sum::<usize>() as f64
            / embedded.len().max(1) as f64;
        summary.push(row![
            set,
            diagrams.len(),
            tau_star,
            scale.bound(),
            scale.n_scales(),
            scale.total_dim(),
            nnz
        ]);
    }
    sink.write("embed.tsv", &summary.render())?;
    print!("{}", summary.render());
    Ok(())
}

fn cmd_select(cfg: &RunConfig, data: &TuDataset, sink: &Sink) -> Result<(), CliError> {
    let sets = cfg
        .descriptors
        .iter()
        .map(|s| {
            Ok(DescriptorSet {
                name: s.clone(),
                descriptors: parse_descriptors(s)?,
            })
        })
        .collect::<Result<Vec<_>, PlaceError>>()?;
    let report = select_pool(&data.graphs, &data.labels, &sets, &cfg.select_config())?;
    let mut t = Table::new(&[
        "set",
        "dim",
        "delta",
        "radius",
        "eta",
        "delta_over_r",
        "rho_mah",
        "rank_mah",
        "rank_delta_over_r",
        "rank_eta",
    ]);
    for r in &report.rows {
        t.push(row![
            r.name,
            r.dim,
            r.delta,
            r.radius,
            r.eta,
            r.delta_over_r,
            r.rho_mah,
            r.rank_mah,
            r.rank_delta_over_r,
            r.rank_eta
        ]);
    }
    sink.write("selection.json", &json(&report)?)?;
    sink.write("selection.jsonl", &jsonl(&report.rows)?)?;
    sink.write("selection.tsv", &t.render())?;
    print!("{}", t.render());
    println!("chosen\t{}", report.chosen);
    Ok(())
}

#[derive(Serialize)]
struct EvalSummaryRecord<'a> {
    set: &'a str,
    config: &'a place_core::protocol::EvalConfig,
    warnings: &'a [String],
    summary: &'a place_core::protocol::EvalSummary,
}

fn cmd_evaluate(cfg: &RunConfig, data: &TuDataset, sink: &Sink) -> Result<(), CliError> {
    let mut summary = Table::new(&[
        "set",
        "runs",
        "folds",
        "nc_mean",
        "nc_std",
        "linear_mean",
        "linear_std",
        "fire_pinelis",
        "fire_bernstein",
        "fire_gaussian",
        "bernstein_out_of_regime",
    ]);
    for set in &cfg.descriptors {
        let diagrams = set_diagrams(cfg, data, set)?;
        let report = evaluate(&diagrams, &data.labels, &cfg.eval_config())?;
        for w in &report.warnings {
            log::warn!("{set}: {w}");
        }
        let dir = PathBuf::from(set_dir_name(set));
        let mut folds = Table::new(&[
            "seed",
            "fold",
            "n_train",
            "n_test",
            "tau_star",
            "bound",
            "dim",
            "eta",
            "c",
            "nc_accuracy",
            "linear_accuracy",
            "delta",
            "radius",
            "radius_pinelis",
            "radius_bernstein",
            "radius_gaussian",
            "fire_pinelis",
            "fire_bernstein",
            "fire_gaussian",
            "m_pinelis",
            "m_bernstein",
            "m_gaussian",
        ]);
        for f in &report.folds {
            let c = &f.certificate;
            let th = c
                .classes
                .iter()
                .filter_map(|k| k.thresholds.as_ref())
                .next();
            folds.push(row![
                f.seed,
                f.fold,
                f.n_train,
                f.n_test,
                f.tau_star,
                f.bound,
                f.total_dim,
                f.eta,
                f.c,
                f.nc_accuracy,
                f.linear_accuracy,
                c.delta,
                c.radius,
                c.radius_pinelis,
                c.radius_bernstein,
                c.radius_gaussian,
                c.fire_pinelis,
                c.fire_bernstein,
                c.fire_gaussian,
                opt(th.map(|t| t.pinelis)),
                opt(th.map(|t| t.bernstein)),
                opt(th.map(|t| t.gaussian)),
            ]);
        }
        sink.write(dir.join("folds.jsonl"), &jsonl(&report.folds)?)?;
        sink.write(dir.join("folds.tsv"), &folds.render())?;
        let s = &report.summary;
        let record = EvalSummaryRecord {
            set,
            config: &report.config,
            warnings: &report.warnings,
            summary: s,
        };
        sink.write(dir.join("summary.json"), &json(&record)?)?;
        summary.push(row![
            set,
            s.n_runs,
            s.n_folds,
            s.nc_mean,
            s.nc_std,
            s.linear_mean,
            s.linear_std,
            s.fire_pinelis,
            s.fire_bernstein,
            s.fire_gaussian,
            s.bernstein_out_of_regime
        ]);
    }
    sink.write("evaluate.tsv", &summary.render())?;
    print!("{}", summary.render());
    Ok(())
}

fn cmd_audit(cfg: &RunConfig, data: &TuDataset, sink: &Sink) -> Result<(), CliError> {
    let mut t = Table::new(&[
        "set",
        "tau_star",
        "pairs",
        "qualifying",
        "coherent_fraction",
        "bound_fraction",
        "ratio_min",
        "ratio_p25",
        "ratio_p50",
        "ratio_p75",
        "coherent_violations",
        "delta_star",
        "lambda",
        "affine_bound",
        "step_bound",
        "delta",
        "respects_affine",
        "respects_step",
    ]);
    let mut records = Vec::new();
    for set in &cfg.descriptors {
        let diagrams = set_diagrams(cfg, data, set)?;
        let run = run_audit(&diagrams, &data.labels, &cfg.audit_config())?;
        let (p, b) = (&run.pairs, &run.bridge);
        t.push(row![
            set,
            run.tau_star,
            p.n_pairs_sampled,
            p.n_qualifying,
            p.coherent_fraction,
            p.bound_fraction,
            p.ratio_min,
            p.ratio_p25,
            p.ratio_p50,
            p.ratio_p75,
            p.coherent_violations,
            b.delta_star,
            b.lambda,
            b.affine_bound,
            b.step_bound,
            b.delta,
            b.respects_affine,
            b.respects_step
        ]);
        sink.write(
            PathBuf::from(set_dir_name(set)).join("audit.json"),
            &json(&run)?,
        )?;
        records.push(serde_json::json!({ "set": set, "tau_star": run.tau_star, "pairs": run.pairs, "bridge": run.bridge }));
    }
    sink.write("audit.jsonl", &jsonl(&records)?)?;
    sink.write("audit.tsv", &t.render())?;
    print!("{}", t.render());
    Ok(())
}

#[derive(Serialize)]
struct DistanceRecord {
    a: usize,
    b: usize,
    distance: f64,
}

fn cmd_bottleneck(a: &Path, b: Option<&Path>, sink: &Sink) -> Result<(), CliError> {
    let da = read_diagrams(a)?;
    let db = match b {
        Some(p) => read_diagrams(p)?,
        None => da.clone(),
    };
    let mut header = vec!["a".to_string()];
    header.extend((0..db.len()).map(|j| j.to_string()));
    let mut t = Table::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    let mut records = Vec::with_capacity(da.len() * db.len());
    for (i, x) in da.iter().enumerate() {
        let mut line = row![i];
        for (j, y) in db.iter().enumerate() {
            let distance = bottleneck(x, y);
            line.push(distance.to_string());
            records.push(DistanceRecord {
                a: i,
                b: j,
                distance,
            });
        }
        t.push(line);
    }
    sink.write("bottleneck.tsv", &t.render())?;
    sink.write("bottleneck.jsonl", &jsonl(&records)?)?;
    print!("{}", t.render());
    Ok(())
}
