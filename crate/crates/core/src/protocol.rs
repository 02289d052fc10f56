//! Stratified cross-validation harness tying the pipeline together.
//!
//! Every outer fold refits the scale center and bound on its training
//! diagrams only, embeds with that configuration, fits class statistics and
//! certificates, and scores nearest-centroid and linear predictions on the
//! held-out fold. Folds run in parallel and are reported in `(seed, fold)`
//! order.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audit::{audit_pairs, lambda_bridge, AuditReport, BridgeReport};
use crate::certify::{certify, nc_predict, CertificateReport, DEFAULT_ALPHA};
use crate::diagram::PersistenceDiagram;
use crate::embedding::{
    auto_bound, embed_corpus, make_scale_config, tau_crossing, tau_proxy, EmbeddedVector,
    ScaleConfig,
};
use crate::error::{PlaceError, Result};
use crate::graphfilt::{corpus_diagrams, Descriptor, Graph};
use crate::linear::{predict_linear, train_linear, DEFAULT_C_GRID};
use crate::stats::{
    eta, fit_class_stats, n_classes, select_descriptor, DescriptorCorpus, SelectionReport,
    SelectionRule,
};

pub const DEFAULT_N_MAX: usize = 50;
pub const DEFAULT_FOLDS: usize = 10;
pub const DEFAULT_CROSSING_PAIRS: usize = 200;

/// Fold index per sample. Each class is shuffled with `seed` and dealt
/// round-robin, continuing where the previous class stopped, so every fold's
/// class counts are within one of the global proportions.
pub fn stratified_folds(labels: &[usize], n_folds: usize, seed: u64) -> Result<Vec<usize>> {
    if n_folds < 2 {
        return Err(PlaceError::InvalidParameter(format!(
            "need at least 2 folds, got {n_folds}"
        )));
    }
    if labels.len() < n_folds {
        return Err(PlaceError::InvalidParameter(format!(
            "{} samples cannot fill {n_folds} folds",
            labels.len()
        )));
    }
    let k = n_classes(labels);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0; labels.len()];
    let mut next = 0;
    for c in 0..k {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            folds[i] = next % n_folds;
            next += 1;
        }
    }
    Ok(folds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauRule {
    Proxy,
    Crossing,
}

impl std::str::FromStr for TauRule {
    type Err = PlaceError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proxy" => Ok(Self::Proxy),
            "crossing" => Ok(Self::Crossing),
            other => Err(PlaceError::InvalidParameter(format!(
                "unknown scale rule '{other}'"
            ))),
        }
    }
}

/// Scale configuration fitted to a training pool.
pub fn fit_scale_config(
    diagrams: &[PersistenceDiagram],
    labels: &[usize],
    rule: TauRule,
    n_scales: usize,
    crossing_pairs: usize,
    seed: u64,
) -> Result<(f64, ScaleConfig)> {
    let bound = auto_bound(diagrams)?;
    let tau = match rule {
        TauRule::Proxy => tau_proxy(diagrams)?,
        TauRule::Crossing => tau_crossing(diagrams, labels, crossing_pairs, seed)?,
    };
    if !(tau > 0.0) {
        return Err(PlaceError::Numeric(format!(
            "scale center {tau} is not positive"
        )));
    }
    Ok((tau, make_scale_config(tau, n_scales, bound)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub n_scales: usize,
    pub tau: TauRule,
    pub n_folds: usize,
    pub seeds: Vec<u64>,
    pub alpha: f64,
    pub c_grid: Vec<f64>,
    pub crossing_pairs: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            n_scales: 5,
            tau: TauRule::Proxy,
            n_folds: DEFAULT_FOLDS,
            seeds: (0..5).collect(),
            alpha: DEFAULT_ALPHA,
            c_grid: DEFAULT_C_GRID.to_vec(),
            crossing_pairs: DEFAULT_CROSSING_PAIRS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub seed: u64,
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub tau_star: f64,
    pub bound: f64,
    pub total_dim: usize,
    pub eta: f64,
    pub c: f64,
    pub nc_accuracy: f64,
    pub linear_accuracy: f64,
    pub certificate: CertificateReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub n_runs: usize,
    pub n_folds: usize,
    pub nc_mean: f64,
    pub nc_std: f64,
    pub linear_mean: f64,
    pub linear_std: f64,
    pub fire_pinelis: f64,
    pub fire_bernstein: f64,
    pub fire_gaussian: f64,
    pub bernstein_out_of_regime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: EvalConfig,
    pub warnings: Vec<String>,
    pub folds: Vec<FoldResult>,
    pub summary: EvalSummary,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, var.sqrt())
}

fn run_fold(
    diagrams: &[PersistenceDiagram],
    labels: &[usize],
    folds: &[usize],
    seed: u64,
    fold: usize,
    cfg: &EvalConfig,
) -> Result<FoldResult> {
    let train: Vec<usize> = (0..labels.len()).filter(|&i| folds[i] != fold).collect();
    let test: Vec<usize> = (0..labels.len()).filter(|&i| folds[i] == fold).collect();
    let train_d: Vec<PersistenceDiagram> = train.iter().map(|&i| diagrams[i].clone()).collect();
    let train_y: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
    let (tau_star, scale) = fit_scale_config(
        &train_d,
        &train_y,
        cfg.tau,
        cfg.n_scales,
        cfg.crossing_pairs,
        seed,
    )?;
    let emb = embed_corpus(diagrams, &scale);
    let rows: Vec<Vec<f64>> = emb.iter().map(EmbeddedVector::to_flat).collect();
    let train_x: Vec<&[f64]> = train.iter().map(|&i| rows[i].as_slice()).collect();
    let stats = fit_class_stats(&train_x, &train_y)?;
    let certificate = certify(&stats, cfg.alpha)?;
    let model = train_linear(&train_x, &train_y, &cfg.c_grid, seed)?;
    let mut nc_hits = 0;
    let mut lin_hits = 0;
    for &i in &test {
        nc_hits += usize::from(nc_predict(&rows[i], &stats)? == labels[i]);
        lin_hits += usize::from(predict_linear(&model, &rows[i])? == labels[i]);
    }
    let nt = test.len().max(1) as f64;
    Ok(FoldResult {
        seed,
        fold,
        n_train: train.len(),
        n_test: test.len(),
        tau_star,
        bound: scale.bound(),
        total_dim: scale.total_dim(),
        eta: eta(&stats, scale.total_dim()),
        c: model.c,
        nc_accuracy: nc_hits as f64 / nt,
        linear_accuracy: lin_hits as f64 / nt,
        certificate,
    })
}

/// Repeated stratified cross-validation of both classifiers with per-fold
/// certificates. Fold count drops (with a warning) when a class is smaller
/// than the requested number of folds.
pub fn evaluate(
    diagrams: &[PersistenceDiagram],
    labels: &[usize],
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    if diagrams.len() != labels.len() {
        return Err(PlaceError::DimensionMismatch {
            expected: diagrams.len(),
            got: labels.len(),
        });
    }
    if cfg.seeds.is_empty() {
        return Err(PlaceError::InvalidParameter(
            "need at least one seed".into(),
        ));
    }
    let k = n_classes(labels);
    let mut counts = vec![0usize; k];
    labels.iter().for_each(|&y| counts[y] += 1);
    if let Some(c) = counts.iter().position(|&m| m == 0) {
        return Err(PlaceError::EmptyClass(c));
    }
    if k < 2 {
        return Err(PlaceError::TooFewClasses { needed: 2, got: k });
    }
    let smallest = *counts.iter().min().unwrap_or(&0);
    let mut warnings = Vec::new();
    let mut n_folds = cfg.n_folds;
    if smallest < n_folds {
        n_folds = smallest.max(2);
        warnings.push(format!(
            "smallest class has {smallest} samples; using {n_folds} folds instead of {}",
            cfg.n_folds
        ));
    }
    let assignments = cfg
        .seeds
        .iter()
        .map(|&s| stratified_folds(labels, n_folds, s))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..cfg.seeds.len())
        .flat_map(|s| (0..n_folds).map(move |f| (s, f)))
        .collect();
    let folds = jobs
        .par_iter()
        .map(|&(s, f)| run_fold(diagrams, labels, &assignments[s], cfg.seeds[s], f, cfg))
        .collect::<Result<Vec<_>>>()?;
    let nc: Vec<f64> = folds.iter().map(|f| f.nc_accuracy).collect();
    let lin: Vec<f64> = folds.iter().map(|f| f.linear_accuracy).collect();
    let (nc_mean, nc_std) = mean_std(&nc);
    let (linear_mean, linear_std) = mean_std(&lin);
    let frac = |p: &dyn Fn(&FoldResult) -> bool| {
        folds.iter().filter(|f| p(f)).count() as f64 / folds.len() as f64
    };
    let summary = EvalSummary {
        n_runs: folds.len(),
        n_folds,
        nc_mean,
        nc_std,
        linear_mean,
        linear_std,
        fire_pinelis: frac(&|f| f.certificate.fire_pinelis),
        fire_bernstein: frac(&|f| f.certificate.fire_bernstein),
        fire_gaussian: frac(&|f| f.certificate.fire_gaussian),
        bernstein_out_of_regime: frac(&|f| {
            f.certificate
                .classes
                .iter()
                .any(|c| c.bernstein_out_of_regime)
        }),
    };
    Ok(EvalReport {
        config: cfg.clone(),
        warnings,
        folds,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub n_scales: usize,
    pub tau: TauRule,
    pub n_pairs: usize,
    pub seed: u64,
    pub crossing_pairs: usize,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            n_scales: 5,
            tau: TauRule::Proxy,
            n_pairs: 2000,
            seed: 0,
            crossing_pairs: DEFAULT_CROSSING_PAIRS,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditRun {
    pub tau_star: f64,
    pub scale: ScaleConfig,
    pub pairs: AuditReport,
    pub bridge: BridgeReport,
}

/// Fits the scale configuration on the whole corpus and runs the pair audit
/// and the separation bridge.
pub fn run_audit(
    diagrams: &[PersistenceDiagram],
    labels: &[usize],
    cfg: &AuditConfig,
) -> Result<AuditRun> {
    let (tau_star, scale) = fit_scale_config(
        diagrams,
        labels,
        cfg.tau,
        cfg.n_scales,
        cfg.crossing_pairs,
        cfg.seed,
    )?;
    let pairs = audit_pairs(diagrams, labels, &scale, cfg.n_pairs, cfg.seed)?;
    let emb = embed_corpus(diagrams, &scale);
    let rows: Vec<Vec<f64>> = emb.iter().map(EmbeddedVector::to_flat).collect();
    let stats = fit_class_stats(&rows, labels)?;
    let bridge = lambda_bridge(diagrams, labels, &scale, &stats, cfg.n_pairs, cfg.seed)?;
    Ok(AuditRun {
        tau_star,
        scale,
        pairs,
        bridge,
    })
}

/// One named descriptor combination for selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorSet {
    pub name: String,
    pub descriptors: Vec<Descriptor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectConfig {
    pub n_max: usize,
    pub n_scales: usize,
    pub tau: TauRule,
    pub rule: SelectionRule,
    pub seed: u64,
}

impl Default for SelectConfig {
    fn default() -> Self {
        Self {
            n_max: DEFAULT_N_MAX,
            n_scales: 5,
            tau: TauRule::Proxy,
            rule: SelectionRule::Mah,
            seed: 0,
        }
    }
}

/// Embeds each descriptor combination with its own fitted scales and ranks
/// them under the three selection statistics.
pub fn select_pool(
    graphs: &[Graph],
    labels: &[usize],
    sets: &[DescriptorSet],
    cfg: &SelectConfig,
) -> Result<SelectionReport> {
    let pool = sets
        .iter()
        .map(|s| {
            let diagrams = corpus_diagrams(graphs, &s.descriptors, cfg.n_max)?;
            let (_, scale) = fit_scale_config(
                &diagrams,
                labels,
                cfg.tau,
                cfg.n_scales,
                DEFAULT_CROSSING_PAIRS,
                cfg.seed,
            )?;
            let rows = embed_corpus(&diagrams, &scale)
                .iter()
                .map(EmbeddedVector::to_flat)
                .collect();
            Ok(DescriptorCorpus {
                name: s.name.clone(),
                rows,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    select_descriptor(&pool, labels, cfg.rule)
}
