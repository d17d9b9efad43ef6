use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{train_svm, EyeContactModel, LabelSource, SvmError, SvmHyperParams};
use crate::pipeline::{
    label_by_clustering, process_frame, ClusterError, ClusterParams, ClusterScope, FrameRecord,
    GazeSample, PipelineConfig, PipelineError, VisibilityCategory,
};

use super::buckets::{bucket_head_pose, bucket_id};
use super::folds::lopo_folds_over;
use super::metrics::{mcc, mean_sd, ConfusionCounts};
use super::EvalError;

pub const SD_CONVENTION: &str = "sample (n-1)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Breakdown {
    None,
    VisibilityCategory,
    HeadposeBucket,
}

impl Breakdown {
    pub fn as_str(self) -> &'static str {
        match self {
            Breakdown::None => "none",
            Breakdown::VisibilityCategory => "visibility-category",
            Breakdown::HeadposeBucket => "headpose-bucket",
        }
    }

    pub fn cell_ids(self) -> Vec<String> {
        match self {
            Breakdown::None => vec!["all".to_string()],
            Breakdown::VisibilityCategory => VisibilityCategory::ALL
                .iter()
                .map(|c| c.name().to_string())
                .collect(),
            Breakdown::HeadposeBucket => (0..5)
                .flat_map(|r| (0..5).map(move |c| bucket_id(r, c)))
                .collect(),
        }
    }

    fn cell_of(self, rec: &FrameRecord, sample: &GazeSample) -> usize {
        match self {
            Breakdown::None => 0,
            Breakdown::VisibilityCategory => rec.visibility_category.index(),
            Breakdown::HeadposeBucket => {
                let (r, c) = bucket_head_pose(sample.pitch_n, sample.yaw_n);
                r * 5 + c
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub label_source: LabelSource,
    pub breakdown: Breakdown,
    pub cluster: ClusterParams,
    /// `svm.seed` is replaced by `seed`.
    pub svm: SvmHyperParams,
    pub pipeline: PipelineConfig,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            label_source: LabelSource::Clustered,
            breakdown: Breakdown::None,
            cluster: ClusterParams::default(),
            svm: SvmHyperParams::default(),
            pipeline: PipelineConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub test_person: String,
    pub n_train: usize,
    pub n_test: usize,
    pub confusion: Option<ConfusionCounts>,
    pub mcc: f64,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub id: String,
    /// Training samples, summed over folds.
    pub n_train: usize,
    /// Frames of this cell that reached evaluation.
    pub n_test: usize,
    /// Frames of this cell dropped by per-frame preconditions.
    pub n_excluded: usize,
    /// MCC of the confusion counts pooled over all folds.
    pub mcc: f64,
    /// Mean and SD of per-fold MCC.
    pub mean: f64,
    pub sd: f64,
    pub folds: Vec<FoldResult>,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: String,
    pub label_source: LabelSource,
    pub breakdown: Breakdown,
    pub sd_convention: String,
    pub seed: u64,
    pub frames_total: usize,
    /// Frames that received a prediction that entered an MCC.
    pub frames_scored: usize,
    /// Every frame that did not get scored, by reason.
    pub exclusions: BTreeMap<String, usize>,
    pub mcc: f64,
    pub mean: f64,
    pub sd: f64,
    pub cells: Vec<CellReport>,
}

impl ExperimentReport {
    pub fn cell(&self, id: &str) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.id == id)
    }
}

/// A frame ready for training or testing.
struct Usable<'a> {
    index: usize,
    rec: &'a FrameRecord,
    sample: GazeSample,
    feature: &'a [f64],
    gt: bool,
}

struct Prepared<'a> {
    usable: Vec<Usable<'a>>,
    /// Precondition failures: (cell index if known, reason).
    excluded: Vec<(Option<usize>, &'static str)>,
}

fn prepare<'a>(records: &'a [FrameRecord], cfg: &ExperimentConfig) -> Prepared<'a> {
    let outcomes: Vec<Result<GazeSample, PipelineError>> = records
        .par_iter()
        .map(|r| process_frame(r, &cfg.pipeline))
        .collect();
    let mut usable = Vec::new();
    let mut excluded = Vec::new();
    for (index, (rec, outcome)) in records.iter().zip(outcomes).enumerate() {
        let known_cell = match cfg.breakdown {
            Breakdown::None => Some(0),
            Breakdown::VisibilityCategory => Some(rec.visibility_category.index()),
            Breakdown::HeadposeBucket => None,
        };
        let sample = match outcome {
            Ok(s) => s,
            Err(e) => {
                excluded.push((known_cell, e.reason()));
                continue;
            }
        };
        let Some(feature) = rec.feature.as_deref() else {
            excluded.push((known_cell.or(Some(cfg.breakdown.cell_of(rec, &sample))), "missing-feature"));
            continue;
        };
        let Some(gt) = rec.gt_eye_contact else {
            excluded.push((known_cell.or(Some(cfg.breakdown.cell_of(rec, &sample))), "missing-ground-truth"));
            continue;
        };
        usable.push(Usable {
            index,
            rec,
            sample,
            feature,
            gt,
        });
    }
    Prepared { usable, excluded }
}

/// Stable 64-bit FNV-1a, used to derive per-fold seeds.
fn fnv1a(parts: &[&str]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for p in parts {
        for b in p.bytes().chain(std::iter::once(0xff)) {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

#[derive(Debug)]
enum TrainFailure {
    Cluster(ClusterError),
    Svm(SvmError),
    NoData,
}

impl TrainFailure {
    fn reason(&self) -> String {
        match self {
            TrainFailure::Cluster(ClusterError::NoClusters) => "no-clusters".into(),
            TrainFailure::Cluster(e) => format!("clustering-failed: {e}"),
            TrainFailure::Svm(SvmError::SingleClass { .. }) => "single-class".into(),
            TrainFailure::Svm(e) => format!("training-failed: {e}"),
            TrainFailure::NoData => "no-training-frames".into(),
        }
    }
}

/// Training labels for `train`; `None` drops a frame from training.
fn training_labels(
    train: &[&Usable],
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<Vec<Option<bool>>, TrainFailure> {
    match cfg.label_source {
        LabelSource::GroundTruth => Ok(train.iter().map(|u| Some(u.gt)).collect()),
        LabelSource::Clustered => {
            let mut labels = vec![None; train.len()];
            // gaze rays that miss the device plane cannot be eye contact
            for (l, u) in labels.iter_mut().zip(train) {
                if u.sample.gaze_point.is_none() {
                    *l = Some(false);
                }
            }
            let mut with_point: Vec<usize> = (0..train.len())
                .filter(|&i| train[i].sample.gaze_point.is_some())
                .collect();
            if let Some(cap) = cfg.cluster.max_samples {
                if with_point.len() > cap {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    with_point.shuffle(&mut rng);
                    with_point.truncate(cap);
                    with_point.sort_unstable();
                    // frames outside the sample are not used for training
                    let keep: std::collections::BTreeSet<usize> = with_point.iter().copied().collect();
                    for (i, l) in labels.iter_mut().enumerate() {
                        if train[i].sample.gaze_point.is_some() && !keep.contains(&i) {
                            *l = None;
                        }
                    }
                }
            }
            let groups: Vec<Vec<usize>> = match cfg.cluster.scope {
                ClusterScope::Pooled => vec![with_point],
                ClusterScope::PerPerson => {
                    let mut by_person: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
                    for i in with_point {
                        by_person.entry(train[i].rec.person_id.as_str()).or_default().push(i);
                    }
                    by_person.into_values().collect()
                }
            };
            let mut any_cluster = false;
            let mut last_err = ClusterError::NoClusters;
            for group in groups {
                let points: Vec<_> = group
                    .iter()
                    .map(|&i| train[i].sample.gaze_point.unwrap())
                    .collect();
                match label_by_clustering(&points, &cfg.cluster) {
                    Ok(lab) => {
                        any_cluster = true;
                        for (&i, l) in group.iter().zip(lab.labels) {
                            labels[i] = l;
                        }
                    }
                    Err(e) => last_err = e,
                }
            }
            if !any_cluster {
                return Err(TrainFailure::Cluster(last_err));
            }
            Ok(labels)
        }
    }
}

fn train_on(train: &[&Usable], cfg: &ExperimentConfig, seed: u64) -> Result<(EyeContactModel, usize), TrainFailure> {
    if train.is_empty() {
        return Err(TrainFailure::NoData);
    }
    let labels = training_labels(train, cfg, seed)?;
    let (feats, ys): (Vec<&[f64]>, Vec<bool>) = train
        .iter()
        .zip(labels)
        .filter_map(|(u, l)| l.map(|l| (u.feature, l)))
        .unzip();
    let n = ys.len();
    let hp = SvmHyperParams { seed, ..cfg.svm };
    let model = train_svm(&feats, &ys, &hp, cfg.label_source).map_err(TrainFailure::Svm)?;
    Ok((model, n))
}

fn score(model: &EyeContactModel, test: &[&Usable]) -> Result<ConfusionCounts, EvalError> {
    let mut c = ConfusionCounts::default();
    for u in test {
        c.add(model.predict(u.feature)?, u.gt);
    }
    Ok(c)
}

fn fold_outcome(
    test_person: String,
    trained: Result<(EyeContactModel, usize), TrainFailure>,
    test: &[&Usable],
) -> Result<FoldResult, EvalError> {
    match trained {
        Ok((model, n_train)) => {
            let c = score(&model, test)?;
            let reason = (!c.has_both_classes()).then(|| "single-class".to_string());
            Ok(FoldResult {
                test_person,
                n_train,
                n_test: test.len(),
                mcc: mcc(&c)?,
                confusion: Some(c),
                reason,
            })
        }
        Err(f) => Ok(FoldResult {
            test_person,
            n_train: 0,
            n_test: test.len(),
            confusion: None,
            mcc: 0.0,
            reason: Some(f.reason()),
        }),
    }
}

fn summarize_cell(id: String, n_excluded: usize, folds: Vec<FoldResult>, reason: Option<String>) -> CellReport {
    let mut pooled = ConfusionCounts::default();
    for c in folds.iter().filter_map(|f| f.confusion.as_ref()) {
        pooled.merge(c);
    }
    let pooled_mcc = if pooled.total() > 0 { mcc(&pooled).unwrap() } else { 0.0 };
    let per_fold: Vec<f64> = folds.iter().map(|f| f.mcc).collect();
    let (mean, sd) = mean_sd(&per_fold);
    let reason = reason.or_else(|| {
        if folds.iter().all(|f| f.confusion.is_none()) {
            folds.first().and_then(|f| f.reason.clone())
        } else {
            None
        }
    });
    CellReport {
        id,
        n_train: folds.iter().map(|f| f.n_train).sum(),
        n_test: folds.iter().map(|f| f.n_test).sum(),
        n_excluded,
        mcc: pooled_mcc,
        mean,
        sd,
        folds,
        reason,
    }
}

fn empty_reason(n_excluded: usize) -> String {
    if n_excluded > 0 {
        "all-frames-excluded".into()
    } else {
        "no-frames".into()
    }
}

fn cells_of<'p, 'a>(prep: &'p Prepared<'a>, breakdown: Breakdown) -> Vec<Vec<&'p Usable<'a>>> {
    let mut cells: Vec<Vec<&Usable>> = vec![Vec::new(); breakdown.cell_ids().len()];
    for u in &prep.usable {
        cells[breakdown.cell_of(u.rec, &u.sample)].push(u);
    }
    cells
}

fn excluded_per_cell(prep: &Prepared, n_cells: usize) -> Vec<usize> {
    let mut counts = vec![0; n_cells];
    for (cell, _) in &prep.excluded {
        if let Some(c) = cell {
            counts[*c] += 1;
        }
    }
    counts
}

fn assemble(
    kind: &str,
    cfg: &ExperimentConfig,
    frames_total: usize,
    prep: &Prepared,
    cells: Vec<CellReport>,
) -> ExperimentReport {
    let mut exclusions: BTreeMap<String, usize> = BTreeMap::new();
    for (_, reason) in &prep.excluded {
        *exclusions.entry(reason.to_string()).or_default() += 1;
    }
    let mut pooled = ConfusionCounts::default();
    let mut fold_mccs = Vec::new();
    let mut scored = 0;
    for cell in &cells {
        for f in &cell.folds {
            fold_mccs.push(f.mcc);
            match &f.confusion {
                Some(c) => {
                    pooled.merge(c);
                    scored += f.n_test;
                }
                None if f.n_test > 0 => {
                    let reason = format!("untrained-fold: {}", f.reason.as_deref().unwrap_or("unknown"));
                    *exclusions.entry(reason).or_default() += f.n_test;
                }
                None => {}
            }
        }
    }
    let (mean, sd) = mean_sd(&fold_mccs);
    ExperimentReport {
        kind: kind.to_string(),
        label_source: cfg.label_source,
        breakdown: cfg.breakdown,
        sd_convention: SD_CONVENTION.to_string(),
        seed: cfg.seed,
        frames_total,
        frames_scored: scored,
        exclusions,
        mcc: if pooled.total() > 0 { mcc(&pooled).unwrap() } else { 0.0 },
        mean,
        sd,
        cells,
    }
}

/// Leave-one-person-out evaluation, run separately inside every breakdown
/// cell: labels (clustered or ground truth) and the classifier are built from
/// the cell's training persons and scored on the held-out person.
pub fn run_within_experiment(
    records: &[FrameRecord],
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport, EvalError> {
    let n_persons = super::folds::persons(records).len();
    if n_persons < 2 {
        return Err(EvalError::TooFewPersons(n_persons));
    }
    check_feature_dims(records)?;
    let prep = prepare(records, cfg);
    let ids = cfg.breakdown.cell_ids();
    let excluded = excluded_per_cell(&prep, ids.len());
    let cells = cells_of(&prep, cfg.breakdown);

    let reports: Vec<CellReport> = ids
        .par_iter()
        .zip(cells.par_iter())
        .zip(excluded.par_iter())
        .map(|((id, members), &n_excluded)| -> Result<CellReport, EvalError> {
            if members.is_empty() {
                return Ok(summarize_cell(id.clone(), n_excluded, vec![], Some(empty_reason(n_excluded))));
            }
            let idx: Vec<usize> = members.iter().map(|u| u.index).collect();
            let folds = match lopo_folds_over(records, &idx) {
                Ok(f) => f,
                Err(EvalError::TooFewPersons(_)) => {
                    let only = FoldResult {
                        test_person: members[0].rec.person_id.clone(),
                        n_train: 0,
                        n_test: members.len(),
                        confusion: None,
                        mcc: 0.0,
                        reason: Some("single-person".into()),
                    };
                    return Ok(summarize_cell(id.clone(), n_excluded, vec![only], None));
                }
                Err(e) => return Err(e),
            };
            let by_index: BTreeMap<usize, &Usable> = members.iter().map(|u| (u.index, *u)).collect();
            let results: Vec<FoldResult> = folds
                .par_iter()
                .map(|fold| {
                    let train: Vec<&Usable> = fold.train.iter().map(|i| by_index[i]).collect();
                    let test: Vec<&Usable> = fold.test.iter().map(|i| by_index[i]).collect();
                    let seed = cfg.seed ^ fnv1a(&[id, &fold.test_person]);
                    fold_outcome(fold.test_person.clone(), train_on(&train, cfg, seed), &test)
                })
                .collect::<Result<_, _>>()?;
            Ok(summarize_cell(id.clone(), n_excluded, results, None))
        })
        .collect::<Result<_, _>>()?;

    Ok(assemble("within", cfg, records.len(), &prep, reports))
}

/// One classifier trained on all of `train`, scored on `test` overall and per
/// breakdown cell.
pub fn run_cross_experiment(
    train: &[FrameRecord],
    test: &[FrameRecord],
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport, EvalError> {
    let d_train = check_feature_dims(train)?;
    let d_test = check_feature_dims(test)?;
    if let (Some(a), Some(b)) = (d_train, d_test) {
        if a != b {
            return Err(EvalError::FeatureDimMismatch { train: a, test: b });
        }
    }
    let trained = train_whole(train, cfg);

    let prep = prepare(test, cfg);
    let ids = cfg.breakdown.cell_ids();
    let excluded = excluded_per_cell(&prep, ids.len());
    let cells = cells_of(&prep, cfg.breakdown);
    let mut reports = Vec::with_capacity(ids.len());
    for ((id, members), n_excluded) in ids.into_iter().zip(&cells).zip(excluded) {
        if members.is_empty() {
            reports.push(summarize_cell(id, n_excluded, vec![], Some(empty_reason(n_excluded))));
            continue;
        }
        let outcome = match &trained {
            Ok((m, n)) => Ok((m.clone(), *n)),
            Err(f) => Err(match f {
                TrainFailure::Cluster(e) => TrainFailure::Cluster(e.clone()),
                TrainFailure::Svm(e) => TrainFailure::Svm(e.clone()),
                TrainFailure::NoData => TrainFailure::NoData,
            }),
        };
        let fold = fold_outcome("all".into(), outcome, members)?;
        reports.push(summarize_cell(id, n_excluded, vec![fold], None));
    }
    Ok(assemble("cross", cfg, test.len(), &prep, reports))
}

fn train_whole(records: &[FrameRecord], cfg: &ExperimentConfig) -> Result<(EyeContactModel, usize), TrainFailure> {
    let train_cfg = ExperimentConfig {
        breakdown: Breakdown::None,
        ..cfg.clone()
    };
    let prep = prepare(records, &train_cfg);
    let refs: Vec<&Usable> = prep.usable.iter().collect();
    train_on(&refs, cfg, cfg.seed ^ fnv1a(&["cross"]))
}

/// The classifier `run_cross_experiment` trains on `records`.
pub fn train_dataset_model(records: &[FrameRecord], cfg: &ExperimentConfig) -> Result<EyeContactModel, EvalError> {
    check_feature_dims(records)?;
    train_whole(records, cfg)
        .map(|(m, _)| m)
        .map_err(|f| EvalError::Untrainable(f.reason()))
}

fn check_feature_dims(records: &[FrameRecord]) -> Result<Option<usize>, EvalError> {
    let mut dim = None;
    for r in records {
        if let Some(f) = &r.feature {
            match dim {
                None => dim = Some(f.len()),
                Some(d) if d != f.len() => {
                    return Err(EvalError::InconsistentFeatureDim {
                        frame_id: r.frame_id.clone(),
                        expected: d,
                        got: f.len(),
                    })
                }
                _ => {}
            }
        }
    }
    Ok(dim)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryFailures {
    pub category: VisibilityCategory,
    pub total: usize,
    pub excluded: usize,
    /// `excluded / total`, 0 for an empty category.
    pub rate: f64,
}

/// Frames dropped by the per-frame preconditions, per visibility category.
pub fn failure_accounting(records: &[FrameRecord], pipeline: &PipelineConfig) -> Vec<CategoryFailures> {
    let failed: Vec<bool> = records
        .par_iter()
        .map(|r| process_frame(r, pipeline).is_err())
        .collect();
    VisibilityCategory::ALL
        .iter()
        .map(|&category| {
            let (total, excluded) = records
                .iter()
                .zip(&failed)
                .filter(|(r, _)| r.visibility_category == category)
                .fold((0, 0), |(t, e), (_, &f)| (t + 1, e + f as usize));
            CategoryFailures {
                category,
                total,
                excluded,
                rate: if total == 0 { 0.0 } else { excluded as f64 / total as f64 },
            }
        })
        .collect()
}
