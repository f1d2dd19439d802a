//! File-backed pipeline stages.
//!
//! Every stage reads its inputs from the configured files or from earlier
//! stages' artifacts under the output directory, and writes its own
//! artifacts there. Running [`run_all`] is the same as running each stage
//! in [`Stage::ALL`] order.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::PipelineConfig;
use crate::corpus::{parse_pubtator, write_pubtator, Document};
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::eval::{gold_pairs, level_report, prf, write_report, DocPair};
use crate::heatmap::{export_heatmap, HeatmapRecord};
use crate::instances::{build_instances, read_instances, write_instances, Instance, Label, Level};
use crate::kge::{extract_triples, read_ctd, read_triples, train_kge, write_triples, KgeModel, Relation};
use crate::nam::{self, encode, read_predictions, write_predictions, NamModel, Prediction};
use crate::postprocess::{
    focused_chemical, hypernym_filter, merge, read_results, write_results, DocResult, MeshTree,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Parse,
    BuildInstances,
    ExtractTriples,
    TrainKge,
    TrainNam,
    Predict,
    Postprocess,
    Evaluate,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Parse,
        Stage::BuildInstances,
        Stage::ExtractTriples,
        Stage::TrainKge,
        Stage::TrainNam,
        Stage::Predict,
        Stage::Postprocess,
        Stage::Evaluate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Parse => "parse",
            Stage::BuildInstances => "build-instances",
            Stage::ExtractTriples => "extract-triples",
            Stage::TrainKge => "train-kge",
            Stage::TrainNam => "train-nam",
            Stage::Predict => "predict",
            Stage::Postprocess => "postprocess",
            Stage::Evaluate => "evaluate",
        }
    }
}

/// Artifact paths under the output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    fn at(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn train_docs(&self) -> PathBuf {
        self.at("corpus/train.pubtator")
    }
    pub fn test_docs(&self) -> PathBuf {
        self.at("corpus/test.pubtator")
    }
    pub fn train_instances(&self) -> PathBuf {
        self.at("instances/train.tsv")
    }
    pub fn test_instances(&self) -> PathBuf {
        self.at("instances/test.tsv")
    }
    pub fn triples(&self) -> PathBuf {
        self.at("kge/triples.tsv")
    }
    pub fn kge_model(&self) -> PathBuf {
        self.at("kge/model.txt")
    }
    pub fn kge_losses(&self) -> PathBuf {
        self.at("kge/losses.tsv")
    }
    /// Every vector the classifier saw, including initialized unknowns.
    pub fn embeddings(&self) -> PathBuf {
        self.at("nam/embeddings.txt")
    }
    pub fn nam_model(&self) -> PathBuf {
        self.at("nam/model.txt")
    }
    pub fn nam_epochs(&self) -> PathBuf {
        self.at("nam/epochs.tsv")
    }
    pub fn predictions(&self) -> PathBuf {
        self.at("predict/predictions.tsv")
    }
    /// Model-only document pairs, before any rule.
    pub fn merged(&self) -> PathBuf {
        self.at("postprocess/merged.tsv")
    }
    pub fn results(&self) -> PathBuf {
        self.at("postprocess/results.tsv")
    }
    pub fn report(&self) -> PathBuf {
        self.at("eval/report.tsv")
    }
    pub fn heatmaps(&self) -> PathBuf {
        self.at("heatmap")
    }
}

fn read_input(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Reads an upstream artifact; a missing file names its producing stage.
fn read_artifact(path: &Path, producer: Stage) -> Result<String> {
    if !path.is_file() {
        return Err(Error::MissingArtifact {
            path: path.display().to_string(),
            stage: producer.name(),
        });
    }
    read_input(path)
}

pub fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    }
    fs::write(path, content).map_err(|e| Error::io(path.display().to_string(), e))
}

fn load_docs(path: &Path) -> Result<Vec<Document>> {
    parse_pubtator(&read_artifact(path, Stage::Parse)?)?
        .into_iter()
        .map(Document::annotate)
        .collect()
}

fn load_instances(path: &Path) -> Result<Vec<Instance>> {
    read_instances(&read_artifact(path, Stage::BuildInstances)?)
}

fn initial_table(config: &PipelineConfig) -> Result<EmbeddingTable> {
    match &config.embeddings {
        Some(p) => EmbeddingTable::load_word2vec_text(&read_input(p)?, config.embedding_seed),
        None => Ok(EmbeddingTable::random(config.embedding_dim, config.embedding_seed)),
    }
}

pub fn run_stage(stage: Stage, config: &PipelineConfig) -> Result<()> {
    let out = Layout::new(&config.output);
    log::info!("stage {}", stage.name());
    match stage {
        Stage::Parse => {
            for (key, path, dest) in [
                ("train", &config.train, out.train_docs()),
                ("test", &config.test, out.test_docs()),
            ] {
                let docs = parse_pubtator(&read_input(config.require(key, path)?)?)?;
                log::info!("{key}: {} documents", docs.len());
                write_file(&dest, &write_pubtator(&docs))?;
            }
        }
        Stage::BuildInstances => {
            for (docs, dest) in [
                (out.train_docs(), out.train_instances()),
                (out.test_docs(), out.test_instances()),
            ] {
                let instances: Vec<Instance> =
                    load_docs(&docs)?.iter().flat_map(build_instances).collect();
                log::info!("{}: {} instances", dest.display(), instances.len());
                write_file(&dest, &write_instances(&instances))?;
            }
        }
        Stage::ExtractTriples => {
            let ctd = read_ctd(&read_input(config.require("ctd", &config.ctd)?)?)?;
            let mut instances = load_instances(&out.train_instances())?;
            instances.extend(load_instances(&out.test_instances())?);
            let store = extract_triples(instances.iter().map(Instance::pair), &ctd);
            log::info!("{} triples over {} entities", store.len(), store.entities().len());
            write_file(&out.triples(), &write_triples(&store))?;
        }
        Stage::TrainKge => {
            let store = read_triples(&read_artifact(&out.triples(), Stage::ExtractTriples)?)?;
            let init = match &config.embeddings {
                Some(_) => Some(initial_table(config)?),
                None => None,
            };
            let run = train_kge(&store, init.as_ref(), &config.kge)?;
            let losses: String = run
                .epoch_losses
                .iter()
                .enumerate()
                .map(|(e, l)| format!("{}\t{l}\n", e + 1))
                .collect();
            write_file(&out.kge_model(), &run.model.to_text())?;
            write_file(&out.kge_losses(), &losses)?;
        }
        Stage::TrainNam => {
            let train_set = load_instances(&out.train_instances())?;
            let test_set = load_instances(&out.test_instances())?;
            let store = read_triples(&read_artifact(&out.triples(), Stage::ExtractTriples)?)?;
            let kge = KgeModel::from_text(&read_artifact(&out.kge_model(), Stage::TrainKge)?)?;
            let mut table = initial_table(config)?;
            let max_len = config.nam.max_sequence_length;
            let examples = encode(&train_set, &mut table, &store, max_len);
            // fix vectors for test-only tokens now so prediction is a pure read
            encode(&test_set, &mut table, &store, max_len);
            let relations: Vec<Vec<f64>> =
                Relation::ALL.iter().map(|&r| kge.relation(r).to_vec()).collect();
            let mut nam_config = config.nam.clone();
            nam_config.dims.word = table.dim();
            nam_config.dims.relation = kge.dim;
            let (model, report) = nam::train(&examples, &table, &relations, &nam_config)?;
            let mut epochs = String::from("epoch\tloss\tholdout_f\n");
            for e in &report.epochs {
                let f = e.holdout_f.map(|f| f.to_string()).unwrap_or_default();
                epochs.push_str(&format!("{}\t{}\t{f}\n", e.epoch, e.mean_loss));
            }
            epochs.push_str(&format!("# best epoch {}\n", report.best_epoch));
            write_file(&out.embeddings(), &table.to_word2vec_text())?;
            write_file(&out.nam_model(), &model.to_text())?;
            write_file(&out.nam_epochs(), &epochs)?;
        }
        Stage::Predict => {
            let predictions = predict_test(config, &out)?;
            write_file(&out.predictions(), &write_predictions(&predictions))?;
        }
        Stage::Postprocess => {
            let predictions =
                read_predictions(&read_artifact(&out.predictions(), Stage::Predict)?)?;
            let docs = load_docs(&out.test_docs())?;
            let tree = match (&config.mesh_tree, config.hypernym_filter) {
                (Some(p), true) => Some(MeshTree::from_tsv(&read_input(p)?)?),
                (None, true) => {
                    return Err(Error::Config(vec![
                        "postprocess.hypernym_filter is on but mesh_tree is not set".into(),
                    ]))
                }
                _ => None,
            };
            let merged = merge(&predictions);
            let mut model_only = Vec::new();
            let mut results = Vec::new();
            for doc in &docs {
                let r = merged
                    .get(&doc.pmid)
                    .cloned()
                    .unwrap_or_else(|| DocResult::empty(&doc.pmid));
                let mut post = r.clone();
                if config.focused_rule {
                    post = focused_chemical(doc, &post);
                }
                if let Some(tree) = &tree {
                    post = hypernym_filter(&post, tree);
                }
                model_only.push(r);
                results.push(post);
            }
            write_file(&out.merged(), &write_results(&model_only))?;
            write_file(&out.results(), &write_results(&results))?;
        }
        Stage::Evaluate => {
            let docs = load_docs(&out.test_docs())?;
            let predictions =
                read_predictions(&read_artifact(&out.predictions(), Stage::Predict)?)?;
            let results = read_results(&read_artifact(&out.results(), Stage::Postprocess)?)?;
            let report = evaluate(&docs, &predictions, Some(&results))?;
            log::info!("\n{report}");
            write_file(&out.report(), &report)?;
        }
    }
    Ok(())
}

/// Runs every stage in order.
pub fn run_all(config: &PipelineConfig) -> Result<()> {
    for stage in Stage::ALL {
        run_stage(stage, config)?;
    }
    Ok(())
}

/// Scores instance predictions per level and merged, plus post-processed
/// document results when given. Returns the report text.
pub fn evaluate(
    docs: &[Document],
    predictions: &[Prediction],
    results: Option<&[DocResult]>,
) -> Result<String> {
    let gold = gold_pairs(docs);
    let positives = |level: Level| -> BTreeSet<DocPair> {
        predictions
            .iter()
            .filter(|p| p.level == level && p.label == Label::Positive)
            .map(|p| (p.pmid.clone(), p.chemical.clone(), p.disease.clone()))
            .collect()
    };
    let levels = level_report(&positives(Level::Intra), &positives(Level::Inter), &gold)?;
    let mut rows = vec![
        ("intra", levels.intra),
        ("inter", levels.inter),
        ("merged", levels.merged),
    ];
    if let Some(results) = results {
        let pairs: BTreeSet<DocPair> = results
            .iter()
            .flat_map(|r| {
                r.pairs
                    .keys()
                    .map(|(c, d)| (r.pmid.clone(), c.clone(), d.clone()))
            })
            .collect();
        rows.push(("postprocessed", prf(&pairs, &gold)));
    }
    Ok(write_report(&rows))
}

fn predict_test(config: &PipelineConfig, out: &Layout) -> Result<Vec<Prediction>> {
    let test_set = load_instances(&out.test_instances())?;
    let store = read_triples(&read_artifact(&out.triples(), Stage::ExtractTriples)?)?;
    let model = NamModel::from_text(&read_artifact(&out.nam_model(), Stage::TrainNam)?)?;
    let mut table = EmbeddingTable::load_word2vec_text(
        &read_artifact(&out.embeddings(), Stage::TrainNam)?,
        config.embedding_seed,
    )?;
    let examples = encode(
        &test_set,
        &mut table,
        &store,
        config.nam.max_sequence_length,
    );
    examples.iter().map(|ex| model.predict(ex, &table)).collect()
}

/// Which test instances to export as heat maps.
#[derive(Debug, Clone, Default)]
pub struct HeatmapSelection {
    pub pmid: Option<String>,
    pub chemical: Option<String>,
    pub disease: Option<String>,
    pub level: Option<Level>,
}

impl HeatmapSelection {
    fn matches(&self, p: &Prediction) -> bool {
        self.pmid.as_ref().map_or(true, |x| *x == p.pmid)
            && self.chemical.as_ref().map_or(true, |x| *x == p.chemical)
            && self.disease.as_ref().map_or(true, |x| *x == p.disease)
            && self.level.map_or(true, |x| x == p.level)
    }
}

/// Re-runs the trained classifier on the selected test instances and writes
/// one TSV (and optionally one SVG) per instance under `heatmap/`.
pub fn heatmaps(
    config: &PipelineConfig,
    selection: &HeatmapSelection,
    svg: bool,
) -> Result<Vec<(PathBuf, HeatmapRecord)>> {
    let out = Layout::new(&config.output);
    let mut written = Vec::new();
    for p in predict_test(config, &out)? {
        if !selection.matches(&p) {
            continue;
        }
        let record = export_heatmap(&p);
        let stem = format!("{}_{}_{}_{}", p.pmid, p.chemical, p.disease, p.level);
        let path = out.heatmaps().join(format!("{stem}.tsv"));
        write_file(&path, &record.to_tsv())?;
        if svg {
            write_file(&out.heatmaps().join(format!("{stem}.svg")), &record.to_svg())?;
        }
        written.push((path, record));
    }
    if written.is_empty() {
        return Err(Error::Invalid(
            "no test instance matches the heat map selection".into(),
        ));
    }
    Ok(written)
}
