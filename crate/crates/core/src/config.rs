//! Flat `key = value` pipeline configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Relative paths in a
//! file resolve against the file's directory; overrides given with
//! [`PipelineConfig::apply`] resolve against the working directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::kge::KgeConfig;
use crate::nam::TrainConfig;

/// Every recognised key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("train", "training corpus, PubTator"),
    ("test", "test corpus, PubTator"),
    ("ctd", "chemical-disease export, TSV"),
    ("embeddings", "word2vec text vectors (optional)"),
    ("mesh_tree", "MeSH id to tree number TSV (needed by the hypernym filter)"),
    ("output", "directory for every stage artifact"),
    ("embeddings.dim", "vector size when no embeddings file is given"),
    ("embeddings.seed", "seed for vectors of unknown tokens"),
    ("kge.variant", "TransE, TransH or TransR"),
    ("kge.dim", "entity and relation vector size"),
    ("kge.margin", "ranking margin"),
    ("kge.learning_rate", "SGD step size"),
    ("kge.epochs", "passes over the triples"),
    ("kge.seed", "initialization and sampling seed"),
    ("kge.norm", "l1 or l2"),
    ("nam.variant", "NAM, CN-CN, KNCN-CN or CN-KNCN"),
    ("nam.hidden1", "first hidden layer width"),
    ("nam.hidden2", "second hidden layer width"),
    ("nam.learning_rate", "AdaGrad step size"),
    ("nam.batch_size", "instances per update"),
    ("nam.dropout", "drop probability of hidden units"),
    ("nam.epochs", "maximum passes over the training instances"),
    ("nam.patience", "epochs without held-out improvement before stopping"),
    ("nam.holdout", "fraction of training instances held out for stopping"),
    ("nam.seed", "initialization, shuffling and dropout seed"),
    ("nam.max_sequence_length", "token cap per instance"),
    ("nam.finetune_relations", "update relation vectors while training"),
    ("postprocess.focused_rule", "add pairs for the focused chemical"),
    ("postprocess.hypernym_filter", "drop pairs whose disease has a more specific partner"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub ctd: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub mesh_tree: Option<PathBuf>,
    pub output: PathBuf,
    pub embedding_dim: usize,
    pub embedding_seed: u64,
    pub kge: KgeConfig,
    /// `dims.word` and `dims.relation` are filled in from the embeddings
    /// and the KGE model when training starts.
    pub nam: TrainConfig,
    pub focused_rule: bool,
    pub hypernym_filter: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            train: None,
            test: None,
            ctd: None,
            embeddings: None,
            mesh_tree: None,
            output: PathBuf::from("out"),
            embedding_dim: 100,
            embedding_seed: 1,
            kge: KgeConfig::default(),
            nam: TrainConfig::default(),
            focused_rule: true,
            hypernym_filter: true,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("{key}: cannot parse {value:?}"))
}

fn resolve(base: &Path, value: &str) -> PathBuf {
    let p = PathBuf::from(value);
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

impl PipelineConfig {
    /// Reads a config file; problems across all lines are reported together.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut config = PipelineConfig::default();
        let mut problems = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) => {
                    if let Err(e) = config.set(k.trim(), v.trim(), base) {
                        problems.push(format!("line {}: {e}", n + 1));
                    }
                }
                None => problems.push(format!("line {}: expected `key = value`", n + 1)),
            }
        }
        if problems.is_empty() {
            Ok(config)
        } else {
            Err(Error::Config(problems))
        }
    }

    /// Applies `key=value` overrides on top of the current values.
    pub fn apply(&mut self, overrides: &[String]) -> Result<()> {
        let mut problems = Vec::new();
        for o in overrides {
            match o.split_once('=') {
                Some((k, v)) => {
                    if let Err(e) = self.set(k.trim(), v.trim(), Path::new("")) {
                        problems.push(e);
                    }
                }
                None => problems.push(format!("override {o:?} is not key=value")),
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<(), String> {
        let path = || Some(resolve(base, value));
        match key {
            "train" => self.train = path(),
            "test" => self.test = path(),
            "ctd" => self.ctd = path(),
            "embeddings" => self.embeddings = path(),
            "mesh_tree" => self.mesh_tree = path(),
            "output" => self.output = resolve(base, value),
            "embeddings.dim" => self.embedding_dim = parse(key, value)?,
            "embeddings.seed" => self.embedding_seed = parse(key, value)?,
            "kge.variant" => self.kge.variant = parse(key, value)?,
            "kge.dim" => self.kge.dim = parse(key, value)?,
            "kge.margin" => self.kge.margin = parse(key, value)?,
            "kge.learning_rate" => self.kge.learning_rate = parse(key, value)?,
            "kge.epochs" => self.kge.epochs = parse(key, value)?,
            "kge.seed" => self.kge.seed = parse(key, value)?,
            "kge.norm" => self.kge.norm = parse(key, value)?,
            "nam.variant" => self.nam.variant = parse(key, value)?,
            "nam.hidden1" => self.nam.dims.hidden1 = parse(key, value)?,
            "nam.hidden2" => self.nam.dims.hidden2 = parse(key, value)?,
            "nam.learning_rate" => self.nam.learning_rate = parse(key, value)?,
            "nam.batch_size" => self.nam.batch_size = parse(key, value)?,
            "nam.dropout" => self.nam.dropout = parse(key, value)?,
            "nam.epochs" => self.nam.max_epochs = parse(key, value)?,
            "nam.patience" => self.nam.patience = parse(key, value)?,
            "nam.holdout" => self.nam.holdout_fraction = parse(key, value)?,
            "nam.seed" => self.nam.seed = parse(key, value)?,
            "nam.max_sequence_length" => self.nam.max_sequence_length = parse(key, value)?,
            "nam.finetune_relations" => self.nam.finetune_relations = parse(key, value)?,
            "postprocess.focused_rule" => self.focused_rule = parse(key, value)?,
            "postprocess.hypernym_filter" => self.hypernym_filter = parse(key, value)?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Checks ranges and that every configured input file exists.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        for (key, path) in [
            ("train", &self.train),
            ("test", &self.test),
            ("ctd", &self.ctd),
            ("embeddings", &self.embeddings),
            ("mesh_tree", &self.mesh_tree),
        ] {
            if let Some(p) = path {
                if !p.is_file() {
                    problems.push(format!("{key}: no such file {}", p.display()));
                }
            }
        }
        if self.output.is_file() {
            problems.push(format!(
                "output: {} is a file, not a directory",
                self.output.display()
            ));
        }
        if self.embedding_dim == 0 {
            problems.push("embeddings.dim must be positive".to_string());
        }
        if self.kge.dim == 0 {
            problems.push("kge.dim must be positive".to_string());
        }
        if !(self.kge.margin > 0.0 && self.kge.margin.is_finite()) {
            problems.push(format!("kge.margin must be positive, got {}", self.kge.margin));
        }
        if !(self.kge.learning_rate > 0.0 && self.kge.learning_rate.is_finite()) {
            problems.push(format!(
                "kge.learning_rate must be positive, got {}",
                self.kge.learning_rate
            ));
        }
        if self.kge.epochs == 0 {
            problems.push("kge.epochs must be at least 1".to_string());
        }
        let mut nam = self.nam.clone();
        // filled in at training time
        nam.dims.word = 1;
        nam.dims.relation = 1;
        problems.extend(nam.problems());
        if self.hypernym_filter && self.mesh_tree.is_none() {
            problems.push("postprocess.hypernym_filter is on but mesh_tree is not set".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    /// Required path for a stage, as a config error when unset.
    pub fn require<'a>(&self, key: &str, path: &'a Option<PathBuf>) -> Result<&'a Path> {
        path.as_deref()
            .ok_or_else(|| Error::Config(vec![format!("{key} is not set")]))
    }

    /// The config as a file `parse` accepts, one documented key per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let show = |p: &Option<PathBuf>| {
            p.as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default()
        };
        let values = [
            show(&self.train),
            show(&self.test),
            show(&self.ctd),
            show(&self.embeddings),
            show(&self.mesh_tree),
            self.output.display().to_string(),
            self.embedding_dim.to_string(),
            self.embedding_seed.to_string(),
            self.kge.variant.to_string(),
            self.kge.dim.to_string(),
            self.kge.margin.to_string(),
            self.kge.learning_rate.to_string(),
            self.kge.epochs.to_string(),
            self.kge.seed.to_string(),
            self.kge.norm.to_string(),
            self.nam.variant.to_string(),
            self.nam.dims.hidden1.to_string(),
            self.nam.dims.hidden2.to_string(),
            self.nam.learning_rate.to_string(),
            self.nam.batch_size.to_string(),
            self.nam.dropout.to_string(),
            self.nam.max_epochs.to_string(),
            self.nam.patience.to_string(),
            self.nam.holdout_fraction.to_string(),
            self.nam.seed.to_string(),
            self.nam.max_sequence_length.to_string(),
            self.nam.finetune_relations.to_string(),
            self.focused_rule.to_string(),
            self.hypernym_filter.to_string(),
        ];
        for ((key, doc), value) in KEYS.iter().zip(values) {
            let _ = writeln!(out, "# {doc}");
            if value.is_empty() {
                let _ = writeln!(out, "# {key} =");
            } else {
                let _ = writeln!(out, "{key} = {value}");
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kge::KgeVariant;
    use crate::nam::NamVariant;

    #[test]
    fn defaults_round_trip_through_text() {
        let c = PipelineConfig::default();
        assert_eq!(PipelineConfig::parse(&c.to_text(), Path::new("")).unwrap(), c);
    }

    #[test]
    fn values_and_relative_paths() {
        let c = PipelineConfig::parse(
            "# comment\ntrain = a/train.txt\nkge.variant = TransH\nnam.variant = cn-kncn\nnam.dropout = 0.25\n",
            Path::new("/data"),
        )
        .unwrap();
        assert_eq!(c.train, Some(PathBuf::from("/data/a/train.txt")));
        assert_eq!(c.kge.variant, KgeVariant::TransH);
        assert_eq!(c.nam.variant, NamVariant::CnKncn);
        assert_eq!(c.nam.dropout, 0.25);
    }

    #[test]
    fn overrides_win() {
        let mut c = PipelineConfig::parse("kge.epochs = 10\n", Path::new("")).unwrap();
        c.apply(&["kge.epochs=3".to_string()]).unwrap();
        assert_eq!(c.kge.epochs, 3);
    }

    #[test]
    fn every_problem_is_reported() {
        let Err(Error::Config(p)) =
            PipelineConfig::parse("bogus = 1\nkge.dim = x\nno equals\n", Path::new(""))
        else {
            panic!()
        };
        assert_eq!(p.len(), 3);

        let c = PipelineConfig {
            train: Some(PathBuf::from("/nonexistent/train")),
            kge: KgeConfig {
                epochs: 0,
                ..KgeConfig::default()
            },
            nam: TrainConfig {
                dropout: 1.0,
                ..TrainConfig::default()
            },
            ..PipelineConfig::default()
        };
        let Err(Error::Config(p)) = c.validate() else {
            panic!()
        };
        // train path, kge epochs, dropout, hypernym filter without a tree
        assert_eq!(p.len(), 4, "{p:?}");
    }
}
