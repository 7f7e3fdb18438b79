#![allow(dead_code)]

pub mod quadrature;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use ragbench_core::experiment::{
    default_categories, Backend, CorpusSource, ExperimentConfig, FixedClock, McqItem, Runner,
};
use ragbench_core::Letter;

pub const TIMESTAMP: &str = "2024-01-01T00:00:00.000Z";
pub const PASSAGE_WORDS: usize = 40;

/// Synthetic question `i`: a unique marker term in the case and five
/// options with globally unique texts.
pub fn synthetic_mcq(i: usize) -> McqItem {
    let cats = default_categories();
    let options = Letter::ALL
        .iter()
        .map(|&l| (l, format!("remedy-{i}-{l}")))
        .collect();
    McqItem {
        id: format!("q{i:03}"),
        category: cats[i % cats.len()].clone(),
        case: format!("A patient with zqmarker{i} presents to clinic."),
        question: format!("What is the best treatment for case {i}?"),
        options,
        gold: Letter::ALL[(i * 7 + 3) % 5],
    }
}

/// One passage per question, each exactly `PASSAGE_WORDS` words, naming the
/// question's marker and gold option text.
pub fn relevant_corpus(mcqs: &[McqItem]) -> String {
    let mut out = String::new();
    for (i, m) in mcqs.iter().enumerate() {
        let marker = format!("zqmarker{i}");
        let gold = &m.options[&m.gold];
        let mut words = vec![marker.clone(), "is".into(), "treated".into(), "with".into(), gold.clone()];
        while words.len() < PASSAGE_WORDS {
            words.push(format!("filler{}", words.len()));
        }
        out.push_str(&words.join(" "));
        out.push('\n');
    }
    out
}

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub config: ExperimentConfig,
    pub mcqs: Vec<McqItem>,
}

impl Fixture {
    pub fn out(&self) -> &Path {
        &self.config.output_dir
    }

    pub fn runner(&self) -> Runner {
        fixed_runner(self.config.clone())
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.config.output_dir.join(name)
    }
}

pub fn fixed_runner(config: ExperimentConfig) -> Runner {
    Runner::from_config(config)
        .expect("runner")
        .with_clock(Arc::new(FixedClock(TIMESTAMP.into())))
}

/// `n` synthetic questions; corpora `relevant` (gold texts present) and
/// `random` (random words, same word count), context-aware mock.
pub fn fixture(n: usize, trials: usize) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let mcqs: Vec<McqItem> = (0..n).map(synthetic_mcq).collect();
    let mcq_path = dir.path().join("mcq.jsonl");
    let body: String = mcqs
        .iter()
        .map(|m| serde_json::to_string(m).unwrap() + "\n")
        .collect();
    std::fs::write(&mcq_path, body).unwrap();
    std::fs::write(dir.path().join("relevant.txt"), relevant_corpus(&mcqs)).unwrap();

    let mut config = ExperimentConfig::new(&mcq_path, dir.path().join("out"), Backend::Mock { context_aware: true });
    config.trials = trials;
    config.seed = 42;
    config.chunk_size = PASSAGE_WORDS;
    config
        .corpora
        .insert("relevant".into(), CorpusSource::File(dir.path().join("relevant.txt")));
    config.corpora.insert(
        "random".into(),
        CorpusSource::RandomWords {
            random_words: n * PASSAGE_WORDS,
            seed: 7,
            mean_length: 9.55,
        },
    );
    Fixture { dir, config, mcqs }
}

/// Relative path helper for files written by a run.
pub fn read(path: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(path).unwrap()
}
