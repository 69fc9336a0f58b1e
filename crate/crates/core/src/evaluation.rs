//! Run / qrels ingestion and scoring of observed MAP@k against the chance
//! baseline.
//!
//! Run files have six whitespace-separated columns `qid Q0 docid rank score
//! tag`; qrels files have four, `qid 0 docid rel`. Relevance is binary: any
//! `rel >= 1` counts as relevant.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::baseline::baseline;
use crate::error::{Error, Result};
use crate::format::sig6;
use crate::metric::{ap_with_total, Normalization};
use crate::model::ModelSpec;
use crate::stochastic::{sample_wor, stream_rng};

/// Per-query ranked document lists.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RankedRun {
    queries: BTreeMap<String, Vec<String>>,
}

impl RankedRun {
    /// Builds a run from already-ordered lists, rejecting repeated documents
    /// within a query.
    pub fn from_lists<I, Q, D>(lists: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Q, Vec<D>)>,
        Q: Into<String>,
        D: Into<String>,
    {
        let mut queries = BTreeMap::new();
        for (qid, docs) in lists {
            let qid = qid.into();
            let docs: Vec<String> = docs.into_iter().map(Into::into).collect();
            let mut seen = BTreeSet::new();
            for d in &docs {
                if !seen.insert(d.as_str()) {
                    return Err(Error::Validation(format!("duplicate document `{d}` in query `{qid}`")));
                }
            }
            if queries.insert(qid.clone(), docs).is_some() {
                return Err(Error::Validation(format!("query `{qid}` listed twice")));
            }
        }
        Ok(Self { queries })
    }

    pub fn get(&self, qid: &str) -> Option<&[String]> {
        self.queries.get(qid).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.queries.iter().map(|(q, d)| (q.as_str(), d.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    /// Writes the run in six-column format with descending integer scores.
    pub fn write_trec<W: Write>(&self, mut w: W, tag: &str) -> std::io::Result<()> {
        for (qid, docs) in &self.queries {
            for (i, doc) in docs.iter().enumerate() {
                writeln!(w, "{qid} Q0 {doc} {} {} {tag}", i + 1, docs.len() - i)?;
            }
        }
        Ok(())
    }
}

/// Per-query sets of relevant document ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JudgmentSet {
    queries: BTreeMap<String, BTreeSet<String>>,
    graded_coerced: usize,
}

impl JudgmentSet {
    pub fn from_sets<I, Q, D>(sets: I) -> Self
    where
        I: IntoIterator<Item = (Q, Vec<D>)>,
        Q: Into<String>,
        D: Into<String>,
    {
        let queries = sets
            .into_iter()
            .map(|(q, docs)| (q.into(), docs.into_iter().map(Into::into).collect()))
            .collect();
        Self {
            queries,
            graded_coerced: 0,
        }
    }

    /// Relevant documents for a judged query; `None` if the query was never
    /// judged.
    pub fn relevant(&self, qid: &str) -> Option<&BTreeSet<String>> {
        self.queries.get(qid)
    }

    pub fn is_relevant(&self, qid: &str, docid: &str) -> bool {
        self.queries.get(qid).is_some_and(|s| s.contains(docid))
    }

    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.queries.keys().map(String::as_str)
    }

    /// Rows with `rel > 1` that were read as plain relevant.
    pub fn graded_coerced(&self) -> usize {
        self.graded_coerced
    }

    pub fn write_qrels<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (qid, docs) in &self.queries {
            for doc in docs {
                writeln!(w, "{qid} 0 {doc} 1")?;
            }
        }
        Ok(())
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

pub fn parse_run(path: impl AsRef<Path>) -> Result<RankedRun> {
    let path = path.as_ref();
    parse_run_reader(open(path)?, &path.display().to_string())
}

/// Parses six-column run rows. Lists are ordered by ascending rank, ties
/// broken by descending score and then by document id.
pub fn parse_run_reader<R: BufRead>(reader: R, source: &str) -> Result<RankedRun> {
    struct Row {
        rank: i64,
        score: f64,
        docid: String,
    }
    let parse_err = |line: usize, message: String| Error::Parse {
        path: source.to_owned(),
        line,
        message,
    };

    let mut rows: BTreeMap<String, Vec<Row>> = BTreeMap::new();
    let mut seen: BTreeMap<(String, String), usize> = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(source, e))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let [qid, _, docid, rank, score, _] = fields[..] else {
            return Err(parse_err(
                lineno,
                format!(
                    "expected 6 columns `qid Q0 docid rank score tag`, found {}",
                    fields.len()
                ),
            ));
        };
        let rank: i64 = rank
            .parse()
            .map_err(|_| parse_err(lineno, format!("rank `{rank}` is not an integer")))?;
        let score: f64 = score
            .parse()
            .ok()
            .filter(|s: &f64| !s.is_nan())
            .ok_or_else(|| parse_err(lineno, format!("score `{score}` is not a number")))?;
        if let Some(first) = seen.insert((qid.to_owned(), docid.to_owned()), lineno) {
            return Err(Error::Validation(format!(
                "{source}:{lineno}: document `{docid}` repeated for query `{qid}` (first on line {first})"
            )));
        }
        rows.entry(qid.to_owned()).or_default().push(Row {
            rank,
            score,
            docid: docid.to_owned(),
        });
    }

    let queries = rows
        .into_iter()
        .map(|(qid, mut list)| {
            list.sort_by(|a, b| {
                a.rank
                    .cmp(&b.rank)
                    .then_with(|| b.score.total_cmp(&a.score))
                    .then_with(|| a.docid.cmp(&b.docid))
            });
            (qid, list.into_iter().map(|r| r.docid).collect())
        })
        .collect();
    Ok(RankedRun { queries })
}

pub fn parse_qrels(path: impl AsRef<Path>) -> Result<JudgmentSet> {
    let path = path.as_ref();
    parse_qrels_reader(open(path)?, &path.display().to_string())
}

/// Parses four-column qrels rows. Relevance above 1 is read as 1 with a
/// warning; negative values are rejected.
pub fn parse_qrels_reader<R: BufRead>(reader: R, source: &str) -> Result<JudgmentSet> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: source.to_owned(),
        line,
        message,
    };
    let mut set = JudgmentSet::default();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(source, e))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let [qid, _, docid, rel] = fields[..] else {
            return Err(parse_err(
                lineno,
                format!("expected 4 columns `qid 0 docid rel`, found {}", fields.len()),
            ));
        };
        let rel: i64 = rel
            .parse()
            .map_err(|_| parse_err(lineno, format!("relevance `{rel}` is not an integer")))?;
        if rel < 0 {
            return Err(parse_err(lineno, format!("negative relevance {rel}")));
        }
        if rel > 1 {
            warn!("{source}:{lineno}: graded relevance {rel} for {qid}/{docid} treated as relevant");
            set.graded_coerced += 1;
        }
        let docs = set.queries.entry(qid.to_owned()).or_default();
        if rel >= 1 {
            docs.insert(docid.to_owned());
        }
    }
    Ok(set)
}

/// Which chance model each user is compared against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaselineChoice {
    /// WOR with the given pool size and each user's own relevant count.
    AutoWor { items: usize },
    /// WR with `p` pooled from top-k prevalence across users.
    AutoWr,
    /// The same model for every user.
    Explicit(ModelSpec),
}

/// Observed MAP@k next to its chance baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub per_user_ap: BTreeMap<String, f64>,
    pub map_at_k: f64,
    pub baseline_mean: f64,
    pub baseline_variance_of_map: f64,
    /// `None` when the baseline variance is zero.
    pub z_score: Option<f64>,
    pub model_used: String,
    /// Pooled relevance probability, for the pooled WR baseline only.
    pub p_hat: Option<f64>,
    pub k: usize,
    pub norm: Normalization,
    pub user_count: usize,
}

impl EvaluationReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{:<24} {:>12}\n", "query", "AP@k"));
        for (qid, ap) in &self.per_user_ap {
            out.push_str(&format!("{qid:<24} {:>12}\n", sig6(*ap)));
        }
        out.push('\n');
        let mut line = |key: &str, value: String| out.push_str(&format!("{key:<24} {value}\n"));
        line("users", self.user_count.to_string());
        line("k", self.k.to_string());
        line("normalization", self.norm.to_string());
        line("baseline model", self.model_used.clone());
        if let Some(p) = self.p_hat {
            line("pooled p", sig6(p));
        }
        line("MAP@k", sig6(self.map_at_k));
        line("baseline mean", sig6(self.baseline_mean));
        line("baseline var(MAP@k)", sig6(self.baseline_variance_of_map));
        line(
            "z-score",
            self.z_score
                .map_or_else(|| "undefined (zero variance)".to_owned(), sig6),
        );
        out
    }
}

pub fn evaluate(
    run: &RankedRun,
    judgments: &JudgmentSet,
    k: usize,
    norm: Normalization,
    choice: BaselineChoice,
) -> Result<EvaluationReport> {
    if k == 0 {
        return Err(Error::CutoffOutOfRange { k, len: 0 });
    }
    if run.is_empty() {
        return Err(Error::Validation("run contains no queries".into()));
    }
    let expected_norm = match choice {
        BaselineChoice::AutoWor { .. } => Normalization::ByMinMK,
        BaselineChoice::AutoWr => Normalization::ByK,
        BaselineChoice::Explicit(model) => model.natural_normalization(),
    };
    if norm != expected_norm {
        let model = match choice {
            BaselineChoice::AutoWor { .. } => "WOR",
            BaselineChoice::AutoWr => "WR",
            BaselineChoice::Explicit(m) => m.kind(),
        };
        return Err(Error::NormalizationMismatch {
            model,
            norm: norm.as_str(),
        });
    }

    for qid in judgments.queries() {
        if run.get(qid).is_none() {
            warn!("judged query `{qid}` has no ranking in the run; ignored");
        }
    }

    struct User {
        ap: f64,
        relevant: usize,
        top_k_hits: usize,
    }
    let mut users: BTreeMap<&str, User> = BTreeMap::new();
    for (qid, docs) in run.iter() {
        if docs.len() < k {
            return Err(Error::Validation(format!(
                "query `{qid}` ranks {} documents, fewer than k={k}",
                docs.len()
            )));
        }
        let relevant = judgments
            .relevant(qid)
            .ok_or_else(|| Error::Validation(format!("query `{qid}` has no relevance judgments")))?;
        let indicators: Vec<bool> = docs.iter().map(|d| relevant.contains(d)).collect();
        let m = indicators.iter().filter(|&&r| r).count();
        users.insert(
            qid,
            User {
                ap: ap_with_total(&indicators, k, norm, m),
                relevant: m,
                top_k_hits: indicators[..k].iter().filter(|&&r| r).count(),
            },
        );
    }

    let count = users.len() as f64;
    let (models, model_used, p_hat): (Vec<ModelSpec>, String, Option<f64>) = match choice {
        BaselineChoice::AutoWor { items } => {
            let models = users
                .iter()
                .map(|(qid, u)| {
                    if u.relevant > items {
                        return Err(Error::Validation(format!(
                            "query `{qid}` has {} relevant ranked documents, more than N={items}",
                            u.relevant
                        )));
                    }
                    if k > items {
                        return Err(Error::CutoffOutOfRange { k, len: items });
                    }
                    ModelSpec::wor(items, u.relevant)
                })
                .collect::<Result<Vec<_>>>()?;
            let ms: BTreeSet<usize> = users.values().map(|u| u.relevant).collect();
            let label = match (ms.len(), ms.first()) {
                (1, Some(m)) => format!("WOR(N={items}, m={m})"),
                _ => format!("WOR(N={items}, m per query)"),
            };
            (models, label, None)
        }
        BaselineChoice::AutoWr => {
            let hits: usize = users.values().map(|u| u.top_k_hits).sum();
            let p = hits as f64 / (k as f64 * count);
            let model = ModelSpec::wr(p)?;
            (vec![model; users.len()], format!("WR(p={}, pooled)", sig6(p)), Some(p))
        }
        BaselineChoice::Explicit(model) => {
            model.validate_cutoff(k)?;
            (vec![model; users.len()], model.to_string(), None)
        }
    };

    // Users sharing a model share its moments; weighting by count / U keeps
    // the homogeneous case exactly equal to the single-model value.
    let mut groups: Vec<(ModelSpec, usize)> = Vec::new();
    for model in &models {
        match groups.iter_mut().find(|(m, _)| m == model) {
            Some((_, n)) => *n += 1,
            None => groups.push((*model, 1)),
        }
    }
    let mut baseline_mean = 0.0;
    let mut baseline_variance_of_map = 0.0;
    for (model, n) in &groups {
        let b = baseline(model, k)?;
        let share = *n as f64 / count;
        baseline_mean += share * b.mean;
        baseline_variance_of_map += share * b.variance / count;
    }
    let per_user_ap: BTreeMap<String, f64> = users.iter().map(|(q, u)| ((*q).to_owned(), u.ap)).collect();
    let map_at_k = per_user_ap.values().sum::<f64>() / count;
    let z_score =
        (baseline_variance_of_map > 0.0).then(|| (map_at_k - baseline_mean) / baseline_variance_of_map.sqrt());

    Ok(EvaluationReport {
        per_user_ap,
        map_at_k,
        baseline_mean,
        baseline_variance_of_map,
        z_score,
        model_used,
        p_hat,
        k,
        norm,
        user_count: users.len(),
    })
}

/// Users whose rankings are themselves WOR draws: every query ranks the same
/// `items` documents and `relevant` of them, at random positions, are judged
/// relevant.
pub fn synthetic_wor_dataset(
    items: usize,
    relevant: usize,
    users: usize,
    seed: u64,
) -> Result<(RankedRun, JudgmentSet)> {
    let mut rng = stream_rng(seed, 0);
    let docs: Vec<String> = (0..items).map(|j| format!("d{j}")).collect();
    let mut lists = Vec::with_capacity(users);
    let mut sets = Vec::with_capacity(users);
    for u in 0..users {
        let qid = format!("u{u:06}");
        let rel = sample_wor(items, relevant, &mut rng)?;
        let hits: Vec<String> = rel
            .as_slice()
            .iter()
            .zip(&docs)
            .filter(|(r, _)| **r)
            .map(|(_, d)| d.clone())
            .collect();
        lists.push((qid.clone(), docs.clone()));
        sets.push((qid, hits));
    }
    Ok((RankedRun::from_lists(lists)?, JudgmentSet::from_sets(sets)))
}
