//! Interaction graphs and annotations to axioms, plus train/valid/test
//! splits on disk.
//!
//! Pairs are filtered by confidence, deduplicated, shuffled with a seeded
//! RNG and split 80/10/10. Only then are they symmetrized (when asked), so
//! both directions of a pair always land in the same part.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::{LinkSplit, Triple};
use crate::ontology::{is_ident_char, Ontology, KEYWORDS};

pub const INTERACTS: &str = "interacts";
pub const HAS_FUNCTION: &str = "hasFunction";

#[derive(Debug, Clone, PartialEq)]
pub struct IngestConfig {
    pub min_confidence: f64,
    pub symmetric: bool,
    pub seed: u64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            min_confidence: 700.0,
            symmetric: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub a: String,
    pub b: String,
    pub confidence: f64,
}

/// The class name of an entity's nominal.
pub fn nominal(entity: &str) -> String {
    format!("{{{entity}}}")
}

fn fields<'a>(path: &str, line: usize, text: &'a str, n: usize) -> Result<Vec<&'a str>> {
    let cols: Vec<&str> = text.split('\t').map(str::trim).collect();
    if cols.len() != n || cols.iter().any(|c| c.is_empty()) {
        return Err(Error::Malformed {
            path: path.to_string(),
            line,
            message: format!("expected {n} non-empty tab-separated fields, found {}", cols.len()),
        });
    }
    if let Some(bad) = cols[..n.min(2)].iter().find(|c| !valid_name(c)) {
        return Err(Error::Malformed {
            path: path.to_string(),
            line,
            message: format!("`{bad}` is not a valid name"),
        });
    }
    Ok(cols)
}

fn valid_name(s: &str) -> bool {
    !s.starts_with('#') && !KEYWORDS.contains(&s) && s.chars().all(is_ident_char)
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

/// `entity1 \t entity2 \t confidence` rows. `path` only labels errors.
pub fn parse_pairs(path: &str, text: &str) -> Result<Vec<Pair>> {
    data_lines(text)
        .map(|(line, l)| {
            let f = fields(path, line, l, 3)?;
            let confidence: f64 = f[2].parse().map_err(|_| Error::Malformed {
                path: path.to_string(),
                line,
                message: format!("confidence `{}` is not a number", f[2]),
            })?;
            Ok(Pair {
                a: f[0].to_string(),
                b: f[1].to_string(),
                confidence,
            })
        })
        .collect()
}

/// `entity \t class` rows.
pub fn parse_annotations(path: &str, text: &str) -> Result<Vec<(String, String)>> {
    data_lines(text)
        .map(|(line, l)| {
            let f = fields(path, line, l, 2)?;
            Ok((f[0].to_string(), f[1].to_string()))
        })
        .collect()
}

/// Part sizes for `n` items: floor(n/10) each for valid and test.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let valid = n / 10;
    let test = n / 10;
    (n - valid - test, valid, test)
}

fn triples(pairs: &[(String, String)], symmetric: bool) -> Vec<Triple> {
    let mut out = Vec::new();
    for (a, b) in pairs {
        out.push(Triple::new(nominal(a), INTERACTS, nominal(b)));
        if symmetric && a != b {
            out.push(Triple::new(nominal(b), INTERACTS, nominal(a)));
        }
    }
    out
}

/// Builds the training ontology and the link split.
///
/// The ontology holds `{P1} < interacts some {P2}` for every training
/// triple and `{P} < hasFunction some F` for every annotation.
pub fn ingest(
    pairs: &[Pair],
    annotations: &[(String, String)],
    cfg: &IngestConfig,
) -> Result<(Ontology, LinkSplit)> {
    let mut seen = HashSet::new();
    let mut kept: Vec<(String, String)> = Vec::new();
    for p in pairs.iter().filter(|p| p.confidence >= cfg.min_confidence) {
        let key = if cfg.symmetric && p.b < p.a {
            (p.b.clone(), p.a.clone())
        } else {
            (p.a.clone(), p.b.clone())
        };
        if seen.insert(key.clone()) {
            kept.push(key);
        }
    }
    kept.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let (n_train, n_valid, _) = split_sizes(kept.len());
    let split = LinkSplit {
        train: triples(&kept[..n_train], cfg.symmetric),
        valid: triples(&kept[n_train..n_train + n_valid], cfg.symmetric),
        test: triples(&kept[n_train + n_valid..], cfg.symmetric),
    };

    let mut onto = Ontology::new();
    for t in &split.train {
        let ax = onto.parse_axiom(&format!("{} < {INTERACTS} some {}", t.head, t.tail))?;
        onto.push(ax);
    }
    let mut seen = HashSet::new();
    for (entity, class) in annotations {
        if seen.insert((entity, class)) {
            let ax = onto.parse_axiom(&format!("{} < {HAS_FUNCTION} some {class}", nominal(entity)))?;
            onto.push(ax);
        }
    }
    Ok((onto, split))
}

/// Reads and ingests the two TSV files.
pub fn ingest_files(
    pairs: &Path,
    annotations: &Path,
    cfg: &IngestConfig,
) -> Result<(Ontology, LinkSplit)> {
    let p = read(pairs)?;
    let a = read(annotations)?;
    ingest(
        &parse_pairs(&pairs.display().to_string(), &p)?,
        &parse_annotations(&annotations.display().to_string(), &a)?,
        cfg,
    )
}

pub(crate) fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

const PARTS: [&str; 3] = ["train", "valid", "test"];

fn triples_tsv(ts: &[Triple]) -> String {
    ts.iter()
        .map(|t| format!("{}\t{}\t{}\n", t.head, t.relation, t.tail))
        .collect()
}

/// Writes `train.tsv`, `valid.tsv` and `test.tsv` (`head \t relation \t tail`).
pub fn write_split(dir: &Path, split: &LinkSplit) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (name, part) in PARTS.iter().zip([&split.train, &split.valid, &split.test]) {
        let path = dir.join(format!("{name}.tsv"));
        fs::write(&path, triples_tsv(part)).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

pub fn parse_triples(path: &str, text: &str) -> Result<Vec<Triple>> {
    data_lines(text)
        .map(|(line, l)| {
            let cols: Vec<&str> = l.split('\t').map(str::trim).collect();
            match cols.as_slice() {
                [h, r, t] if !h.is_empty() && !r.is_empty() && !t.is_empty() => {
                    Ok(Triple::new(*h, *r, *t))
                }
                _ => Err(Error::Malformed {
                    path: path.to_string(),
                    line,
                    message: "expected head, relation and tail separated by tabs".into(),
                }),
            }
        })
        .collect()
}

pub fn read_split(dir: &Path) -> Result<LinkSplit> {
    let mut parts = PARTS.iter().map(|name| {
        let path = dir.join(format!("{name}.tsv"));
        parse_triples(&path.display().to_string(), &read(&path)?)
    });
    Ok(LinkSplit {
        train: parts.next().unwrap()?,
        valid: parts.next().unwrap()?,
        test: parts.next().unwrap()?,
    })
}
