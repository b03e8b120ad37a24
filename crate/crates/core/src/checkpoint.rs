//! JSON checkpoints and the 2D plot table.
//!
//! Field order is fixed by the serialized structs, and floats are written
//! in shortest round-trip form, so save → load → save reproduces the same
//! bytes.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};
use crate::ontology::{ClassId, RelationId, BOT_NAME};
use crate::trainer::{LossTrace, TrainConfig};

pub const CHECKPOINT_VERSION: u32 = 1;

/// How many trailing per-epoch losses a checkpoint keeps.
pub const TRACE_TAIL: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub margin: f64,
    pub seed: u64,
    pub epochs_completed: usize,
    pub loss_trace_tail: Vec<f64>,
    pub embedding: EmbeddingSet,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassRow {
    name: String,
    center: Vec<f64>,
    radius: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RelationRow {
    name: String,
    vector: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Wire {
    version: u32,
    dim: usize,
    margin: f64,
    seed: u64,
    epochs_completed: usize,
    loss_trace_tail: Vec<f64>,
    classes: Vec<ClassRow>,
    relations: Vec<RelationRow>,
}

impl Checkpoint {
    pub fn new(embedding: EmbeddingSet, cfg: &TrainConfig, trace: &LossTrace) -> Self {
        let tail = trace.minibatch.len().saturating_sub(TRACE_TAIL);
        Checkpoint {
            margin: cfg.margin,
            seed: cfg.seed,
            epochs_completed: trace.minibatch.len(),
            loss_trace_tail: trace.minibatch[tail..].to_vec(),
            embedding,
        }
    }

    pub fn dim(&self) -> usize {
        self.embedding.dim()
    }

    pub fn to_json(&self) -> String {
        let e = &self.embedding;
        let wire = Wire {
            version: CHECKPOINT_VERSION,
            dim: e.dim(),
            margin: self.margin,
            seed: self.seed,
            epochs_completed: self.epochs_completed,
            loss_trace_tail: self.loss_trace_tail.clone(),
            classes: (0..e.num_classes())
                .map(|i| {
                    let c = ClassId(i as u32);
                    ClassRow {
                        name: e.class_name(c).to_string(),
                        center: e.center(c).to_vec(),
                        radius: e.radius(c),
                    }
                })
                .collect(),
            relations: (0..e.num_relations())
                .map(|i| {
                    let r = RelationId(i as u32);
                    RelationRow {
                        name: e.relation_name(r).to_string(),
                        vector: e.relation(r).to_vec(),
                    }
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&wire).expect("checkpoint fields serialize");
        s.push('\n');
        s
    }

    /// Parses a checkpoint, optionally insisting on a dimension.
    pub fn from_json(text: &str, expected_dim: Option<usize>) -> Result<Checkpoint> {
        let corrupt = |e: serde_json::Error| Error::CorruptCheckpoint(e.to_string());
        let value: serde_json::Value = serde_json::from_str(text).map_err(corrupt)?;
        let version = value
            .get("version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::CorruptCheckpoint("missing version".into()))?;
        if version != u64::from(CHECKPOINT_VERSION) {
            return Err(Error::Version {
                expected: CHECKPOINT_VERSION,
                found: version.try_into().unwrap_or(u32::MAX),
            });
        }
        let wire: Wire = serde_json::from_value(value).map_err(corrupt)?;
        if let Some(want) = expected_dim {
            if want != wire.dim {
                return Err(Error::Dimension {
                    expected: want,
                    found: wire.dim,
                });
            }
        }
        let mut e = EmbeddingSet::new(wire.dim);
        for row in &wire.classes {
            if !(row.radius >= 0.0) {
                return Err(Error::CorruptCheckpoint(format!(
                    "class `{}` has radius {}",
                    row.name, row.radius
                )));
            }
            e.push_class(&row.name, &row.center, row.radius)
                .map_err(duplicate_is_corrupt)?;
        }
        for row in &wire.relations {
            e.push_relation(&row.name, &row.vector)
                .map_err(duplicate_is_corrupt)?;
        }
        Ok(Checkpoint {
            margin: wire.margin,
            seed: wire.seed,
            epochs_completed: wire.epochs_completed,
            loss_trace_tail: wire.loss_trace_tail,
            embedding: e,
        })
    }

    /// Writes to a sibling temp file, then renames over `path`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
        let file_name = path
            .file_name()
            .ok_or_else(|| Error::Config(format!("{} is not a file path", path.display())))?;
        let tmp = dir
            .map(|d| d.to_path_buf())
            .unwrap_or_default()
            .join(format!(".{}.tmp{}", file_name.to_string_lossy(), std::process::id()));
        let write = || -> std::io::Result<()> {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(self.to_json().as_bytes())?;
            f.sync_all()?;
            fs::rename(&tmp, path)
        };
        write().map_err(|e| {
            let _ = fs::remove_file(&tmp);
            Error::io(path, e)
        })
    }

    pub fn load(path: &Path, expected_dim: Option<usize>) -> Result<Checkpoint> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Checkpoint::from_json(&text, expected_dim)
    }
}

fn duplicate_is_corrupt(e: Error) -> Error {
    match e {
        Error::Config(m) => Error::CorruptCheckpoint(m),
        e => e,
    }
}

/// Tab-separated `class x y r` rows for a 2D embedding, `Bot` omitted.
///
/// `Top`'s radius is unbounded and is written as `inf`.
pub fn export_2d(e: &EmbeddingSet) -> Result<String> {
    if e.dim() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            found: e.dim(),
        });
    }
    let mut out = String::from("class\tx\ty\tr\n");
    for i in 0..e.num_classes() {
        let c = ClassId(i as u32);
        let name = e.class_name(c);
        if name == BOT_NAME {
            continue;
        }
        let p = e.center(c);
        let r = if e.is_top(c) { f64::INFINITY } else { e.radius(c) };
        out.push_str(&format!("{name}\t{}\t{}\t{r}\n", p[0], p[1]));
    }
    Ok(out)
}
