//! Seeded synthetic interaction data with a known signal.
//!
//! Entities are spread over `groups` functional groups. The function
//! taxonomy is a two-level tree: `FRoot`, then one `FB<j>` per pair of
//! groups, then one leaf `F<g>` per group. Every entity is annotated with
//! its group's leaf and, with probability `extra_annotation`, one random
//! other leaf. Two entities interact with probability `p_within` when they
//! share a group and `p_across` otherwise, so shared annotations predict
//! interactions.
//!
//! A fraction `low_confidence` of extra rows carry confidences below the
//! default 700 cut and should be dropped by ingestion.

use std::fmt::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub entities: usize,
    pub groups: usize,
    pub p_within: f64,
    pub p_across: f64,
    pub extra_annotation: f64,
    pub low_confidence: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            entities: 200,
            groups: 8,
            p_within: 0.1,
            p_across: 0.001,
            extra_annotation: 0.3,
            low_confidence: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    /// `entity1 \t entity2 \t confidence` rows.
    pub pairs_tsv: String,
    /// `entity \t class` rows.
    pub annotations_tsv: String,
    /// The function taxonomy as subclass axioms.
    pub taxonomy: String,
}

pub fn entity_name(i: usize) -> String {
    format!("P{i:03}")
}

pub fn generate(cfg: &SynthConfig) -> SynthData {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let groups = cfg.groups.max(1);
    let group: Vec<usize> = (0..cfg.entities).map(|i| i % groups).collect();

    let mut taxonomy = String::new();
    for b in 0..groups.div_ceil(2) {
        writeln!(taxonomy, "FB{b} < FRoot").unwrap();
    }
    for g in 0..groups {
        writeln!(taxonomy, "F{g} < FB{}", g / 2).unwrap();
    }

    let mut annotations_tsv = String::new();
    for (i, &g) in group.iter().enumerate() {
        writeln!(annotations_tsv, "{}\tF{g}", entity_name(i)).unwrap();
        if groups > 1 && rng.gen_bool(cfg.extra_annotation) {
            let other = (g + rng.gen_range(1..groups)) % groups;
            writeln!(annotations_tsv, "{}\tF{other}", entity_name(i)).unwrap();
        }
    }

    let mut pairs_tsv = String::new();
    for i in 0..cfg.entities {
        for j in i + 1..cfg.entities {
            let p = if group[i] == group[j] { cfg.p_within } else { cfg.p_across };
            if rng.gen_bool(p) {
                let conf = rng.gen_range(700..=999);
                writeln!(pairs_tsv, "{}\t{}\t{conf}", entity_name(i), entity_name(j)).unwrap();
            } else if rng.gen_bool(cfg.low_confidence * p) {
                let conf = rng.gen_range(150..700);
                writeln!(pairs_tsv, "{}\t{}\t{conf}", entity_name(i), entity_name(j)).unwrap();
            }
        }
    }

    SynthData {
        pairs_tsv,
        annotations_tsv,
        taxonomy,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_annotations, parse_pairs};
    use crate::ontology::Ontology;

    #[test]
    fn seeded_and_parseable() {
        let cfg = SynthConfig { seed: 4, ..Default::default() };
        let d = generate(&cfg);
        assert_eq!(d, generate(&cfg));
        let pairs = parse_pairs("pairs", &d.pairs_tsv).unwrap();
        let ann = parse_annotations("ann", &d.annotations_tsv).unwrap();
        assert!(pairs.len() > 100);
        assert!(ann.len() >= 200);
        assert!(pairs.iter().any(|p| p.confidence < 700.0));
        Ontology::parse(&d.taxonomy).unwrap();
    }

    #[test]
    fn interactions_concentrate_within_groups() {
        let d = generate(&SynthConfig::default());
        let pairs = parse_pairs("pairs", &d.pairs_tsv).unwrap();
        let group = |s: &str| s[1..].parse::<usize>().unwrap() % 8;
        let kept: Vec<_> = pairs.iter().filter(|p| p.confidence >= 700.0).collect();
        let within = kept.iter().filter(|p| group(&p.a) == group(&p.b)).count();
        assert!(within * 2 > kept.len());
    }
}
