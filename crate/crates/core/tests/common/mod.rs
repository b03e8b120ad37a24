//! Oracles and generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;

use elball::checkpoint::Checkpoint;
use elball::eval::{ranking_report, EmbeddingScorer, LinkScorer, LinkSplit, RankingReport, Triple};
use elball::ingest::{self, IngestConfig};
use elball::losses::{batch_gradient, batch_loss, LossBatch};
use elball::normalizer::{normalize_ontology, NormalAxiom, NormalizedTheory};
use elball::ontology::{Axiom, ClassId, Concept, Ontology, RelationId};
use elball::semsim::{Measure, SemsimScorer, TaxonomyIndex};
use elball::synth::{self, SynthConfig};
use elball::trainer::{train, NegMode, TrainConfig};
use elball::{EmbeddingSet, Result};

// ---------------------------------------------------------------------------
// Random EL ontologies

pub const ATOMS: [&str; 5] = ["A", "B", "C", "D", "E"];
pub const ROLES: [&str; 2] = ["r", "s"];

fn random_concept<R: Rng>(rng: &mut R, depth: usize) -> String {
    let leaf = depth == 0 || rng.gen_bool(0.4);
    if leaf {
        return if rng.gen_bool(0.1) {
            "Top".to_string()
        } else {
            ATOMS[rng.gen_range(0..ATOMS.len())].to_string()
        };
    }
    if rng.gen_bool(0.5) {
        let a = random_concept(rng, depth - 1);
        let b = random_concept(rng, depth - 1);
        format!("({a} and {b})")
    } else {
        let r = ROLES[rng.gen_range(0..ROLES.len())];
        format!("{r} some ({})", random_concept(rng, depth - 1))
    }
}

/// Text of a random ontology of `n` GCIs over [`ATOMS`] and [`ROLES`].
/// Disjointness (`... < Bot`) appears with probability `p_bot`.
pub fn random_ontology_text<R: Rng>(rng: &mut R, n: usize, p_bot: f64) -> String {
    let mut out = String::new();
    for _ in 0..n {
        let lhs = random_concept(rng, 2);
        let rhs = if rng.gen_bool(p_bot) {
            "Bot".to_string()
        } else {
            random_concept(rng, 2)
        };
        out.push_str(&format!("{lhs} < {rhs}\n"));
    }
    out
}

// ---------------------------------------------------------------------------
// Subsumption by saturating a canonical model, independent of the
// normalizer. Handles conjunction, existentials, Top and Bot.

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum C {
    Top,
    Bot,
    Atom(String),
    And(Box<C>, Box<C>),
    Some(String, Box<C>),
}

pub fn lift(o: &Ontology, c: &Concept) -> C {
    match c {
        Concept::Top => C::Top,
        Concept::Bot => C::Bot,
        Concept::Atomic(id) => C::Atom(o.class_name(*id).to_string()),
        Concept::Nominal(i) => C::Atom(format!("{{{}}}", o.individual_name(*i))),
        Concept::Conjunction(a, b) => C::And(Box::new(lift(o, a)), Box::new(lift(o, b))),
        Concept::Existential(r, f) => C::Some(o.relation_name(*r).to_string(), Box::new(lift(o, f))),
    }
}

pub fn gcis_of_ontology(o: &Ontology) -> Vec<(C, C)> {
    o.axioms
        .iter()
        .map(|a| match a {
            Axiom::Gci(l, r) => (lift(o, l), lift(o, r)),
            other => panic!("unexpected assertion {other:?}"),
        })
        .collect()
}

pub fn gcis_of_theory(t: &NormalizedTheory) -> Vec<(C, C)> {
    let cls = |c: ClassId| match t.class_name(c) {
        "Top" => C::Top,
        "Bot" => C::Bot,
        n => C::Atom(n.to_string()),
    };
    let rel = |r: RelationId| t.relation_name(r).to_string();
    t.axioms()
        .into_iter()
        .map(|a| match a {
            NormalAxiom::Nf1(c, d) => (cls(c), cls(d)),
            NormalAxiom::Nf2(c, d, e) => (C::And(Box::new(cls(c)), Box::new(cls(d))), cls(e)),
            NormalAxiom::Nf3(c, r, d) => (cls(c), C::Some(rel(r), Box::new(cls(d)))),
            NormalAxiom::Nf4(r, c, d) => (C::Some(rel(r), Box::new(cls(c))), cls(d)),
            NormalAxiom::Bot1(c) => (cls(c), C::Bot),
            NormalAxiom::Bot2(c, d) => (C::And(Box::new(cls(c)), Box::new(cls(d))), C::Bot),
            NormalAxiom::Bot4(r, c) => (C::Some(rel(r), Box::new(cls(c))), C::Bot),
        })
        .collect()
}

pub struct CanonicalModel {
    gcis: Vec<(C, C)>,
    nodes: Vec<C>,
    index: HashMap<C, usize>,
    labels: Vec<BTreeSet<C>>,
    edges: Vec<BTreeSet<(String, usize)>>,
    unsat: Vec<bool>,
}

impl CanonicalModel {
    pub fn new(gcis: Vec<(C, C)>) -> Self {
        CanonicalModel {
            gcis,
            nodes: Vec::new(),
            index: HashMap::new(),
            labels: Vec::new(),
            edges: Vec::new(),
            unsat: Vec::new(),
        }
    }

    fn node(&mut self, c: &C) -> usize {
        if let Some(&i) = self.index.get(c) {
            return i;
        }
        let i = self.nodes.len();
        self.nodes.push(c.clone());
        self.index.insert(c.clone(), i);
        self.labels.push(BTreeSet::new());
        self.edges.push(BTreeSet::new());
        self.unsat.push(false);
        self.add(i, c);
        i
    }

    /// Adds `c` to the label of node `i`; returns whether anything changed.
    fn add(&mut self, i: usize, c: &C) -> bool {
        match c {
            C::Top => false,
            C::Bot => !std::mem::replace(&mut self.unsat[i], true),
            C::Atom(_) => self.labels[i].insert(c.clone()),
            C::And(a, b) => {
                let x = self.add(i, a);
                self.add(i, b) || x
            }
            C::Some(r, f) => {
                let j = self.node(f);
                self.edges[i].insert((r.clone(), j))
            }
        }
    }

    fn sat(&self, i: usize, c: &C) -> bool {
        match c {
            C::Top => true,
            C::Bot => self.unsat[i],
            C::Atom(_) => self.labels[i].contains(c),
            C::And(a, b) => self.sat(i, a) && self.sat(i, b),
            C::Some(r, f) => self.edges[i]
                .iter()
                .any(|(s, j)| s == r && self.sat(*j, f)),
        }
    }

    fn saturate(&mut self) {
        loop {
            let mut changed = false;
            for i in 0..self.nodes.len() {
                for k in 0..self.gcis.len() {
                    let (l, r) = self.gcis[k].clone();
                    if self.sat(i, &l) {
                        changed |= self.add(i, &r);
                    }
                }
                let dead = !self.unsat[i]
                    && self.edges[i].iter().any(|(_, j)| self.unsat[*j]);
                if dead {
                    self.unsat[i] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }

    /// Whether the axioms entail `sub ⊑ sup`.
    pub fn entails(&mut self, sub: &C, sup: &C) -> bool {
        let i = self.node(sub);
        self.saturate();
        self.unsat[i] || self.sat(i, sup)
    }
}

/// Entailed subsumptions among `names` (plus `Top`).
pub fn atomic_subsumptions(gcis: Vec<(C, C)>, names: &[&str]) -> BTreeSet<(String, String)> {
    let mut m = CanonicalModel::new(gcis);
    let mut out = BTreeSet::new();
    let concept = |n: &str| if n == "Top" { C::Top } else { C::Atom(n.to_string()) };
    for a in names {
        for b in names {
            if m.entails(&concept(a), &concept(b)) {
                out.insert((a.to_string(), b.to_string()));
            }
        }
    }
    out
}

/// Whether normalizing `text` preserves every subsumption between the
/// original class names.
pub fn normalization_preserves_subsumption(text: &str) -> std::result::Result<(), String> {
    let onto = Ontology::parse(text).map_err(|e| e.to_string())?;
    let t = normalize_ontology(&onto).map_err(|e| e.to_string())?;
    let mut names: Vec<&str> = ATOMS.to_vec();
    names.push("Top");
    let before = atomic_subsumptions(gcis_of_ontology(&onto), &names);
    let after = atomic_subsumptions(gcis_of_theory(&t), &names);
    if before == after {
        Ok(())
    } else {
        Err(format!(
            "subsumptions differ\n{text}\nonly before: {:?}\nonly after: {:?}",
            before.difference(&after).collect::<Vec<_>>(),
            after.difference(&before).collect::<Vec<_>>()
        ))
    }
}

// ---------------------------------------------------------------------------
// Ranking by sorting, for comparison with the library's counting.

pub struct TableScorer(pub HashMap<(String, String), f64>);

impl LinkScorer for TableScorer {
    fn score_tails(&self, head: &str, _relation: &str, tails: &[String]) -> Result<Vec<f64>> {
        Ok(tails
            .iter()
            .map(|t| self.0[&(head.to_string(), t.clone())])
            .collect())
    }
}

/// Sorts the admissible candidates by descending score, placing the truth
/// after everything it ties with, and reads off its 1-based position.
pub fn sorted_rank(scores: &[(String, f64)], truth: &str, excluded: &HashSet<String>) -> (usize, usize) {
    let s_truth = scores.iter().find(|(n, _)| n == truth).unwrap().1;
    let mut pool: Vec<(f64, bool)> = scores
        .iter()
        .filter(|(n, _)| n == truth || !excluded.contains(n))
        .map(|(n, s)| (*s, n == truth))
        .collect();
    // descending score; at equal score the truth sorts last
    pool.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let pos = pool.iter().position(|&(s, t)| t && s == s_truth).unwrap();
    (pos + 1, pool.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteMetrics {
    pub raw: [f64; 4],
    pub filtered: [f64; 4],
}

pub fn brute_force_report(split: &LinkSplit, table: &TableScorer, relation: &str) -> BruteMetrics {
    let mut cands: BTreeSet<String> = BTreeSet::new();
    for t in split.train.iter().chain(&split.valid).chain(&split.test) {
        if t.relation == relation {
            cands.insert(t.tail.clone());
        }
    }
    let mut raw = Vec::new();
    let mut filt = Vec::new();
    for q in split.test.iter().filter(|t| t.relation == relation) {
        let scores: Vec<(String, f64)> = cands
            .iter()
            .map(|c| (c.clone(), table.0[&(q.head.clone(), c.clone())]))
            .collect();
        raw.push(sorted_rank(&scores, &q.tail, &HashSet::new()));
        let known: HashSet<String> = split
            .train
            .iter()
            .chain(&split.valid)
            .filter(|t| t.head == q.head && t.relation == relation)
            .map(|t| t.tail.clone())
            .collect();
        filt.push(sorted_rank(&scores, &q.tail, &known));
    }
    let summarize = |rs: &[(usize, usize)]| {
        let n = rs.len() as f64;
        let hits = |k| rs.iter().filter(|r| r.0 <= k).count() as f64 / n;
        let auc = |&(rank, total): &(usize, usize)| {
            if total <= 1 {
                1.0
            } else {
                // count negatives scored strictly below the positive
                (total - rank) as f64 / (total - 1) as f64
            }
        };
        [
            hits(10),
            hits(100),
            rs.iter().map(|r| r.0 as f64).sum::<f64>() / n,
            rs.iter().map(auc).sum::<f64>() / n,
        ]
    };
    BruteMetrics {
        raw: summarize(&raw),
        filtered: summarize(&filt),
    }
}

pub fn report_numbers(r: &RankingReport) -> BruteMetrics {
    BruteMetrics {
        raw: [r.raw.hits_at_10, r.raw.hits_at_100, r.raw.mean_rank, r.raw.auc],
        filtered: [
            r.filtered.hits_at_10,
            r.filtered.hits_at_100,
            r.filtered.mean_rank,
            r.filtered.auc,
        ],
    }
}

/// A random split over `n_ent` entities with integer scores (many ties).
pub fn random_ranking_instance<R: Rng>(rng: &mut R, n_ent: usize, n_test: usize) -> (LinkSplit, TableScorer) {
    let ents: Vec<String> = (0..n_ent).map(|i| format!("e{i}")).collect();
    let mut all: Vec<(usize, usize)> = (0..n_ent)
        .flat_map(|h| (0..n_ent).map(move |t| (h, t)))
        .collect();
    all.shuffle(rng);
    let n_train = rng.gen_range(0..=(all.len() - n_test).min(40));
    let n_valid = rng.gen_range(0..=(all.len() - n_test - n_train).min(10));
    let triple = |&(h, t): &(usize, usize)| Triple::new(ents[h].clone(), "r", ents[t].clone());
    let split = LinkSplit {
        test: all[..n_test].iter().map(triple).collect(),
        train: all[n_test..n_test + n_train].iter().map(triple).collect(),
        valid: all[n_test + n_train..n_test + n_train + n_valid]
            .iter()
            .map(triple)
            .collect(),
    };
    let levels = rng.gen_range(1..6);
    let table = ents
        .iter()
        .flat_map(|h| ents.iter().map(move |t| (h.clone(), t.clone())))
        .map(|k| (k, rng.gen_range(0..levels) as f64 - 2.0))
        .collect();
    (split, TableScorer(table))
}

// ---------------------------------------------------------------------------
// Finite differences

pub const FD_STEP: f64 = 1e-5;
pub const FD_REL_TOL: f64 = 1e-4;
/// Relative error uses `max(|a|, |n|, FD_FLOOR)` as its denominator.
pub const FD_FLOOR: f64 = 1e-6;

#[derive(Debug, Default)]
pub struct FdOutcome {
    pub compared: usize,
    pub skipped_kinks: usize,
    pub worst: f64,
    pub failures: Vec<String>,
}

/// Compares [`batch_gradient`] with central differences over every scalar
/// of `e`. Coordinates whose one-sided differences disagree straddle a
/// kink and are skipped.
pub fn check_gradient(batch: &LossBatch, e: &EmbeddingSet, out: &mut FdOutcome) {
    let g = batch_gradient(batch, e).unwrap();
    let f = |e: &EmbeddingSet| batch_loss(batch, e).unwrap();
    let f0 = f(e);
    let groups: [(&str, usize); 3] = [
        ("center", e.centers.len()),
        ("radius", e.radii.len()),
        ("relation", e.relations.len()),
    ];
    for (which, (name, len)) in groups.iter().enumerate() {
        for k in 0..*len {
            let at = |delta: f64| {
                let mut p = e.clone();
                let slot = match which {
                    0 => &mut p.centers[k],
                    1 => &mut p.radii[k],
                    _ => &mut p.relations[k],
                };
                *slot += delta;
                f(&p)
            };
            let (fp, fm) = (at(FD_STEP), at(-FD_STEP));
            let fwd = (fp - f0) / FD_STEP;
            let bwd = (f0 - fm) / FD_STEP;
            if (fwd - bwd).abs() > 1e-3 * fwd.abs().max(bwd.abs()).max(1.0) {
                out.skipped_kinks += 1;
                continue;
            }
            let numeric = (fp - fm) / (2.0 * FD_STEP);
            let analytic = match which {
                0 => g.centers[k],
                1 => g.radii[k],
                _ => g.relations[k],
            };
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(FD_FLOOR);
            out.compared += 1;
            out.worst = out.worst.max(rel);
            if rel > FD_REL_TOL {
                out.failures.push(format!(
                    "{name}[{k}]: analytic {analytic:.9e} numeric {numeric:.9e} rel {rel:.2e}"
                ));
            }
        }
    }
}

/// Three named classes and two relations with random parameters.
pub fn random_embedding<R: Rng>(rng: &mut R, dim: usize) -> EmbeddingSet {
    let mut e = EmbeddingSet::new(dim);
    for name in ["A", "B", "C"] {
        let c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.5..1.5)).collect();
        e.push_class(name, &c, rng.gen_range(0.05..1.2)).unwrap();
    }
    for name in ["r", "s"] {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        e.push_relation(name, &v).unwrap();
    }
    e
}

/// A batch holding one tuple of the named loss kind.
pub fn single_op_batch<R: Rng>(rng: &mut R, op: &str, margin: f64) -> LossBatch {
    let c = |rng: &mut R| ClassId(rng.gen_range(0..3));
    let r = |rng: &mut R| RelationId(rng.gen_range(0..2));
    let mut b = LossBatch::new(margin);
    match op {
        "nf1" => b.nf1.push((c(rng), c(rng))),
        "nf2" => b.nf2.push((c(rng), c(rng), c(rng))),
        "nf3" => b.nf3.push((c(rng), r(rng), c(rng))),
        "nf4" => b.nf4.push((r(rng), c(rng), c(rng))),
        "bot1" => b.bot1.push(c(rng)),
        "bot2" => b.bot2.push((c(rng), c(rng))),
        "bot4" => b.bot4.push((r(rng), c(rng))),
        "neg" => b.neg.push((c(rng), r(rng), c(rng))),
        other => panic!("unknown op {other}"),
    }
    b
}

// ---------------------------------------------------------------------------
// Synthetic link-prediction pipeline

pub struct SynthRun {
    pub theory: NormalizedTheory,
    pub split: LinkSplit,
    pub taxonomy: TaxonomyIndex,
}

pub fn synth_run(seed: u64) -> SynthRun {
    let d = synth::generate(&SynthConfig { seed, ..Default::default() });
    let pairs = ingest::parse_pairs("pairs", &d.pairs_tsv).unwrap();
    let ann = ingest::parse_annotations("annotations", &d.annotations_tsv).unwrap();
    let (mut onto, split) = ingest::ingest(&pairs, &ann, &IngestConfig { seed, ..Default::default() }).unwrap();
    onto.extend_from_text(&d.taxonomy).unwrap();
    let theory = normalize_ontology(&onto).unwrap();
    let tax = normalize_ontology(&Ontology::parse(&d.taxonomy).unwrap()).unwrap();
    let taxonomy = TaxonomyIndex::from_theory(&tax, &ann).unwrap();
    SynthRun { theory, split, taxonomy }
}

/// Training setup used for the synthetic link-prediction runs.
pub fn synth_train_config(seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: 3000,
        batch_size: 64,
        steps_per_epoch: 8,
        neg_mode: NegMode::Fresh,
        seed,
        ..TrainConfig::default()
    }
}

pub fn train_and_rank(run: &SynthRun, cfg: &TrainConfig) -> (Checkpoint, RankingReport) {
    let (e, trace) = train(&run.theory, cfg).unwrap();
    let ck = Checkpoint::new(e, cfg, &trace);
    let report = ranking_report(
        &run.split,
        &EmbeddingScorer::new(&ck.embedding, cfg.margin),
        ingest::INTERACTS,
    )
    .unwrap();
    (ck, report)
}

pub fn semsim_report(run: &SynthRun, measure: Measure) -> RankingReport {
    let scorer = SemsimScorer {
        taxonomy: &run.taxonomy,
        measure,
        strip_braces: true,
    };
    ranking_report(&run.split, &scorer, ingest::INTERACTS).unwrap()
}
