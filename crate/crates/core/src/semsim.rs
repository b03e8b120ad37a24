//! Resnik and Lin similarity over a class hierarchy, combined per entity
//! pair with the best-match average.
//!
//! Information content is `IC(c) = −ln p(c)` where `p(c)` is the fraction of
//! annotated entities annotated with `c` or one of its descendants.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::eval::LinkScorer;
use crate::normalizer::NormalizedTheory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Measure {
    Resnik,
    Lin,
}

#[derive(Debug, Clone)]
pub struct TaxonomyIndex {
    names: Vec<String>,
    index: HashMap<String, usize>,
    /// Reflexive-transitive ancestors of each class, sorted.
    ancestors: Vec<Vec<usize>>,
    /// `None` for classes no entity is annotated with (even indirectly).
    ic: Vec<Option<f64>>,
    annotations: BTreeMap<String, Vec<usize>>,
}

impl TaxonomyIndex {
    /// `edges` are `(sub, super)` pairs. Cycles are allowed; classes on a
    /// cycle end up with identical ancestor sets.
    pub fn build<S: AsRef<str>>(
        edges: &[(S, S)],
        annotations: &[(S, S)],
    ) -> Result<TaxonomyIndex> {
        let mut names: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut intern = |n: &str, names: &mut Vec<String>| -> usize {
            *index.entry(n.to_string()).or_insert_with(|| {
                names.push(n.to_string());
                names.len() - 1
            })
        };
        let mut parents: Vec<Vec<usize>> = Vec::new();
        for (sub, sup) in edges {
            let a = intern(sub.as_ref(), &mut names);
            let b = intern(sup.as_ref(), &mut names);
            parents.resize(names.len(), Vec::new());
            if a != b {
                parents[a].push(b);
            }
        }
        parents.resize(names.len(), Vec::new());
        let index: HashMap<String, usize> =
            names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();

        let ancestors: Vec<Vec<usize>> = (0..names.len())
            .map(|start| {
                let mut seen = BTreeSet::from([start]);
                let mut stack = vec![start];
                while let Some(c) = stack.pop() {
                    for &p in &parents[c] {
                        if seen.insert(p) {
                            stack.push(p);
                        }
                    }
                }
                seen.into_iter().collect()
            })
            .collect();

        let mut by_entity: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
        for (entity, class) in annotations {
            let c = *index.get(class.as_ref()).ok_or_else(|| Error::Unknown {
                kind: "class",
                name: class.as_ref().to_string(),
            })?;
            by_entity.entry(entity.as_ref().to_string()).or_default().insert(c);
        }

        let mut counts = vec![0usize; names.len()];
        for classes in by_entity.values() {
            let mut covered = BTreeSet::new();
            for &c in classes {
                covered.extend(ancestors[c].iter().copied());
            }
            for c in covered {
                counts[c] += 1;
            }
        }
        let total = by_entity.len() as f64;
        let ic = counts
            .iter()
            .map(|&n| (n > 0).then(|| -(n as f64 / total).ln()))
            .collect();

        Ok(TaxonomyIndex {
            names,
            index,
            ancestors,
            ic,
            annotations: by_entity
                .into_iter()
                .map(|(e, cs)| (e, cs.into_iter().collect()))
                .collect(),
        })
    }

    /// Hierarchy from the NF1 axioms of a theory (`Top`/`Bot` skipped).
    pub fn from_theory<S: AsRef<str>>(t: &NormalizedTheory, annotations: &[(S, S)]) -> Result<TaxonomyIndex> {
        let edges: Vec<(&str, &str)> = t
            .nf1
            .iter()
            .filter(|(c, d)| {
                ![c, d]
                    .iter()
                    .any(|&&x| x == crate::ClassId::TOP || x == crate::ClassId::BOT)
            })
            .map(|&(c, d)| (t.class_name(c), t.class_name(d)))
            .collect();
        let mut all: Vec<(&str, &str)> = edges;
        // isolated annotation classes still need a node
        for (_, class) in annotations {
            if t.class_id(class.as_ref()).is_some() {
                all.push((class.as_ref(), class.as_ref()));
            }
        }
        let ann: Vec<(&str, &str)> = annotations
            .iter()
            .map(|(a, b)| (a.as_ref(), b.as_ref()))
            .collect();
        TaxonomyIndex::build(&all, &ann)
    }

    fn class(&self, name: &str) -> Result<usize> {
        self.index.get(name).copied().ok_or_else(|| Error::Unknown {
            kind: "class",
            name: name.to_string(),
        })
    }

    pub fn ic(&self, class: &str) -> Result<Option<f64>> {
        Ok(self.ic[self.class(class)?])
    }

    pub fn annotations(&self, entity: &str) -> Option<Vec<&str>> {
        self.annotations
            .get(entity)
            .map(|cs| cs.iter().map(|&c| self.names[c].as_str()).collect())
    }

    pub fn entities(&self) -> impl Iterator<Item = &str> {
        self.annotations.keys().map(String::as_str)
    }

    fn resnik_idx(&self, a: usize, b: usize) -> f64 {
        let (xs, ys) = (&self.ancestors[a], &self.ancestors[b]);
        let (mut i, mut j) = (0, 0);
        let mut best = 0.0f64;
        while i < xs.len() && j < ys.len() {
            match xs[i].cmp(&ys[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    if let Some(ic) = self.ic[xs[i]] {
                        best = best.max(ic);
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        best
    }

    fn lin_idx(&self, a: usize, b: usize) -> f64 {
        match (self.ic[a], self.ic[b]) {
            (Some(x), Some(y)) if x + y > 0.0 => 2.0 * self.resnik_idx(a, b) / (x + y),
            _ => 0.0,
        }
    }

    fn pair(&self, m: Measure, a: usize, b: usize) -> f64 {
        match m {
            Measure::Resnik => self.resnik_idx(a, b),
            Measure::Lin => self.lin_idx(a, b),
        }
    }

    /// Highest IC among common ancestors.
    pub fn resnik(&self, a: &str, b: &str) -> Result<f64> {
        Ok(self.resnik_idx(self.class(a)?, self.class(b)?))
    }

    /// `2·resnik / (IC(a) + IC(b))`, zero when the denominator is zero.
    pub fn lin(&self, a: &str, b: &str) -> Result<f64> {
        Ok(self.lin_idx(self.class(a)?, self.class(b)?))
    }

    /// Symmetric best-match average of two entities' annotation sets.
    pub fn bma_similarity(&self, e1: &str, e2: &str, m: Measure) -> Result<f64> {
        let get = |e: &str| {
            self.annotations
                .get(e)
                .filter(|cs| !cs.is_empty())
                .ok_or(Error::Empty("annotation set"))
        };
        let (a, b) = (get(e1)?, get(e2)?);
        // `+ 0.0` turns a `-0.0` from `−ln 1` into `0.0`
        Ok(bma(a, b, |x, y| self.pair(m, x, y)) + 0.0)
    }
}

/// `(mean_a max_b s(a,b) + mean_b max_a s(a,b)) / 2` over non-empty sets.
pub fn bma<T: Copy>(a: &[T], b: &[T], sim: impl Fn(T, T) -> f64) -> f64 {
    let directed = |xs: &[T], ys: &[T], flip: bool| {
        xs.iter()
            .map(|&x| {
                ys.iter()
                    .map(|&y| if flip { sim(y, x) } else { sim(x, y) })
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .sum::<f64>()
            / xs.len() as f64
    };
    (directed(a, b, false) + directed(b, a, true)) / 2.0
}

/// Link scorer using BMA similarity; unannotated entities score `−∞`.
pub struct SemsimScorer<'a> {
    pub taxonomy: &'a TaxonomyIndex,
    pub measure: Measure,
    /// Maps split entity names (e.g. `{P1}`) to annotation keys (`P1`).
    pub strip_braces: bool,
}

impl SemsimScorer<'_> {
    fn key<'n>(&self, name: &'n str) -> &'n str {
        if self.strip_braces {
            name.strip_prefix('{')
                .and_then(|s| s.strip_suffix('}'))
                .unwrap_or(name)
        } else {
            name
        }
    }
}

impl LinkScorer for SemsimScorer<'_> {
    fn score_tails(&self, head: &str, _relation: &str, tails: &[String]) -> Result<Vec<f64>> {
        let h = self.key(head);
        Ok(tails
            .iter()
            .map(|t| {
                self.taxonomy
                    .bma_similarity(h, self.key(t), self.measure)
                    .unwrap_or(f64::NEG_INFINITY)
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Root ← A ← B with 4 entities: one on B, one on A, two on Root.
    fn chain() -> TaxonomyIndex {
        TaxonomyIndex::build(
            &[("A", "Root"), ("B", "A"), ("Leaf", "B")],
            &[("e1", "B"), ("e2", "A"), ("e3", "Root"), ("e4", "Root")],
        )
        .unwrap()
    }

    const LN2: f64 = std::f64::consts::LN_2;

    fn close(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn information_content() {
        let t = chain();
        close(t.ic("Root").unwrap().unwrap(), 0.0);
        close(t.ic("A").unwrap().unwrap(), LN2);
        close(t.ic("B").unwrap().unwrap(), 2.0 * LN2);
        assert_eq!(t.ic("Leaf").unwrap(), None);
    }

    #[test]
    fn resnik_and_lin() {
        let t = chain();
        close(t.resnik("A", "B").unwrap(), LN2);
        close(t.resnik("B", "B").unwrap(), 2.0 * LN2);
        close(t.lin("B", "B").unwrap(), 1.0);
        close(t.lin("A", "B").unwrap(), 2.0 * LN2 / (3.0 * LN2));
        assert_eq!(t.lin("Root", "Root").unwrap(), 0.0);
        assert!(matches!(t.resnik("A", "Nope"), Err(Error::Unknown { .. })));
    }

    #[test]
    fn bma_cases() {
        let t = TaxonomyIndex::build(
            &[("A", "Root"), ("B", "A")],
            &[
                ("x", "A"),
                ("x", "B"),
                ("y", "B"),
                ("z", "Root"),
                ("w", "Root"),
            ],
        )
        .unwrap();
        // counts: Root 4, A 2, B 2 (x and y both reach A via B)
        let ic_b = t.ic("B").unwrap().unwrap();
        close(ic_b, LN2);
        close(t.bma_similarity("y", "y", Measure::Lin).unwrap(), 1.0);
        close(
            t.bma_similarity("y", "x", Measure::Resnik).unwrap(),
            t.bma_similarity("x", "y", Measure::Resnik).unwrap(),
        );

        let t = chain();
        // singletons reduce to the pairwise value
        close(
            t.bma_similarity("e1", "e2", Measure::Resnik).unwrap(),
            t.resnik("B", "A").unwrap(),
        );
    }

    #[test]
    fn bma_two_versus_one() {
        // on the chain: {A, B} vs {B}
        // A→{B}: ln2, B→{B}: 2ln2 → 1.5 ln2; B→{A,B}: 2ln2; mean 1.75 ln2
        let t = chain();
        let (a, b) = (t.class("A").unwrap(), t.class("B").unwrap());
        close(bma(&[a, b], &[b], |x, y| t.resnik_idx(x, y)), 1.75 * LN2);
    }

    #[test]
    fn cycles_collapse() {
        let t = TaxonomyIndex::build(
            &[("A", "B"), ("B", "A"), ("A", "Root")],
            &[("e", "A"), ("f", "Root")],
        )
        .unwrap();
        close(t.ic("A").unwrap().unwrap(), t.ic("B").unwrap().unwrap());
    }

    #[test]
    fn unknown_annotation_class_is_an_error() {
        let err = TaxonomyIndex::build(&[("A", "Root")], &[("e", "Z")]).unwrap_err();
        assert!(matches!(err, Error::Unknown { .. }));
    }

    #[test]
    fn unannotated_entities_rank_last() {
        let t = chain();
        let s = SemsimScorer {
            taxonomy: &t,
            measure: Measure::Resnik,
            strip_braces: true,
        };
        let scores = s
            .score_tails("{e1}", "interacts", &["{e2}".into(), "{ghost}".into()])
            .unwrap();
        assert!(scores[0].is_finite());
        assert_eq!(scores[1], f64::NEG_INFINITY);
    }
}
