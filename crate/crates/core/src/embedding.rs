//! Class balls and relation vectors.

use std::collections::HashMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::Ball;
use crate::normalizer::NormalizedTheory;
use crate::ontology::{ClassId, RelationId, BOT_NAME, TOP_NAME};

/// Finite stand-in for the infinite radius of `Top`.
pub const TOP_RADIUS: f64 = f64::MAX;

/// Centers and radii per class, translation vectors per relation.
///
/// Rows are addressed by [`ClassId`] / [`RelationId`] index. An embedding
/// built with [`EmbeddingSet::for_theory`] shares the theory's numbering.
/// `Top` and `Bot` rows are frozen: `Top` keeps [`TOP_RADIUS`], `Bot` keeps
/// radius zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    dim: usize,
    class_names: Vec<String>,
    class_index: HashMap<String, usize>,
    relation_names: Vec<String>,
    relation_index: HashMap<String, usize>,
    pub centers: Vec<f64>,
    pub radii: Vec<f64>,
    pub relations: Vec<f64>,
}

impl EmbeddingSet {
    pub fn new(dim: usize) -> Self {
        EmbeddingSet {
            dim,
            class_names: Vec::new(),
            class_index: HashMap::new(),
            relation_names: Vec::new(),
            relation_index: HashMap::new(),
            centers: Vec::new(),
            radii: Vec::new(),
            relations: Vec::new(),
        }
    }

    /// Zero-initialized rows for every class and relation of `theory`.
    pub fn for_theory(theory: &NormalizedTheory, dim: usize) -> Self {
        let mut e = EmbeddingSet::new(dim);
        let zeros = vec![0.0; dim];
        for name in theory.classes.names() {
            e.push_class(name, &zeros, 0.0)
                .expect("theory class names are unique");
        }
        for name in theory.relations.names() {
            e.push_relation(name, &zeros)
                .expect("theory relation names are unique");
        }
        e.reset_frozen();
        e
    }

    /// Uniform(0, 1) draws for every trainable scalar, in row order:
    /// all centers, then all radii, then all relation vectors.
    pub fn randomize<R: Rng>(&mut self, rng: &mut R) {
        for x in self.centers.iter_mut() {
            *x = rng.gen::<f64>();
        }
        for r in self.radii.iter_mut() {
            *r = rng.gen::<f64>();
        }
        for x in self.relations.iter_mut() {
            *x = rng.gen::<f64>();
        }
        self.reset_frozen();
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relation_names.len()
    }

    pub fn push_class(&mut self, name: &str, center: &[f64], radius: f64) -> Result<ClassId> {
        if center.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: center.len(),
            });
        }
        if self.class_index.contains_key(name) {
            return Err(Error::Config(format!("duplicate class `{name}`")));
        }
        let row = self.class_names.len();
        self.class_names.push(name.to_string());
        self.class_index.insert(name.to_string(), row);
        self.centers.extend_from_slice(center);
        self.radii.push(radius);
        Ok(ClassId(row as u32))
    }

    pub fn push_relation(&mut self, name: &str, vector: &[f64]) -> Result<RelationId> {
        if vector.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if self.relation_index.contains_key(name) {
            return Err(Error::Config(format!("duplicate relation `{name}`")));
        }
        let row = self.relation_names.len();
        self.relation_names.push(name.to_string());
        self.relation_index.insert(name.to_string(), row);
        self.relations.extend_from_slice(vector);
        Ok(RelationId(row as u32))
    }

    pub fn class_id(&self, name: &str) -> Option<ClassId> {
        self.class_index.get(name).map(|&r| ClassId(r as u32))
    }

    pub fn relation_id(&self, name: &str) -> Option<RelationId> {
        self.relation_index.get(name).map(|&r| RelationId(r as u32))
    }

    pub fn class_name(&self, c: ClassId) -> &str {
        &self.class_names[c.index()]
    }

    pub fn relation_name(&self, r: RelationId) -> &str {
        &self.relation_names[r.index()]
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn relation_names(&self) -> &[String] {
        &self.relation_names
    }

    pub fn center(&self, c: ClassId) -> &[f64] {
        let i = c.index() * self.dim;
        &self.centers[i..i + self.dim]
    }

    pub fn center_mut(&mut self, c: ClassId) -> &mut [f64] {
        let i = c.index() * self.dim;
        &mut self.centers[i..i + self.dim]
    }

    pub fn radius(&self, c: ClassId) -> f64 {
        self.radii[c.index()]
    }

    pub fn set_radius(&mut self, c: ClassId, r: f64) {
        self.radii[c.index()] = r;
    }

    pub fn relation(&self, r: RelationId) -> &[f64] {
        let i = r.index() * self.dim;
        &self.relations[i..i + self.dim]
    }

    pub fn relation_mut(&mut self, r: RelationId) -> &mut [f64] {
        let i = r.index() * self.dim;
        &mut self.relations[i..i + self.dim]
    }

    pub fn ball(&self, c: ClassId) -> Ball {
        Ball::new(self.center(c).to_vec(), self.radius(c))
    }

    pub fn is_top(&self, c: ClassId) -> bool {
        self.class_names[c.index()] == TOP_NAME
    }

    pub fn is_frozen(&self, c: ClassId) -> bool {
        let n = &self.class_names[c.index()];
        n == TOP_NAME || n == BOT_NAME
    }

    pub fn has_class(&self, c: ClassId) -> bool {
        c.index() < self.class_names.len()
    }

    pub fn has_relation(&self, r: RelationId) -> bool {
        r.index() < self.relation_names.len()
    }

    /// Restores the fixed parameters of `Top` and `Bot`.
    ///
    /// `Top` is centered at the origin's unit-norm representative (first axis)
    /// so its normalization term never contributes; its radius is the sentinel.
    pub fn reset_frozen(&mut self) {
        let dim = self.dim;
        for row in 0..self.class_names.len() {
            let name = self.class_names[row].as_str();
            if name == TOP_NAME || name == BOT_NAME {
                let top = name == TOP_NAME;
                let c = &mut self.centers[row * dim..(row + 1) * dim];
                c.iter_mut().for_each(|x| *x = 0.0);
                if top && dim > 0 {
                    c[0] = 1.0;
                }
                self.radii[row] = if top { TOP_RADIUS } else { 0.0 };
            }
        }
    }

    /// Projects every trainable radius onto `r >= 0`.
    pub fn clamp_radii(&mut self) {
        for r in self.radii.iter_mut() {
            if *r < 0.0 {
                *r = 0.0;
            }
        }
    }

    /// A copy whose rows follow `theory`'s numbering, matched by name.
    ///
    /// `Top` and `Bot` are synthesized when absent; any other class or
    /// relation missing from `self` is an error.
    pub fn aligned_to(&self, theory: &NormalizedTheory) -> Result<EmbeddingSet> {
        let mut out = EmbeddingSet::for_theory(theory, self.dim);
        for (row, name) in theory.classes.names().enumerate() {
            let id = ClassId(row as u32);
            match self.class_id(name) {
                Some(src) => {
                    out.center_mut(id).copy_from_slice(self.center(src));
                    out.set_radius(id, self.radius(src));
                }
                None if name == TOP_NAME || name == BOT_NAME => {}
                None => {
                    return Err(Error::MissingSymbol {
                        kind: "class",
                        name: name.to_string(),
                    })
                }
            }
        }
        for (row, name) in theory.relations.names().enumerate() {
            let src = self.relation_id(name).ok_or_else(|| Error::MissingSymbol {
                kind: "relation",
                name: name.to_string(),
            })?;
            out.relation_mut(RelationId(row as u32))
                .copy_from_slice(self.relation(src));
        }
        out.reset_frozen();
        Ok(out)
    }
}

/// Same layout as [`EmbeddingSet`]'s parameter vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub dim: usize,
    pub centers: Vec<f64>,
    pub radii: Vec<f64>,
    pub relations: Vec<f64>,
}

impl GradientSet {
    pub fn zeros_like(e: &EmbeddingSet) -> Self {
        GradientSet {
            dim: e.dim(),
            centers: vec![0.0; e.centers.len()],
            radii: vec![0.0; e.radii.len()],
            relations: vec![0.0; e.relations.len()],
        }
    }

    pub fn center_mut(&mut self, c: ClassId) -> &mut [f64] {
        let i = c.index() * self.dim;
        &mut self.centers[i..i + self.dim]
    }

    pub fn relation_mut(&mut self, r: RelationId) -> &mut [f64] {
        let i = r.index() * self.dim;
        &mut self.relations[i..i + self.dim]
    }

    pub fn is_zero(&self) -> bool {
        self.centers
            .iter()
            .chain(&self.radii)
            .chain(&self.relations)
            .all(|&g| g == 0.0)
    }

    /// Zeroes the entries of frozen classes.
    pub fn mask_frozen(&mut self, e: &EmbeddingSet) {
        for row in 0..e.num_classes() {
            let c = ClassId(row as u32);
            if e.is_frozen(c) {
                self.center_mut(c).iter_mut().for_each(|g| *g = 0.0);
                self.radii[row] = 0.0;
            }
        }
    }
}
