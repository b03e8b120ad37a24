//! Training losses for each normal form, their sum over a batch, and the
//! analytic gradient of that sum.
//!
//! Every loss splits into a geometric part (the hinge terms) and a
//! normalization part `Σ |‖c‖ − 1|` that pulls class centers onto the unit
//! sphere. At non-differentiable points (hinge at zero, norm of a zero
//! vector, `|x|` at zero) the zero subgradient is used.

use crate::embedding::{EmbeddingSet, GradientSet};
use crate::error::{Error, Result};
use crate::normalizer::NormalizedTheory;
use crate::ontology::{ClassId, RelationId};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossTerms {
    pub geometric: f64,
    pub normalization: f64,
}

impl LossTerms {
    pub fn total(&self) -> f64 {
        self.geometric + self.normalization
    }
}

/// Per-bucket tuples for one optimization step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossBatch {
    pub margin: f64,
    pub nf1: Vec<(ClassId, ClassId)>,
    pub nf2: Vec<(ClassId, ClassId, ClassId)>,
    /// `C ⊑ ∃R.D` as `(C, R, D)`.
    pub nf3: Vec<(ClassId, RelationId, ClassId)>,
    /// `∃R.C ⊑ D` as `(R, C, D)`.
    pub nf4: Vec<(RelationId, ClassId, ClassId)>,
    pub bot1: Vec<ClassId>,
    pub bot2: Vec<(ClassId, ClassId)>,
    pub bot4: Vec<(RelationId, ClassId)>,
    /// Corrupted NF3 tuples `C ⋢ ∃R.D` as `(C, R, D)`.
    pub neg: Vec<(ClassId, RelationId, ClassId)>,
}

/// Bucket names, in the order used by [`bucket_losses`].
pub const BUCKETS: [&str; 8] = ["nf1", "nf2", "nf3", "nf4", "bot1", "bot2", "bot4", "neg"];

impl LossBatch {
    pub fn new(margin: f64) -> Self {
        LossBatch {
            margin,
            ..Default::default()
        }
    }

    /// Every axiom of `t` once, without negatives.
    pub fn from_theory(t: &NormalizedTheory, margin: f64) -> Self {
        LossBatch {
            margin,
            nf1: t.nf1.clone(),
            nf2: t.nf2.clone(),
            nf3: t.nf3.clone(),
            nf4: t.nf4.clone(),
            bot1: t.bot1.clone(),
            bot2: t.bot2.clone(),
            bot4: t.bot4.clone(),
            neg: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nf1.len()
            + self.nf2.len()
            + self.nf3.len()
            + self.nf4.len()
            + self.bot1.len()
            + self.bot2.len()
            + self.bot4.len()
            + self.neg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn validate(&self, e: &EmbeddingSet) -> Result<()> {
        let class = |c: ClassId| {
            if e.has_class(c) {
                Ok(())
            } else {
                Err(Error::MissingRow(c.index()))
            }
        };
        let rel = |r: RelationId| {
            if e.has_relation(r) {
                Ok(())
            } else {
                Err(Error::MissingRow(r.index()))
            }
        };
        for &(c, d) in self.nf1.iter().chain(&self.bot2) {
            class(c)?;
            class(d)?;
        }
        for &(c, d, x) in &self.nf2 {
            class(c)?;
            class(d)?;
            class(x)?;
        }
        for &(c, r, d) in self.nf3.iter().chain(&self.neg) {
            class(c)?;
            rel(r)?;
            class(d)?;
        }
        for &(r, c, d) in &self.nf4 {
            rel(r)?;
            class(c)?;
            class(d)?;
        }
        for &c in &self.bot1 {
            class(c)?;
        }
        for &(r, c) in &self.bot4 {
            rel(r)?;
            class(c)?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// scalar building blocks

fn hinge(z: f64) -> (f64, f64) {
    if z > 0.0 {
        (z, 1.0)
    } else {
        (0.0, 0.0)
    }
}

/// `‖v‖` and the unit direction `v/‖v‖` (zero vector when `v = 0`).
fn norm_and_dir(v: &[f64]) -> (f64, Vec<f64>) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let dir = if n > 0.0 {
        v.iter().map(|x| x / n).collect()
    } else {
        vec![0.0; v.len()]
    };
    (n, dir)
}

/// Linear combination of centers and relation vectors, e.g. `c + r − d`.
struct Offset {
    classes: Vec<(ClassId, f64)>,
    relations: Vec<(RelationId, f64)>,
}

impl Offset {
    fn classes(pairs: &[(ClassId, f64)]) -> Self {
        Offset {
            classes: pairs.to_vec(),
            relations: Vec::new(),
        }
    }

    fn with_relation(mut self, r: RelationId, sign: f64) -> Self {
        self.relations.push((r, sign));
        self
    }

    fn eval(&self, e: &EmbeddingSet) -> Vec<f64> {
        let mut v = vec![0.0; e.dim()];
        for &(c, s) in &self.classes {
            for (acc, x) in v.iter_mut().zip(e.center(c)) {
                *acc += s * x;
            }
        }
        for &(r, s) in &self.relations {
            for (acc, x) in v.iter_mut().zip(e.relation(r)) {
                *acc += s * x;
            }
        }
        v
    }

    /// Adds `scale · ∂‖offset‖/∂θ`, given the unit direction of the offset.
    fn backprop(&self, g: &mut GradientSet, dir: &[f64], scale: f64) {
        for &(c, s) in &self.classes {
            for (acc, u) in g.center_mut(c).iter_mut().zip(dir) {
                *acc += scale * s * u;
            }
        }
        for &(r, s) in &self.relations {
            for (acc, u) in g.relation_mut(r).iter_mut().zip(dir) {
                *acc += scale * s * u;
            }
        }
    }
}

/// One `max(0, Σ radius terms + sign·‖offset‖ + bias)` term.
struct HingeTerm {
    offset: Option<(Offset, f64)>,
    radii: Vec<(ClassId, f64)>,
    bias: f64,
}

impl HingeTerm {
    fn eval(&self, e: &EmbeddingSet, g: Option<&mut GradientSet>) -> f64 {
        let mut z = self.bias;
        let mut dist = None;
        if let Some((off, sign)) = &self.offset {
            let (n, dir) = norm_and_dir(&off.eval(e));
            z += sign * n;
            dist = Some((off, *sign, dir));
        }
        for &(c, s) in &self.radii {
            z += s * e.radius(c);
        }
        let (value, slope) = hinge(z);
        if let (Some(g), true) = (g, slope > 0.0) {
            if let Some((off, sign, dir)) = dist {
                off.backprop(g, &dir, sign);
            }
            for &(c, s) in &self.radii {
                g.radii[c.index()] += s;
            }
        }
        value
    }
}

/// `|‖c‖ − 1|` for each listed class.
fn normalization(e: &EmbeddingSet, classes: &[ClassId], mut g: Option<&mut GradientSet>) -> f64 {
    let mut total = 0.0;
    for &c in classes {
        let (n, dir) = norm_and_dir(e.center(c));
        let dev = n - 1.0;
        total += dev.abs();
        if let Some(g) = g.as_deref_mut() {
            let s = if dev > 0.0 {
                1.0
            } else if dev < 0.0 {
                -1.0
            } else {
                0.0
            };
            if s != 0.0 {
                for (acc, u) in g.center_mut(c).iter_mut().zip(&dir) {
                    *acc += s * u;
                }
            }
        }
    }
    total
}

fn sum_hinges(e: &EmbeddingSet, terms: &[HingeTerm], mut g: Option<&mut GradientSet>) -> f64 {
    terms.iter().map(|t| t.eval(e, g.as_deref_mut())).sum()
}

// ---------------------------------------------------------------------------
// the individual losses

fn nf1(e: &EmbeddingSet, c: ClassId, d: ClassId, m: f64, mut g: Option<&mut GradientSet>) -> LossTerms {
    let t = HingeTerm {
        offset: Some((Offset::classes(&[(c, 1.0), (d, -1.0)]), 1.0)),
        radii: vec![(c, 1.0), (d, -1.0)],
        bias: -m,
    };
    LossTerms {
        geometric: t.eval(e, g.as_deref_mut()),
        normalization: normalization(e, &[c, d], g),
    }
}

fn nf2(
    e: &EmbeddingSet,
    c: ClassId,
    d: ClassId,
    x: ClassId,
    m: f64,
    mut g: Option<&mut GradientSet>,
) -> LossTerms {
    let terms = [
        HingeTerm {
            offset: Some((Offset::classes(&[(c, 1.0), (d, -1.0)]), 1.0)),
            radii: vec![(c, -1.0), (d, -1.0)],
            bias: -m,
        },
        HingeTerm {
            offset: Some((Offset::classes(&[(c, 1.0), (x, -1.0)]), 1.0)),
            radii: vec![(c, -1.0)],
            bias: -m,
        },
        // r(c) here as well, not r(d).
        HingeTerm {
            offset: Some((Offset::classes(&[(d, 1.0), (x, -1.0)]), 1.0)),
            radii: vec![(c, -1.0)],
            bias: -m,
        },
    ];
    let mut geometric = sum_hinges(e, &terms, g.as_deref_mut());
    // max(0, min(r_c, r_d) − r_e − γ); ties take the derivative through c.
    let smaller = if e.radius(c) <= e.radius(d) { c } else { d };
    geometric += HingeTerm {
        offset: None,
        radii: vec![(smaller, 1.0), (x, -1.0)],
        bias: -m,
    }
    .eval(e, g.as_deref_mut());
    LossTerms {
        geometric,
        normalization: normalization(e, &[c, d, x], g),
    }
}

fn nf3(
    e: &EmbeddingSet,
    c: ClassId,
    d: ClassId,
    r: RelationId,
    m: f64,
    mut g: Option<&mut GradientSet>,
) -> LossTerms {
    let t = HingeTerm {
        offset: Some((
            Offset::classes(&[(c, 1.0), (d, -1.0)]).with_relation(r, 1.0),
            1.0,
        )),
        radii: vec![(c, 1.0), (d, -1.0)],
        bias: -m,
    };
    LossTerms {
        geometric: t.eval(e, g.as_deref_mut()),
        normalization: normalization(e, &[c, d], g),
    }
}

fn nf4(
    e: &EmbeddingSet,
    c: ClassId,
    d: ClassId,
    r: RelationId,
    m: f64,
    mut g: Option<&mut GradientSet>,
) -> LossTerms {
    let t = HingeTerm {
        offset: Some((
            Offset::classes(&[(c, 1.0), (d, -1.0)]).with_relation(r, -1.0),
            1.0,
        )),
        radii: vec![(c, -1.0), (d, -1.0)],
        bias: -m,
    };
    LossTerms {
        geometric: t.eval(e, g.as_deref_mut()),
        normalization: normalization(e, &[c, d], g),
    }
}

fn bot2(e: &EmbeddingSet, c: ClassId, d: ClassId, m: f64, mut g: Option<&mut GradientSet>) -> LossTerms {
    let t = HingeTerm {
        offset: Some((Offset::classes(&[(c, 1.0), (d, -1.0)]), -1.0)),
        radii: vec![(c, 1.0), (d, 1.0)],
        bias: m,
    };
    LossTerms {
        geometric: t.eval(e, g.as_deref_mut()),
        normalization: normalization(e, &[c, d], g),
    }
}

fn radius_only(e: &EmbeddingSet, c: ClassId, g: Option<&mut GradientSet>) -> LossTerms {
    if let Some(g) = g {
        g.radii[c.index()] += 1.0;
    }
    LossTerms {
        geometric: e.radius(c),
        normalization: 0.0,
    }
}

fn neg(
    e: &EmbeddingSet,
    c: ClassId,
    d: ClassId,
    r: RelationId,
    m: f64,
    mut g: Option<&mut GradientSet>,
) -> LossTerms {
    let t = HingeTerm {
        offset: Some((
            Offset::classes(&[(c, 1.0), (d, -1.0)]).with_relation(r, 1.0),
            -1.0,
        )),
        radii: vec![(c, 1.0), (d, 1.0)],
        bias: m,
    };
    LossTerms {
        geometric: t.eval(e, g.as_deref_mut()),
        normalization: normalization(e, &[c, d], g),
    }
}

// ---------------------------------------------------------------------------
// public single-axiom API

fn class_row(e: &EmbeddingSet, c: ClassId) -> Result<()> {
    if e.has_class(c) {
        Ok(())
    } else {
        Err(Error::MissingRow(c.index()))
    }
}

fn relation_row(e: &EmbeddingSet, r: RelationId) -> Result<()> {
    if e.has_relation(r) {
        Ok(())
    } else {
        Err(Error::MissingRow(r.index()))
    }
}

/// `C ⊑ D`.
pub fn loss_nf1(e: &EmbeddingSet, c: ClassId, d: ClassId, margin: f64) -> Result<LossTerms> {
    class_row(e, c)?;
    class_row(e, d)?;
    Ok(nf1(e, c, d, margin, None))
}

/// `C ⊓ D ⊑ E`, the ball-free approximation used for training.
pub fn loss_nf2(
    e: &EmbeddingSet,
    c: ClassId,
    d: ClassId,
    x: ClassId,
    margin: f64,
) -> Result<LossTerms> {
    class_row(e, c)?;
    class_row(e, d)?;
    class_row(e, x)?;
    Ok(nf2(e, c, d, x, margin, None))
}

/// `C ⊑ ∃R.D`.
pub fn loss_nf3(
    e: &EmbeddingSet,
    c: ClassId,
    d: ClassId,
    r: RelationId,
    margin: f64,
) -> Result<LossTerms> {
    class_row(e, c)?;
    class_row(e, d)?;
    relation_row(e, r)?;
    Ok(nf3(e, c, d, r, margin, None))
}

/// `∃R.C ⊑ D`.
pub fn loss_nf4(
    e: &EmbeddingSet,
    c: ClassId,
    d: ClassId,
    r: RelationId,
    margin: f64,
) -> Result<LossTerms> {
    class_row(e, c)?;
    class_row(e, d)?;
    relation_row(e, r)?;
    Ok(nf4(e, c, d, r, margin, None))
}

/// `C ⊓ D ⊑ ⊥`.
pub fn loss_bot2(e: &EmbeddingSet, c: ClassId, d: ClassId, margin: f64) -> Result<LossTerms> {
    class_row(e, c)?;
    class_row(e, d)?;
    Ok(bot2(e, c, d, margin, None))
}

/// `C ⊑ ⊥`: the radius of `C`.
pub fn loss_bot1(e: &EmbeddingSet, c: ClassId) -> Result<LossTerms> {
    class_row(e, c)?;
    Ok(radius_only(e, c, None))
}

/// `∃R.C ⊑ ⊥`: translations keep radii, so this is the radius of `C`.
pub fn loss_bot4(e: &EmbeddingSet, c: ClassId, r: RelationId) -> Result<LossTerms> {
    class_row(e, c)?;
    relation_row(e, r)?;
    Ok(radius_only(e, c, None))
}

/// `C ⋢ ∃R.D` for a corrupted NF3 tuple.
pub fn loss_neg(
    e: &EmbeddingSet,
    c: ClassId,
    d: ClassId,
    r: RelationId,
    margin: f64,
) -> Result<LossTerms> {
    class_row(e, c)?;
    class_row(e, d)?;
    relation_row(e, r)?;
    Ok(neg(e, c, d, r, margin, None))
}

// ---------------------------------------------------------------------------
// batches

fn accumulate(b: &LossBatch, e: &EmbeddingSet, mut g: Option<&mut GradientSet>) -> [f64; 8] {
    let m = b.margin;
    let mut out = [0.0; 8];
    for &(c, d) in &b.nf1 {
        out[0] += nf1(e, c, d, m, g.as_deref_mut()).total();
    }
    for &(c, d, x) in &b.nf2 {
        out[1] += nf2(e, c, d, x, m, g.as_deref_mut()).total();
    }
    for &(c, r, d) in &b.nf3 {
        out[2] += nf3(e, c, d, r, m, g.as_deref_mut()).total();
    }
    for &(r, c, d) in &b.nf4 {
        out[3] += nf4(e, c, d, r, m, g.as_deref_mut()).total();
    }
    for &c in &b.bot1 {
        out[4] += radius_only(e, c, g.as_deref_mut()).total();
    }
    for &(c, d) in &b.bot2 {
        out[5] += bot2(e, c, d, m, g.as_deref_mut()).total();
    }
    for &(_, c) in &b.bot4 {
        out[6] += radius_only(e, c, g.as_deref_mut()).total();
    }
    for &(c, r, d) in &b.neg {
        out[7] += neg(e, c, d, r, m, g.as_deref_mut()).total();
    }
    if let Some(g) = g {
        g.mask_frozen(e);
    }
    out
}

/// Loss summed per bucket, in [`BUCKETS`] order.
pub fn bucket_losses(b: &LossBatch, e: &EmbeddingSet) -> Result<[f64; 8]> {
    b.validate(e)?;
    Ok(accumulate(b, e, None))
}

/// Unweighted sum of every tuple's loss.
pub fn batch_loss(b: &LossBatch, e: &EmbeddingSet) -> Result<f64> {
    Ok(bucket_losses(b, e)?.iter().sum())
}

/// Gradient of [`batch_loss`]; frozen classes (`Top`, `Bot`) get zero.
pub fn batch_gradient(b: &LossBatch, e: &EmbeddingSet) -> Result<GradientSet> {
    Ok(batch_loss_and_gradient(b, e)?.1)
}

/// Per-bucket losses and the gradient of their sum in one pass.
pub fn batch_loss_and_gradient(b: &LossBatch, e: &EmbeddingSet) -> Result<([f64; 8], GradientSet)> {
    b.validate(e)?;
    let mut g = GradientSet::zeros_like(e);
    let losses = accumulate(b, e, Some(&mut g));
    Ok((losses, g))
}
