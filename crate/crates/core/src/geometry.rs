//! n-ball primitives and a model checker for finished embeddings.
//!
//! Classes are interpreted as open balls `{x : ‖c − x‖ < r}` and relations as
//! translations `x ↦ x + v`. Containment is checked on the closed balls, so a
//! ball is contained in itself; disjointness accepts touching spheres.

use serde::Serialize;

use crate::embedding::{EmbeddingSet, TOP_RADIUS};
use crate::error::{Error, Result};
use crate::losses;
use crate::normalizer::{NormalAxiom, NormalFormTag, NormalizedTheory};
use crate::ontology::ClassId;

#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Self {
        debug_assert!(radius >= 0.0, "negative radius {radius}");
        Ball { center, radius }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn contains_point(&self, p: &[f64]) -> bool {
        distance(&self.center, p) <= self.radius
    }

    pub fn translated(&self, v: &[f64]) -> Ball {
        Ball::new(
            self.center.iter().zip(v).map(|(c, d)| c + d).collect(),
            self.radius,
        )
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn check_dims(a: &Ball, b: &Ball) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// `max(0, ‖c_inner − c_outer‖ + r_inner − r_outer)`; zero iff `inner ⊆ outer`.
pub fn containment_violation(inner: &Ball, outer: &Ball) -> Result<f64> {
    check_dims(inner, outer)?;
    Ok((distance(&inner.center, &outer.center) + inner.radius - outer.radius).max(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Intersection {
    Ball(Ball),
    Disjoint,
}

/// Smallest closed ball enclosing `a ∩ b`.
///
/// With `d = ‖c_a − c_b‖` and `h = (r_a² − r_b² + d²) / 2d`, the two spheres
/// meet in a sphere of radius `√(r_a² − h²)` centered at
/// `c_a + (h/d)(c_b − c_a)`. That sphere bounds the lens only while its
/// center lies between the two ball centers (`0 ≤ h ≤ d`). Otherwise more
/// than a hemisphere of one ball lies in the lens and that ball is the
/// tight enclosure; this covers nested balls as well.
pub fn intersection_ball(a: &Ball, b: &Ball) -> Result<Intersection> {
    check_dims(a, b)?;
    let d = distance(&a.center, &b.center);
    if d >= a.radius + b.radius {
        return Ok(Intersection::Disjoint);
    }
    if d == 0.0 {
        let smaller = if a.radius <= b.radius { a } else { b };
        return Ok(Intersection::Ball(smaller.clone()));
    }
    let h = (a.radius * a.radius - b.radius * b.radius + d * d) / (2.0 * d);
    if h <= 0.0 {
        return Ok(Intersection::Ball(a.clone()));
    }
    if h >= d {
        return Ok(Intersection::Ball(b.clone()));
    }
    let t = h / d;
    let center = a
        .center
        .iter()
        .zip(&b.center)
        .map(|(ca, cb)| ca + t * (cb - ca))
        .collect();
    let radius = (a.radius * a.radius - h * h).max(0.0).sqrt();
    Ok(Intersection::Ball(Ball::new(center, radius)))
}

/// A class denotation: a ball, or all of ℝⁿ for `Top`.
#[derive(Debug, Clone, PartialEq)]
enum Region {
    Everything,
    Ball(Ball),
}

impl Region {
    fn of(e: &EmbeddingSet, c: ClassId) -> Region {
        if e.is_top(c) || e.radius(c) >= TOP_RADIUS {
            Region::Everything
        } else {
            Region::Ball(e.ball(c))
        }
    }

    fn translated(&self, v: &[f64]) -> Region {
        match self {
            Region::Everything => Region::Everything,
            Region::Ball(b) => Region::Ball(b.translated(v)),
        }
    }
}

/// Violation reported when a containment can never hold, such as
/// `Top ⊑ C` for a bounded `C`.
pub const UNSATISFIABLE: f64 = TOP_RADIUS;

fn region_containment(inner: &Region, outer: &Region) -> Result<f64> {
    match (inner, outer) {
        (_, Region::Everything) => Ok(0.0),
        (Region::Everything, Region::Ball(_)) => Ok(UNSATISFIABLE),
        (Region::Ball(i), Region::Ball(o)) => containment_violation(i, o),
    }
}

fn region_disjointness(a: &Region, b: &Region) -> f64 {
    match (a, b) {
        (Region::Ball(a), Region::Ball(b)) => {
            (a.radius + b.radius - distance(&a.center, &b.center)).max(0.0)
        }
        _ => UNSATISFIABLE,
    }
}

fn region_emptiness(a: &Region) -> f64 {
    match a {
        Region::Everything => UNSATISFIABLE,
        Region::Ball(b) => b.radius,
    }
}

/// How NF2 axioms `C ⊓ D ⊑ E` are judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Nf2Criterion {
    /// Smallest ball around `η(C) ∩ η(D)` must lie in `η(E)`.
    #[default]
    Exact,
    /// The geometric terms of the NF2 training loss at zero margin.
    LossTerms,
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomCheck {
    pub axiom: String,
    pub form: NormalFormTag,
    pub violation: f64,
    pub satisfied: bool,
    /// Reported for inspection only; does not affect `overall`.
    pub informational: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelReport {
    pub overall: bool,
    pub tolerance: f64,
    pub nf2_criterion: Nf2Criterion,
    pub max_violation: f64,
    pub axioms: Vec<AxiomCheck>,
}

impl ModelReport {
    pub fn failures(&self) -> impl Iterator<Item = &AxiomCheck> {
        self.axioms.iter().filter(|a| !a.satisfied)
    }

    /// True when every axiom of the given form is satisfied.
    pub fn form_satisfied(&self, form: NormalFormTag) -> bool {
        self.axioms
            .iter()
            .filter(|a| a.form == form)
            .all(|a| a.satisfied)
    }
}

/// Checks `e` against every axiom of `t` with the exact NF2 criterion.
pub fn check_model(t: &NormalizedTheory, e: &EmbeddingSet, tol: f64) -> Result<ModelReport> {
    check_model_with(t, e, tol, Nf2Criterion::Exact)
}

/// Checks whether the balls of `e` form a model of `t` up to `tol`.
///
/// `e` is matched to `t` by symbol name. NF4 axioms are listed with the
/// NF4 loss term as their violation but never fail the check.
pub fn check_model_with(
    t: &NormalizedTheory,
    e: &EmbeddingSet,
    tol: f64,
    nf2: Nf2Criterion,
) -> Result<ModelReport> {
    let e = e.aligned_to(t)?;
    let e = &e;
    let mut axioms = Vec::with_capacity(t.len());
    for ax in t.axioms() {
        let mut informational = false;
        let violation = match ax {
            NormalAxiom::Nf1(c, d) => region_containment(&Region::of(e, c), &Region::of(e, d))?,
            NormalAxiom::Nf2(c, d, x) => match nf2 {
                Nf2Criterion::Exact => {
                    let inter = match (Region::of(e, c), Region::of(e, d)) {
                        (Region::Everything, r) | (r, Region::Everything) => Some(r),
                        (Region::Ball(a), Region::Ball(b)) => match intersection_ball(&a, &b)? {
                            Intersection::Disjoint => None,
                            Intersection::Ball(b) => Some(Region::Ball(b)),
                        },
                    };
                    match inter {
                        None => 0.0,
                        Some(r) => region_containment(&r, &Region::of(e, x))?,
                    }
                }
                Nf2Criterion::LossTerms => losses::loss_nf2(e, c, d, x, 0.0)?.geometric,
            },
            NormalAxiom::Nf3(c, r, d) => {
                let moved = Region::of(e, c).translated(e.relation(r));
                region_containment(&moved, &Region::of(e, d))?
            }
            NormalAxiom::Nf4(r, c, d) => {
                informational = true;
                losses::loss_nf4(e, c, d, r, 0.0)?.geometric
            }
            NormalAxiom::Bot1(c) => region_emptiness(&Region::of(e, c)),
            NormalAxiom::Bot2(c, d) => region_disjointness(&Region::of(e, c), &Region::of(e, d)),
            NormalAxiom::Bot4(_, c) => region_emptiness(&Region::of(e, c)),
        };
        axioms.push(AxiomCheck {
            axiom: t.format(&ax),
            form: ax.tag(),
            violation,
            satisfied: informational || violation <= tol,
            informational,
        });
    }
    let overall = axioms.iter().all(|a| a.satisfied);
    let max_violation = axioms
        .iter()
        .filter(|a| !a.informational)
        .map(|a| a.violation)
        .fold(0.0, f64::max);
    Ok(ModelReport {
        overall,
        tolerance: tol,
        nf2_criterion: nf2,
        max_violation,
        axioms,
    })
}
