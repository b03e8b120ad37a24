//! ABox elimination and rewriting into the EL++ normal forms.
//!
//! Output axioms take one of the shapes
//!
//! | form  | axiom          |
//! |-------|----------------|
//! | NF1   | C ⊑ D          |
//! | NF2   | C ⊓ D ⊑ E      |
//! | NF3   | C ⊑ ∃R.D       |
//! | NF4   | ∃R.C ⊑ D       |
//! | Bot1  | C ⊑ ⊥          |
//! | Bot2  | C ⊓ D ⊑ ⊥      |
//! | Bot4  | ∃R.C ⊑ ⊥       |
//!
//! where every argument is a class name. Individuals become singleton
//! classes named `{a}`; auxiliary classes are named `N#<k>`.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::ontology::{Axiom, ClassId, Concept, Interner, Ontology, RelationId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormalAxiom {
    Nf1(ClassId, ClassId),
    Nf2(ClassId, ClassId, ClassId),
    Nf3(ClassId, RelationId, ClassId),
    Nf4(RelationId, ClassId, ClassId),
    Bot1(ClassId),
    Bot2(ClassId, ClassId),
    Bot4(RelationId, ClassId),
}

impl NormalAxiom {
    pub fn tag(&self) -> NormalFormTag {
        match self {
            NormalAxiom::Nf1(..) => NormalFormTag::Nf1,
            NormalAxiom::Nf2(..) => NormalFormTag::Nf2,
            NormalAxiom::Nf3(..) => NormalFormTag::Nf3,
            NormalAxiom::Nf4(..) => NormalFormTag::Nf4,
            NormalAxiom::Bot1(..) => NormalFormTag::Bot1,
            NormalAxiom::Bot2(..) => NormalFormTag::Bot2,
            NormalAxiom::Bot4(..) => NormalFormTag::Bot4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum NormalFormTag {
    #[serde(rename = "NF1")]
    Nf1,
    #[serde(rename = "NF2")]
    Nf2,
    #[serde(rename = "NF3")]
    Nf3,
    #[serde(rename = "NF4")]
    Nf4,
    #[serde(rename = "BOT1")]
    Bot1,
    #[serde(rename = "BOT2")]
    Bot2,
    #[serde(rename = "BOT4")]
    Bot4,
}

impl NormalFormTag {
    pub const ALL: [NormalFormTag; 7] = [
        NormalFormTag::Nf1,
        NormalFormTag::Nf2,
        NormalFormTag::Nf3,
        NormalFormTag::Nf4,
        NormalFormTag::Bot1,
        NormalFormTag::Bot2,
        NormalFormTag::Bot4,
    ];

    pub fn label(self) -> &'static str {
        match self {
            NormalFormTag::Nf1 => "NF1",
            NormalFormTag::Nf2 => "NF2",
            NormalFormTag::Nf3 => "NF3",
            NormalFormTag::Nf4 => "NF4",
            NormalFormTag::Bot1 => "BOT1",
            NormalFormTag::Bot2 => "BOT2",
            NormalFormTag::Bot4 => "BOT4",
        }
    }
}

/// Result of [`classify_axiom`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Normal(NormalFormTag),
    NotNormal,
}

/// Axioms bucketed by normal form, over an augmented class vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedTheory {
    pub classes: Interner,
    pub relations: Interner,
    pub nf1: Vec<(ClassId, ClassId)>,
    pub nf2: Vec<(ClassId, ClassId, ClassId)>,
    pub nf3: Vec<(ClassId, RelationId, ClassId)>,
    pub nf4: Vec<(RelationId, ClassId, ClassId)>,
    pub bot1: Vec<ClassId>,
    pub bot2: Vec<(ClassId, ClassId)>,
    pub bot4: Vec<(RelationId, ClassId)>,
    /// Auxiliary classes introduced by the rewrite, in creation order.
    pub fresh: Vec<ClassId>,
    /// Singleton classes standing in for individuals.
    pub nominals: Vec<ClassId>,
    seen: HashSet<NormalAxiom>,
}

impl NormalizedTheory {
    fn with_vocabulary(classes: Interner, relations: Interner) -> Self {
        NormalizedTheory {
            classes,
            relations,
            nf1: Vec::new(),
            nf2: Vec::new(),
            nf3: Vec::new(),
            nf4: Vec::new(),
            bot1: Vec::new(),
            bot2: Vec::new(),
            bot4: Vec::new(),
            fresh: Vec::new(),
            nominals: Vec::new(),
            seen: HashSet::new(),
        }
    }

    /// Adds an axiom unless an identical one is already present.
    pub fn push(&mut self, ax: NormalAxiom) -> bool {
        if !self.seen.insert(ax) {
            return false;
        }
        match ax {
            NormalAxiom::Nf1(c, d) => self.nf1.push((c, d)),
            NormalAxiom::Nf2(c, d, e) => self.nf2.push((c, d, e)),
            NormalAxiom::Nf3(c, r, d) => self.nf3.push((c, r, d)),
            NormalAxiom::Nf4(r, c, d) => self.nf4.push((r, c, d)),
            NormalAxiom::Bot1(c) => self.bot1.push(c),
            NormalAxiom::Bot2(c, d) => self.bot2.push((c, d)),
            NormalAxiom::Bot4(r, c) => self.bot4.push((r, c)),
        }
        true
    }

    pub fn class_name(&self, id: ClassId) -> &str {
        self.classes.name(id.0)
    }

    pub fn relation_name(&self, id: RelationId) -> &str {
        self.relations.name(id.0)
    }

    pub fn class_id(&self, name: &str) -> Option<ClassId> {
        self.classes.get(name).map(ClassId)
    }

    pub fn relation_id(&self, name: &str) -> Option<RelationId> {
        self.relations.get(name).map(RelationId)
    }

    pub fn len(&self) -> usize {
        self.nf1.len()
            + self.nf2.len()
            + self.nf3.len()
            + self.nf4.len()
            + self.bot1.len()
            + self.bot2.len()
            + self.bot4.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bucket_len(&self, tag: NormalFormTag) -> usize {
        match tag {
            NormalFormTag::Nf1 => self.nf1.len(),
            NormalFormTag::Nf2 => self.nf2.len(),
            NormalFormTag::Nf3 => self.nf3.len(),
            NormalFormTag::Nf4 => self.nf4.len(),
            NormalFormTag::Bot1 => self.bot1.len(),
            NormalFormTag::Bot2 => self.bot2.len(),
            NormalFormTag::Bot4 => self.bot4.len(),
        }
    }

    /// All axioms, bucket by bucket in `NormalFormTag::ALL` order.
    pub fn axioms(&self) -> Vec<NormalAxiom> {
        let mut out = Vec::with_capacity(self.len());
        out.extend(self.nf1.iter().map(|&(c, d)| NormalAxiom::Nf1(c, d)));
        out.extend(self.nf2.iter().map(|&(c, d, e)| NormalAxiom::Nf2(c, d, e)));
        out.extend(self.nf3.iter().map(|&(c, r, d)| NormalAxiom::Nf3(c, r, d)));
        out.extend(self.nf4.iter().map(|&(r, c, d)| NormalAxiom::Nf4(r, c, d)));
        out.extend(self.bot1.iter().map(|&c| NormalAxiom::Bot1(c)));
        out.extend(self.bot2.iter().map(|&(c, d)| NormalAxiom::Bot2(c, d)));
        out.extend(self.bot4.iter().map(|&(r, c)| NormalAxiom::Bot4(r, c)));
        out
    }

    pub fn format(&self, ax: &NormalAxiom) -> String {
        let c = |id: ClassId| self.class_name(id);
        let r = |id: RelationId| self.relation_name(id);
        match *ax {
            NormalAxiom::Nf1(a, b) => format!("{} < {}", c(a), c(b)),
            NormalAxiom::Nf2(a, b, e) => format!("{} and {} < {}", c(a), c(b), c(e)),
            NormalAxiom::Nf3(a, rel, b) => format!("{} < {} some {}", c(a), r(rel), c(b)),
            NormalAxiom::Nf4(rel, a, b) => format!("{} some {} < {}", r(rel), c(a), c(b)),
            NormalAxiom::Bot1(a) => format!("{} < Bot", c(a)),
            NormalAxiom::Bot2(a, b) => format!("{} and {} < Bot", c(a), c(b)),
            NormalAxiom::Bot4(rel, a) => format!("{} some {} < Bot", r(rel), c(a)),
        }
    }

    /// Text form with one `# NF1`-style header per bucket. Parses back with
    /// [`Ontology::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let all = self.axioms();
        for tag in NormalFormTag::ALL {
            let _ = writeln!(out, "# {}", tag.label());
            for ax in all.iter().filter(|a| a.tag() == tag) {
                out.push_str(&self.format(ax));
                out.push('\n');
            }
        }
        out
    }

    /// Classes other than `Bot`, in id order.
    pub fn embeddable_classes(&self) -> impl Iterator<Item = ClassId> + '_ {
        (0..self.classes.len() as u32)
            .map(ClassId)
            .filter(|&c| c != ClassId::BOT)
    }
}

/// Rewrites `r(a, b)` as `{a} ⊑ ∃r.{b}` and `C(a)` as `{a} ⊑ C`.
pub fn eliminate_abox(o: &Ontology) -> Ontology {
    let mut out = o.clone();
    out.axioms = o
        .axioms
        .iter()
        .map(|ax| match ax {
            Axiom::Gci(..) => ax.clone(),
            Axiom::Instantiation(c, a) => Axiom::Gci(Concept::Nominal(*a), c.clone()),
            Axiom::RoleAssertion(r, a, b) => Axiom::Gci(
                Concept::Nominal(*a),
                Concept::some(*r, Concept::Nominal(*b)),
            ),
        })
        .collect();
    out
}

/// Which normal form `a` already has, if any.
pub fn classify_axiom(a: &Axiom) -> Classification {
    use Classification::*;
    let Axiom::Gci(sub, sup) = a else {
        return NotNormal;
    };
    let named = |c: &Concept| c.is_basic() && !matches!(c, Concept::Bot);
    let tag = match (sub, sup) {
        (l, Concept::Bot) if named(l) => NormalFormTag::Bot1,
        (l, r) if named(l) && named(r) => NormalFormTag::Nf1,
        (Concept::Conjunction(a, b), r) if named(a) && named(b) => match r {
            Concept::Bot => NormalFormTag::Bot2,
            r if named(r) => NormalFormTag::Nf2,
            _ => return NotNormal,
        },
        (l, Concept::Existential(_, f)) if named(l) && named(f) => NormalFormTag::Nf3,
        (Concept::Existential(_, f), r) if named(f) => match r {
            Concept::Bot => NormalFormTag::Bot4,
            r if named(r) => NormalFormTag::Nf4,
            _ => return NotNormal,
        },
        _ => return NotNormal,
    };
    Normal(tag)
}

/// Normalizes a TBox. Fails on ABox axioms and on `C ⊑ ∃R.⊥`.
pub fn normalize(o: &Ontology) -> Result<NormalizedTheory> {
    let mut n = Normalizer::new(o);
    for ax in &o.axioms {
        match ax {
            Axiom::Gci(l, r) => n.gci(l, r).map_err(|reason| Error::Unsupported {
                axiom: o.format_axiom(ax),
                reason,
            })?,
            _ => return Err(Error::AboxPresent(o.format_axiom(ax))),
        }
    }
    Ok(n.theory)
}

/// Convenience: ABox elimination followed by normalization.
pub fn normalize_ontology(o: &Ontology) -> Result<NormalizedTheory> {
    normalize(&eliminate_abox(o))
}

pub const FRESH_PREFIX: &str = "N#";

struct Normalizer<'o> {
    onto: &'o Ontology,
    theory: NormalizedTheory,
    next_fresh: usize,
    shared: HashMap<Concept, ClassId>,
    nominal_classes: HashMap<u32, ClassId>,
}

fn is_bottom(c: &Concept) -> bool {
    match c {
        Concept::Bot => true,
        Concept::Conjunction(a, b) => is_bottom(a) || is_bottom(b),
        Concept::Existential(_, f) => is_bottom(f),
        _ => false,
    }
}

impl<'o> Normalizer<'o> {
    fn new(onto: &'o Ontology) -> Self {
        Normalizer {
            onto,
            theory: NormalizedTheory::with_vocabulary(onto.classes.clone(), onto.relations.clone()),
            next_fresh: 0,
            shared: HashMap::new(),
            nominal_classes: HashMap::new(),
        }
    }

    fn class_of(&mut self, c: &Concept) -> ClassId {
        match c {
            Concept::Top => ClassId::TOP,
            Concept::Bot => ClassId::BOT,
            Concept::Atomic(id) => *id,
            Concept::Nominal(ind) => {
                if let Some(&id) = self.nominal_classes.get(&ind.0) {
                    return id;
                }
                let name = format!("{{{}}}", self.onto.individual_name(*ind));
                let id = ClassId(self.theory.classes.intern(&name));
                self.nominal_classes.insert(ind.0, id);
                self.theory.nominals.push(id);
                id
            }
            _ => unreachable!("class_of called on a complex concept"),
        }
    }

    /// Name standing for a complex concept; identical concepts share a name.
    fn fresh(&mut self, c: &Concept) -> Concept {
        if let Some(&id) = self.shared.get(c) {
            return Concept::Atomic(id);
        }
        let id = loop {
            let name = format!("{FRESH_PREFIX}{}", self.next_fresh);
            self.next_fresh += 1;
            if self.theory.classes.get(&name).is_none() {
                break ClassId(self.theory.classes.intern(&name));
            }
        };
        self.theory.fresh.push(id);
        self.shared.insert(c.clone(), id);
        Concept::Atomic(id)
    }

    fn emit(&mut self, ax: NormalAxiom) {
        self.theory.push(ax);
    }

    fn gci(&mut self, l: &Concept, r: &Concept) -> std::result::Result<(), String> {
        if is_bottom(l) {
            return Ok(());
        }
        if let Concept::Conjunction(r1, r2) = r {
            self.gci(l, r1)?;
            return self.gci(l, r2);
        }

        // Already normal.
        match (l, r) {
            (l, r) if l.is_basic() && r.is_basic() => {
                let c = self.class_of(l);
                let ax = if matches!(r, Concept::Bot) {
                    NormalAxiom::Bot1(c)
                } else {
                    NormalAxiom::Nf1(c, self.class_of(r))
                };
                self.emit(ax);
                return Ok(());
            }
            (Concept::Conjunction(a, b), r) if a.is_basic() && b.is_basic() && r.is_basic() => {
                let (a, b) = (self.class_of(a), self.class_of(b));
                let ax = if matches!(r, Concept::Bot) {
                    NormalAxiom::Bot2(a, b)
                } else {
                    NormalAxiom::Nf2(a, b, self.class_of(r))
                };
                self.emit(ax);
                return Ok(());
            }
            (l, Concept::Existential(rel, f)) if l.is_basic() && f.is_basic() => {
                if matches!(**f, Concept::Bot) {
                    return Err("an existential with filler Bot on the right has no normal form".into());
                }
                let (c, d) = (self.class_of(l), self.class_of(f));
                self.emit(NormalAxiom::Nf3(c, *rel, d));
                return Ok(());
            }
            (Concept::Existential(rel, f), r) if f.is_basic() && r.is_basic() => {
                let c = self.class_of(f);
                let ax = if matches!(r, Concept::Bot) {
                    NormalAxiom::Bot4(*rel, c)
                } else {
                    NormalAxiom::Nf4(*rel, c, self.class_of(r))
                };
                self.emit(ax);
                return Ok(());
            }
            _ => {}
        }

        // complex ⊑ complex
        if !l.is_basic() && !r.is_basic() {
            let a = self.fresh(l);
            self.gci(l, &a)?;
            return self.gci(&a, r);
        }
        // C ⊑ ∃r.D̂
        if let Concept::Existential(rel, f) = r {
            let a = self.fresh(f);
            self.gci(l, &Concept::some(*rel, a.clone()))?;
            return self.gci(&a, f);
        }
        match l {
            Concept::Conjunction(x, y) if !x.is_basic() => {
                let a = self.fresh(x);
                self.gci(x, &a)?;
                self.gci(&Concept::Conjunction(Box::new(a), y.clone()), r)
            }
            Concept::Conjunction(x, y) => {
                debug_assert!(!y.is_basic());
                let a = self.fresh(y);
                self.gci(y, &a)?;
                self.gci(&Concept::Conjunction(x.clone(), Box::new(a)), r)
            }
            Concept::Existential(rel, f) => {
                let a = self.fresh(f);
                self.gci(f, &a)?;
                self.gci(&Concept::some(*rel, a), r)
            }
            _ => unreachable!("basic left-hand sides are handled above"),
        }
    }
}
