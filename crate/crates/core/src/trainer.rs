//! Minibatch training of an [`EmbeddingSet`] with Adam.
//!
//! Each step draws `batch_size` tuples with replacement from every non-empty
//! bucket (the seven normal-form buckets plus corrupted NF3 negatives), takes
//! one Adam step on the summed loss, then clamps radii to `r >= 0` and
//! restores the fixed `Top`/`Bot` rows.

use std::collections::HashSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingSet, GradientSet};
use crate::error::{Error, Result};
use crate::losses::{self, LossBatch, BUCKETS};
use crate::normalizer::NormalizedTheory;
use crate::ontology::{ClassId, RelationId};

/// Whether corrupted NF3 tuples are drawn once up front or every epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum NegMode {
    #[default]
    Static,
    Fresh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub dim: usize,
    pub margin: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub negatives_per_positive: usize,
    pub steps_per_epoch: usize,
    pub neg_mode: NegMode,
    /// Record the loss over the whole theory every this many epochs.
    pub eval_every: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 50,
            margin: -0.1,
            epochs: 1000,
            batch_size: 256,
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            negatives_per_positive: 1,
            steps_per_epoch: 1,
            neg_mode: NegMode::Static,
            eval_every: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.dim == 0 {
            return bad("dim must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        if self.steps_per_epoch == 0 {
            return bad("steps per epoch must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be a positive number");
        }
        if !self.margin.is_finite() {
            return bad("margin must be finite");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("adam betas must lie in [0, 1)");
        }
        if self.eval_every == Some(0) {
            return bad("eval interval must be positive");
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamParams {
        AdamParams {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

/// One bias-corrected Adam update of `params` in place. `step` starts at 1.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    step: u64,
    hp: &AdamParams,
) {
    debug_assert!(step >= 1);
    let bc1 = 1.0 - hp.beta1.powf(step as f64);
    let bc2 = 1.0 - hp.beta2.powf(step as f64);
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = hp.beta1 * m[i] + (1.0 - hp.beta1) * g;
        v[i] = hp.beta2 * v[i] + (1.0 - hp.beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        params[i] -= hp.learning_rate * m_hat / (v_hat.sqrt() + hp.epsilon);
    }
}

/// First and second moments for every trainable scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    m: [Vec<f64>; 3],
    v: [Vec<f64>; 3],
}

impl AdamState {
    pub fn new(e: &EmbeddingSet) -> Self {
        let shapes = [e.centers.len(), e.radii.len(), e.relations.len()];
        AdamState {
            step: 0,
            m: shapes.map(|n| vec![0.0; n]),
            v: shapes.map(|n| vec![0.0; n]),
        }
    }

    pub fn update(&mut self, e: &mut EmbeddingSet, g: &GradientSet, hp: &AdamParams) {
        self.step += 1;
        let [mc, mr, mv] = &mut self.m;
        let [vc, vr, vv] = &mut self.v;
        adam_step(&mut e.centers, &g.centers, mc, vc, self.step, hp);
        adam_step(&mut e.radii, &g.radii, mr, vr, self.step, hp);
        adam_step(&mut e.relations, &g.relations, mv, vv, self.step, hp);
    }
}

/// Embedding with every class and relation of `t` drawn from uniform(0, 1).
pub fn init_embeddings(t: &NormalizedTheory, cfg: &TrainConfig) -> EmbeddingSet {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    init_embeddings_with(t, cfg.dim, &mut rng)
}

fn init_embeddings_with<R: Rng>(t: &NormalizedTheory, dim: usize, rng: &mut R) -> EmbeddingSet {
    let mut e = EmbeddingSet::for_theory(t, dim);
    e.randomize(rng);
    e
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Negatives {
    pub tuples: Vec<(ClassId, RelationId, ClassId)>,
    /// Positives for which no unasserted corruption was found.
    pub skipped: usize,
}

/// Attempts per corrupted tuple before its positive is given up on.
pub const NEGATIVE_RETRIES: usize = 64;

/// Draws `k` corruptions of each `C ⊑ ∃R.D` by swapping `C` or `D` (fair
/// coin) for a candidate class, rejecting corruptions that are asserted.
pub fn generate_negatives<R: Rng>(
    nf3: &[(ClassId, RelationId, ClassId)],
    candidates: &[ClassId],
    k: usize,
    rng: &mut R,
) -> Result<Negatives> {
    let mut out = Negatives::default();
    if k == 0 || nf3.is_empty() {
        return Ok(out);
    }
    if candidates.is_empty() {
        return Err(Error::Empty("corruption candidate list"));
    }
    let asserted: HashSet<_> = nf3.iter().copied().collect();
    'positives: for &(c, r, d) in nf3 {
        for _ in 0..k {
            let mut found = None;
            for _ in 0..NEGATIVE_RETRIES {
                let swap = candidates[rng.gen_range(0..candidates.len())];
                let t = if rng.gen::<bool>() { (swap, r, d) } else { (c, r, swap) };
                if !asserted.contains(&t) {
                    found = Some(t);
                    break;
                }
            }
            match found {
                Some(t) => out.tuples.push(t),
                None => {
                    out.skipped += 1;
                    continue 'positives;
                }
            }
        }
    }
    if out.skipped > 0 {
        log::warn!(
            "no unasserted corruption found for {} of {} NF3 axioms",
            out.skipped,
            nf3.len()
        );
    }
    Ok(out)
}

/// Classes occurring in NF3 axioms, excluding `Top` and `Bot`.
pub fn corruption_candidates(t: &NormalizedTheory) -> Vec<ClassId> {
    let mut seen: Vec<ClassId> = t
        .nf3
        .iter()
        .flat_map(|&(c, _, d)| [c, d])
        .filter(|&c| c != ClassId::TOP && c != ClassId::BOT)
        .collect();
    seen.sort_unstable();
    seen.dedup();
    seen
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTrace {
    /// Mean minibatch loss per epoch.
    pub minibatch: Vec<f64>,
    /// `(epoch, loss over the full theory)` at the configured interval.
    pub full: Vec<(usize, f64)>,
    pub negatives_skipped: usize,
}

fn sample<T: Copy, R: Rng>(bucket: &[T], n: usize, rng: &mut R) -> Vec<T> {
    if bucket.is_empty() {
        return Vec::new();
    }
    (0..n).map(|_| bucket[rng.gen_range(0..bucket.len())]).collect()
}

fn sample_batch<R: Rng>(
    t: &NormalizedTheory,
    neg: &[(ClassId, RelationId, ClassId)],
    cfg: &TrainConfig,
    rng: &mut R,
) -> LossBatch {
    let bs = cfg.batch_size;
    LossBatch {
        margin: cfg.margin,
        nf1: sample(&t.nf1, bs, rng),
        nf2: sample(&t.nf2, bs, rng),
        nf3: sample(&t.nf3, bs, rng),
        nf4: sample(&t.nf4, bs, rng),
        bot1: sample(&t.bot1, bs, rng),
        bot2: sample(&t.bot2, bs, rng),
        bot4: sample(&t.bot4, bs, rng),
        neg: sample(neg, bs, rng),
    }
}

/// Loss of every axiom in `t` (no negatives) under `e`.
pub fn full_loss(t: &NormalizedTheory, e: &EmbeddingSet, margin: f64) -> Result<f64> {
    losses::batch_loss(&LossBatch::from_theory(t, margin), e)
}

pub fn train(t: &NormalizedTheory, cfg: &TrainConfig) -> Result<(EmbeddingSet, LossTrace)> {
    train_with_callback(t, cfg, |_, _| {})
}

/// [`train`], calling `on_epoch(epoch, mean_loss)` after every epoch.
pub fn train_with_callback<F>(
    t: &NormalizedTheory,
    cfg: &TrainConfig,
    mut on_epoch: F,
) -> Result<(EmbeddingSet, LossTrace)>
where
    F: FnMut(usize, f64),
{
    cfg.validate()?;
    if t.is_empty() {
        return Err(Error::EmptyTheory);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut e = init_embeddings_with(t, cfg.dim, &mut rng);
    let mut trace = LossTrace::default();
    if cfg.epochs == 0 {
        return Ok((e, trace));
    }

    let candidates = corruption_candidates(t);
    let k = cfg.negatives_per_positive;
    let mut negatives = generate_negatives(&t.nf3, &candidates, k, &mut rng)?;
    trace.negatives_skipped = negatives.skipped;

    let hp = cfg.adam();
    let mut adam = AdamState::new(&e);
    for epoch in 0..cfg.epochs {
        if cfg.neg_mode == NegMode::Fresh && epoch > 0 {
            negatives = generate_negatives(&t.nf3, &candidates, k, &mut rng)?;
            trace.negatives_skipped += negatives.skipped;
        }
        let mut epoch_loss = 0.0;
        for _ in 0..cfg.steps_per_epoch {
            let batch = sample_batch(t, &negatives.tuples, cfg, &mut rng);
            let (buckets, grad) = losses::batch_loss_and_gradient(&batch, &e)?;
            for (i, l) in buckets.iter().enumerate() {
                if !l.is_finite() {
                    return Err(Error::NonFiniteLoss { bucket: BUCKETS[i] });
                }
            }
            let step_loss: f64 = buckets.iter().sum();
            if !step_loss.is_finite() {
                return Err(Error::NonFiniteLoss { bucket: "total" });
            }
            epoch_loss += step_loss;
            adam.update(&mut e, &grad, &hp);
            e.clamp_radii();
            e.reset_frozen();
        }
        let mean = epoch_loss / cfg.steps_per_epoch as f64;
        trace.minibatch.push(mean);
        if let Some(every) = cfg.eval_every {
            if (epoch + 1) % every == 0 {
                trace.full.push((epoch + 1, full_loss(t, &e, cfg.margin)?));
            }
        }
        on_epoch(epoch, mean);
    }
    Ok((e, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normalizer::normalize_ontology;
    use crate::ontology::Ontology;

    fn family() -> NormalizedTheory {
        normalize_ontology(&Ontology::parse(crate::FAMILY_KB).unwrap()).unwrap()
    }

    fn hp() -> AdamParams {
        AdamParams {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    #[test]
    fn adam_first_step() {
        let (mut p, mut m, mut v) = ([0.5], [0.0], [0.0]);
        adam_step(&mut p, &[1.0], &mut m, &mut v, 1, &hp());
        assert!((p[0] - 0.49).abs() < 1e-9, "{}", p[0]);
    }

    #[test]
    fn adam_zero_gradient_only_decays_moments() {
        let (mut p, mut m, mut v) = ([0.5, -2.0], [0.0, 0.0], [0.0, 0.0]);
        adam_step(&mut p, &[0.0, 0.0], &mut m, &mut v, 1, &hp());
        assert_eq!(p, [0.5, -2.0]);
        let (mut p, mut m, mut v) = ([0.5], [0.2], [0.1]);
        adam_step(&mut p, &[0.0], &mut m, &mut v, 3, &hp());
        assert!((m[0] - 0.18).abs() < 1e-15);
        assert!((v[0] - 0.0999).abs() < 1e-15);
    }

    #[test]
    fn adam_constant_gradient_moves_monotonically() {
        let (mut p, mut m, mut v) = ([0.5], [0.0], [0.0]);
        let mut last = p[0];
        for step in 1..=2 {
            adam_step(&mut p, &[2.0], &mut m, &mut v, step, &hp());
            assert!(p[0] < last);
            last = p[0];
        }
    }

    #[test]
    fn init_is_deterministic_and_covers_family() {
        let t = family();
        let cfg = TrainConfig { dim: 2, seed: 7, ..Default::default() };
        let a = init_embeddings(&t, &cfg);
        assert_eq!(a, init_embeddings(&t, &cfg));
        // six named classes plus Top, plus the frozen Bot row
        assert_eq!(t.embeddable_classes().count(), 7);
        assert_eq!(a.num_classes(), 8);
        assert_eq!(a.num_relations(), 1);
        for c in t.embeddable_classes().filter(|&c| c != ClassId::TOP) {
            assert!((0.0..1.0).contains(&a.radius(c)));
        }
    }

    fn three_class_nf3(text: &str) -> NormalizedTheory {
        normalize_ontology(&Ontology::parse(text).unwrap()).unwrap()
    }

    #[test]
    fn negatives_zero_k() {
        let t = three_class_nf3("A < r some B");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = generate_negatives(&t.nf3, &corruption_candidates(&t), 0, &mut rng).unwrap();
        assert!(n.tuples.is_empty());
    }

    #[test]
    fn negatives_differ_in_one_slot() {
        let t = three_class_nf3("A < r some B\nC < Top");
        let cands: Vec<ClassId> = ["A", "B", "C"].iter().map(|n| t.class_id(n).unwrap()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = generate_negatives(&t.nf3, &cands, 20, &mut rng).unwrap();
        assert_eq!(n.tuples.len(), 20);
        let (c, r, d) = t.nf3[0];
        for &(c2, r2, d2) in &n.tuples {
            assert_eq!(r2, r);
            assert_eq!((c2 != c) as u8 + (d2 != d) as u8, 1);
        }
    }

    #[test]
    fn complete_graph_skips_positives() {
        let mut text = String::new();
        for a in ["A", "B", "C"] {
            for b in ["A", "B", "C"] {
                text.push_str(&format!("{a} < r some {b}\n"));
            }
        }
        let t = three_class_nf3(&text);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = generate_negatives(&t.nf3, &corruption_candidates(&t), 2, &mut rng).unwrap();
        assert!(n.tuples.is_empty());
        assert_eq!(n.skipped, 9);
    }

    #[test]
    fn zero_epochs_returns_initial_embedding() {
        let t = family();
        let cfg = TrainConfig { dim: 2, epochs: 0, seed: 3, ..Default::default() };
        let (e, trace) = train(&t, &cfg).unwrap();
        assert_eq!(e, init_embeddings(&t, &cfg));
        assert!(trace.minibatch.is_empty());
    }

    #[test]
    fn training_keeps_invariants() {
        let t = family();
        let cfg = TrainConfig {
            dim: 2,
            margin: 0.0,
            epochs: 50,
            batch_size: 8,
            seed: 11,
            ..Default::default()
        };
        let (e, trace) = train(&t, &cfg).unwrap();
        assert_eq!(trace.minibatch.len(), 50);
        assert!(e.radii.iter().all(|&r| r >= 0.0));
        assert_eq!(e.radius(ClassId::TOP), crate::TOP_RADIUS);
        assert_eq!(e.center(ClassId::TOP), &[1.0, 0.0]);
    }

    #[test]
    fn fresh_negatives_are_never_asserted() {
        let t = three_class_nf3("A < r some B\nB < r some C\nC < r some A\nD < Top");
        let cfg = TrainConfig {
            dim: 3,
            epochs: 5,
            batch_size: 4,
            neg_mode: NegMode::Fresh,
            negatives_per_positive: 3,
            ..Default::default()
        };
        train(&t, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let asserted: HashSet<_> = t.nf3.iter().copied().collect();
        for _ in 0..20 {
            let n = generate_negatives(&t.nf3, &corruption_candidates(&t), 3, &mut rng).unwrap();
            assert!(n.tuples.iter().all(|x| !asserted.contains(x)));
        }
    }

    #[test]
    fn empty_theory_and_bad_config_are_rejected() {
        let t = three_class_nf3("");
        assert!(matches!(train(&t, &TrainConfig::default()), Err(Error::EmptyTheory)));
        let cfg = TrainConfig { batch_size: 0, ..Default::default() };
        assert!(matches!(train(&family(), &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn non_finite_loss_names_the_bucket() {
        // Top ⊓ Top ⊑ ⊥ twice in one batch overflows the sentinel radius.
        let t = three_class_nf3("Top and Top < Bot");
        let cfg = TrainConfig { dim: 2, epochs: 1, batch_size: 4, ..Default::default() };
        match train(&t, &cfg) {
            Err(Error::NonFiniteLoss { bucket }) => assert_eq!(bucket, "bot2"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
