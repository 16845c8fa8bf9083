//! Random feature models for property tests and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::{CrossKind, CrossTreeConstraint, FeatureId, FeatureModel, ModelDraft};
use crate::rational::from_int;

/// Shape limits for [`random_model`].
#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub min_features: usize,
    pub max_features: usize,
    pub max_groups: usize,
    pub max_requires: usize,
    pub max_mutex: usize,
    /// Costs are drawn from `0..=max_cost`.
    pub max_cost: i64,
}

impl Default for Shape {
    fn default() -> Self {
        Shape { min_features: 4, max_features: 12, max_groups: 2, max_requires: 3, max_mutex: 2, max_cost: 9 }
    }
}

fn name(i: usize) -> String {
    if i == 0 {
        "R".to_owned()
    } else {
        format!("F{i}")
    }
}

fn id(i: usize) -> FeatureId {
    FeatureId::new(name(i)).expect("generated ids are tokens")
}

/// A random valid model. Cross-tree constraints are unconstrained, so the
/// model may be unsatisfiable or contain redundant constraints.
pub fn random_model<R: Rng + ?Sized>(rng: &mut R, shape: &Shape) -> FeatureModel {
    let n = rng.gen_range(shape.min_features..=shape.max_features);
    let groups_wanted = rng.gen_range(0..=shape.max_groups);
    let mut draft = ModelDraft::new("random", "R");
    let mut groups = 0;
    let mut i = 1;
    while i < n {
        let remaining = n - i;
        let group_now = groups < groups_wanted && remaining >= 2 && rng.gen_bool(0.4);
        let parent = name(rng.gen_range(0..i));
        if group_now {
            let size = rng.gen_range(2..=remaining.min(4));
            let card_min = rng.gen_range(1..=size as u32);
            let card_max = rng.gen_range(card_min..=size as u32);
            let members: Vec<String> = (i..i + size).map(name).collect();
            let refs: Vec<&str> = members.iter().map(String::as_str).collect();
            groups += 1;
            draft = draft.group(&parent, &format!("g{groups}"), card_min, card_max, &refs);
            i += size;
        } else {
            draft =
                if rng.gen_bool(0.4) { draft.mandatory(&parent, &name(i)) } else { draft.optional(&parent, &name(i)) };
            i += 1;
        }
    }
    let pair = |rng: &mut R| {
        let a = rng.gen_range(0..n);
        let mut b = rng.gen_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        (a, b)
    };
    for _ in 0..rng.gen_range(0..=shape.max_requires) {
        let (a, b) = pair(rng);
        draft = draft.requires(&name(a), &name(b));
    }
    for _ in 0..rng.gen_range(0..=shape.max_mutex) {
        let (a, b) = pair(rng);
        draft = draft.mutex(&name(a), &name(b));
    }
    for f in 0..n {
        if rng.gen_bool(0.9) {
            draft = draft.attr("cost", &name(f), from_int(rng.gen_range(0..=shape.max_cost)));
        }
    }
    draft.build().expect("generated models are structurally valid")
}

/// A satisfiable model of `features` features with decomposition depth at
/// most `depth`, `groups` groups of three members and `cross` cross-tree
/// constraints. Requires and mutex constraints only start at features below
/// an optional edge, so deselecting every optional subtree stays valid.
pub fn scalable_model<R: Rng + ?Sized>(
    rng: &mut R,
    features: usize,
    depth: usize,
    groups: usize,
    cross: usize,
) -> FeatureModel {
    assert!(features > 3 * groups, "not enough features for the groups");
    let mut draft = ModelDraft::new("scalable", "R");
    let mut level = vec![0usize];
    let mut optional = Vec::new();
    let mut group_slots: Vec<usize> = (0..groups).collect();
    group_slots.shuffle(rng);
    let groups_every = (features - 1) / groups.max(1);
    let mut made = 0;
    let mut i = 1;
    while i < features {
        let candidates: Vec<usize> = (0..i).filter(|&p| level[p] < depth).collect();
        let parent = *candidates.choose(rng).expect("root has depth 0");
        let room = features - i;
        if made < groups && room >= 3 && (i >= made * groups_every || room <= 3 * (groups - made)) {
            made += 1;
            let members = [name(i), name(i + 1), name(i + 2)];
            let refs: Vec<&str> = members.iter().map(String::as_str).collect();
            let card_min = rng.gen_range(1..=2);
            let card_max = rng.gen_range(card_min..=3);
            draft = draft.group(&name(parent), &format!("g{made}"), card_min, card_max, &refs);
            level.extend([level[parent] + 1; 3]);
            i += 3;
        } else {
            if rng.gen_bool(0.3) {
                draft = draft.mandatory(&name(parent), &name(i));
            } else {
                draft = draft.optional(&name(parent), &name(i));
                optional.push(i);
            }
            level.push(level[parent] + 1);
            i += 1;
        }
    }
    let mut constraints: Vec<CrossTreeConstraint> = Vec::new();
    while constraints.len() < cross && optional.len() >= 2 {
        let a = *optional.choose(rng).expect("non-empty");
        let (kind, b) = if rng.gen_bool(0.5) {
            (CrossKind::Requires, rng.gen_range(0..features))
        } else {
            (CrossKind::Mutex, *optional.choose(rng).expect("non-empty"))
        };
        if a == b {
            continue;
        }
        constraints.push(CrossTreeConstraint { kind, a: id(a), b: id(b) });
    }
    for c in constraints {
        draft = match c.kind {
            CrossKind::Requires => draft.requires(c.a.as_str(), c.b.as_str()),
            CrossKind::Mutex => draft.mutex(c.a.as_str(), c.b.as_str()),
        };
    }
    for f in 0..features {
        draft = draft.attr("cost", &name(f), from_int(rng.gen_range(0..=9)));
    }
    draft.build().expect("generated models are structurally valid")
}
