use std::collections::BTreeSet;

use conflict_radar_core::detect::{detect, detect_with, DetectOptions};
use conflict_radar_core::distill::{consolidate, extract_changes, ChangeContext, IdentityMap};
use conflict_radar_core::model::{ChangeKind, ChangeSet, RevisionStamp, SemanticPath, Severity};
use conflict_radar_core::syntax::{parse_unit, ElementTree};
use conflict_radar_testkit::{brute_force_detect, mutate, random_instance, random_unit, rich_unit, seeded, span_violations, Shape, TestRng, UnitModel};
use proptest::prelude::*;

const PROJECT: &str = "Zoo";

fn parse(unit: &UnitModel) -> ElementTree {
    let src = unit.render();
    parse_unit(&src, &unit.file).unwrap_or_else(|e| panic!("{e:?}\n{src}"))
}

fn ctx(first_seq: u64) -> ChangeContext {
    ChangeContext { first_seq, ..ChangeContext::new(PROJECT, "alice", RevisionStamp(1)) }
}

fn diff(old: &ElementTree, new: &ElementTree, first_seq: u64) -> ChangeSet {
    extract_changes(old, new, &ctx(first_seq)).unwrap()
}

fn concat(a: &ChangeSet, b: &ChangeSet) -> ChangeSet {
    ChangeSet { changes: a.changes.iter().chain(&b.changes).cloned().collect(), ..a.clone() }
}

/// Kind, path and net values, ignoring spans and bookkeeping.
fn effects(set: &ChangeSet) -> BTreeSet<(ChangeKind, SemanticPath, Option<String>, Option<String>)> {
    set.changes.iter().map(|c| (c.kind, c.path.clone(), c.before(), c.after())).collect()
}

fn element_key(path: &SemanticPath) -> SemanticPath {
    if path.member.is_some() {
        path.member_path()
    } else {
        path.clone()
    }
}

/// True when two methods of one class share return type and body, which
/// makes rename pairing order-dependent.
fn has_lookalike_methods(tree: &ElementTree) -> bool {
    fn walk(classes: &[conflict_radar_core::syntax::ClassDecl]) -> bool {
        classes.iter().any(|c| {
            let sigs: Vec<_> = c.methods.iter().map(|m| (&m.return_type, m.body_fingerprint)).collect();
            sigs.iter().enumerate().any(|(i, s)| sigs[..i].contains(s)) || walk(&c.classes)
        })
    }
    walk(&tree.classes)
}

/// Applies mutations drawn from `pool`, each on an element no earlier
/// mutation touched.
fn burst(unit: &mut UnitModel, rng: &mut TestRng, pool: &[ChangeKind], picks: &[usize], touched: &mut Vec<SemanticPath>) {
    for &p in picks {
        let kind = pool[p % pool.len()];
        let mut candidate = unit.clone();
        let Some(m) = mutate(&mut candidate, kind, PROJECT, rng) else { continue };
        let keys = [element_key(&m.path), element_key(&m.new_path)];
        let clash = keys.iter().any(|k| touched.iter().any(|t| k.is_within(t) || t.is_within(k)));
        if !clash {
            *unit = candidate;
            touched.extend(keys);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn self_diff_is_empty(seed: u64) {
        let unit = random_unit(&mut seeded(seed), "Zebra.java", Shape::default());
        let tree = parse(&unit);
        prop_assert!(diff(&tree, &tree, 0).is_empty());
    }

    #[test]
    fn reformatting_keeps_the_tree(seed: u64) {
        let mut rng = seeded(seed);
        let unit = random_unit(&mut rng, "Zebra.java", Shape::default());
        let noisy = unit.render_noisy(&mut rng);
        let reformatted = parse_unit(&noisy, "Zebra.java").unwrap();
        prop_assert_eq!(reformatted.without_spans(), parse(&unit).without_spans());
        prop_assert!(diff(&parse(&unit), &reformatted, 0).is_empty());
    }

    #[test]
    fn spans_nest_inside_their_parents(seed: u64) {
        let mut rng = seeded(seed);
        let unit = random_unit(&mut rng, "Zebra.java", Shape::default());
        for src in [unit.render(), unit.render_noisy(&mut rng)] {
            let tree = parse_unit(&src, "Zebra.java").unwrap();
            let bad = span_violations(&tree, &src);
            prop_assert!(bad.is_empty(), "{:?}\n{}", bad, src);
        }
    }

    #[test]
    fn single_mutations_are_reported_exactly(seed: u64, k in 0..ChangeKind::ALL.len()) {
        let kind = ChangeKind::ALL[k];
        let mut rng = seeded(seed);
        let mut unit = rich_unit(&mut rng, "Zebra.java");
        let before = parse(&unit);
        let Some(m) = mutate(&mut unit, kind, PROJECT, &mut rng) else { return Ok(()) };
        let changes = diff(&before, &parse(&unit), 0);
        prop_assert_eq!(changes.len(), 1, "{:?}: {:#?}", kind, changes.changes);
        prop_assert_eq!(changes.changes[0].kind, kind);
        prop_assert_eq!(&changes.changes[0].path, &m.path);
    }

    #[test]
    fn consolidate_is_idempotent(seed: u64, picks in prop::collection::vec(0..15usize, 1..8)) {
        let mut rng = seeded(seed);
        let mut unit = rich_unit(&mut rng, "Zebra.java");
        let mut identity = IdentityMap::new();
        let mut all = ChangeSet::new("alice".into(), RevisionStamp(1));
        for p in picks {
            let before = parse(&unit);
            mutate(&mut unit, ChangeKind::ALL[p], PROJECT, &mut rng);
            let burst = diff(&before, &parse(&unit), all.len() as u64);
            all = concat(&all, &identity.canonicalize(&burst));
        }
        let once = consolidate(&all);
        prop_assert_eq!(consolidate(&once), once);
    }

    #[test]
    fn consolidation_composes_across_bursts(seed: u64, picks in prop::collection::vec(0..15usize, 2..8), split in 1..7usize) {
        let mut rng = seeded(seed);
        let mut unit = rich_unit(&mut rng, "Zebra.java");
        let mut identity = IdentityMap::new();
        let mut bursts = Vec::new();
        let mut seq = 0;
        for p in picks {
            let before = parse(&unit);
            mutate(&mut unit, ChangeKind::ALL[p], PROJECT, &mut rng);
            let burst = identity.canonicalize(&diff(&before, &parse(&unit), seq));
            seq += burst.len() as u64;
            bursts.push(burst);
        }
        let split = split.min(bursts.len());
        let fold = |sets: &[ChangeSet]| sets.iter().fold(ChangeSet::new("alice".into(), RevisionStamp(1)), |a, b| concat(&a, b));
        let whole = consolidate(&fold(&bursts));
        let stepwise = consolidate(&concat(&consolidate(&fold(&bursts[..split])), &consolidate(&fold(&bursts[split..]))));
        prop_assert_eq!(stepwise, whole);
    }

    #[test]
    fn sequential_bursts_match_one_combined_burst(seed: u64, pool_choice in 0..3usize, first in prop::collection::vec(0..15usize, 1..4), second in prop::collection::vec(0..15usize, 1..4)) {
        use ChangeKind::*;
        let excluded: &[ChangeKind] = match pool_choice {
            0 => &[ElementAdded, ElementRemoved],
            1 => &[MethodRenamed, FieldRenamed, ParamRenamed, ElementAdded],
            _ => &[MethodRenamed, FieldRenamed, ParamRenamed, ElementRemoved],
        };
        let pool: Vec<ChangeKind> = ChangeKind::ALL.iter().copied().filter(|k| !excluded.contains(k)).collect();
        let mut rng = seeded(seed);
        let mut unit = rich_unit(&mut rng, "Zebra.java");
        let t0 = parse(&unit);
        prop_assume!(!has_lookalike_methods(&t0));

        let mut touched = Vec::new();
        burst(&mut unit, &mut rng, &pool, &first, &mut touched);
        let t1 = parse(&unit);
        burst(&mut unit, &mut rng, &pool, &second, &mut touched);
        let t2 = parse(&unit);

        let mut identity = IdentityMap::new();
        let b1 = identity.canonicalize(&diff(&t0, &t1, 0));
        let b2 = identity.canonicalize(&diff(&t1, &t2, b1.len() as u64));
        let sequential = consolidate(&concat(&b1, &b2));
        let combined = consolidate(&diff(&t0, &t2, 0));
        prop_assert_eq!(effects(&sequential), effects(&combined));
    }

    #[test]
    fn detect_agrees_with_brute_force(seed: u64) {
        let inst = random_instance(&mut seeded(seed), 5, 50);
        for suppress in [false, true] {
            let fast = detect_with(&inst.local, &inst.remotes, &inst.aliases, DetectOptions { suppress_identical: suppress });
            let slow = brute_force_detect(&inst.local, &inst.remotes, &inst.aliases, suppress);
            prop_assert_eq!(&fast, &slow);
            prop_assert!(fast.iter().all(|r| r.is_consistent()));
        }
    }

    #[test]
    fn detect_boundary_cases(seed: u64) {
        let inst = random_instance(&mut seeded(seed), 5, 30);
        prop_assert!(detect(&inst.local, &[], &inst.aliases).is_empty());
        let empty = ChangeSet::new(inst.local.author.clone(), inst.local.base_revision);
        prop_assert!(detect(&empty, &inst.remotes, &inst.aliases).iter().all(|r| r.severity == Severity::Awareness));
    }
}
