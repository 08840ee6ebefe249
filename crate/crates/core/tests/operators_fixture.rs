use dwsc_core::operators::{crossover, crossover_cut, lcs};
use dwsc_core::testing::{bundle, concept, service};
use dwsc_core::{EvalOptions, Genome, ProblemInstance, ServiceId};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// S1 -> S2 spans distance 0.9; S2 -> S3 spans 0.1. S4 only sets the scale.
fn line() -> ProblemInstance {
    bundle(
        ["a", "b", "c", "d"].iter().map(|c| concept(c, None)).collect(),
        vec![
            service("S1", &["a"], &["b"], 0.1, 0.1, (0.0, 0.0)),
            service("S2", &["b"], &["c"], 0.1, 0.1, (9.0, 0.0)),
            service("S3", &["c"], &["d"], 0.1, 0.1, (9.0, 1.0)),
            service("S4", &["c"], &["d"], 0.1, 0.1, (10.0, 0.0)),
        ],
        &["a"],
        &["d"],
    )
    .to_instance(EvalOptions::default())
    .unwrap()
}

fn ids(inst: &ProblemInstance, names: &[&str]) -> Vec<ServiceId> {
    names.iter().map(|n| inst.service_id(n).unwrap()).collect()
}

#[test]
fn cut_follows_the_longest_link_outside_the_common_span() {
    let inst = line();
    let p1 = Genome::decode(&ids(&inst, &["S1", "S2", "S3"]), &inst).unwrap();
    let p2 = Genome::decode(&ids(&inst, &["S2", "S3", "S1"]), &inst).unwrap();
    assert!((inst.distance(p1.sequence()[0], p1.sequence()[1]) - 0.9).abs() < 1e-12);
    let common = lcs(p1.sequence(), p2.sequence());
    assert_eq!(common, ids(&inst, &["S2", "S3"]));
    assert_eq!(crossover_cut(&p1, &common, &inst), 0);
    assert_eq!(crossover_cut(&p2, &common, &inst), 2);
}

#[test]
fn cut_inside_the_common_span_falls_back() {
    let inst = line();
    let p = Genome::decode(&ids(&inst, &["S1", "S2", "S3"]), &inst).unwrap();
    // Whole parent is common: every link lies inside the span.
    let common = p.sequence().to_vec();
    assert_eq!(crossover_cut(&p, &common, &inst), 2);
}

#[test]
fn children_are_valid_compositions() {
    let inst = line();
    let p1 = Genome::decode(&ids(&inst, &["S1", "S2", "S3"]), &inst).unwrap();
    let p2 = Genome::decode(&ids(&inst, &["S4", "S2", "S1"]), &inst).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (c1, c2) = crossover(&p1, &p2, &inst, &mut rng);
    for c in [c1, c2] {
        assert!(c.dag().unwrap().validate(&inst).is_ok());
    }
}
