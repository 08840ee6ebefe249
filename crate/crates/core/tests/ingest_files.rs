use std::path::PathBuf;

use dwsc_core::decoder::forward_feasible;
use dwsc_core::ingest::{augment_repository, parse_coordinates_csv, parse_wsc, AugmentationParams, CoordinateSource};
use dwsc_core::model::Weights;
use dwsc_core::{DwscError, EvalOptions, InstanceBundle, MatchMode};

fn fixture(path: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(path);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn triplet(dir: &str) -> (String, String, String) {
    (
        fixture(&format!("{dir}/services.xml")),
        fixture(&format!("{dir}/taxonomy.xml")),
        fixture(&format!("{dir}/problem.xml")),
    )
}

#[test]
fn single_service_document() {
    let (s, t, p) = triplet("wsc_single");
    let repo = parse_wsc(&s, &t, &p).unwrap();
    assert_eq!(repo.services.len(), 1);
    let svc = &repo.services[0];
    assert_eq!(svc.id, "s1");
    assert_eq!(repo.taxonomy.name(svc.inputs[0]), "a");
    assert_eq!(repo.taxonomy.name(svc.outputs[0]), "b");
}

#[test]
fn chain_documents_augment_into_a_feasible_bundle() {
    let (s, t, p) = triplet("wsc_chain");
    let repo = parse_wsc(&s, &t, &p).unwrap();
    assert_eq!(repo.services.len(), 4);
    assert!(forward_feasible(&repo.services, &repo.task, &repo.taxonomy, MatchMode::Subsumption));
    // Only the subsumption link taxed_invoice -> invoice connects billing to payment.
    assert!(!forward_feasible(&repo.services[..2], &repo.task, &repo.taxonomy, MatchMode::Exact));

    let rows = parse_coordinates_csv(&fixture("wsc_chain/coords.csv")).unwrap();
    let params = AugmentationParams {
        seed: 3,
        coordinates: CoordinateSource::Rows(rows),
        ..AugmentationParams::default()
    };
    let bundle = augment_repository(repo.clone(), &params, Weights::default(), MatchMode::Subsumption).unwrap();
    let again = augment_repository(repo, &params, Weights::default(), MatchMode::Subsumption).unwrap();
    assert_eq!(bundle, again);
    assert_eq!(bundle.data_items.len(), 4);
    let inst = bundle.to_instance(EvalOptions::default()).unwrap();
    assert!(inst.is_feasible());

    let reread = InstanceBundle::from_json(&bundle.to_json()).unwrap();
    assert_eq!(reread, bundle);
}

#[test]
fn too_few_coordinates_is_an_error() {
    let (s, t, p) = triplet("wsc_chain");
    let repo = parse_wsc(&s, &t, &p).unwrap();
    let rows = parse_coordinates_csv("1,0,0\n2,1,1\n").unwrap();
    let params = AugmentationParams {
        coordinates: CoordinateSource::Rows(rows),
        ..AugmentationParams::default()
    };
    let err = augment_repository(repo, &params, Weights::default(), MatchMode::Subsumption).unwrap_err();
    assert!(matches!(err, DwscError::NotEnoughCoordinates { needed: 4, found: 2 }), "{err}");
}

#[test]
fn infeasible_bundle_loads_but_reports_infeasible() {
    let bundle = InstanceBundle::from_json(&fixture("infeasible.json")).unwrap();
    let inst = bundle.to_instance(EvalOptions::default()).unwrap();
    assert!(!inst.is_feasible());
}
