use curbside_core::{load_scenario, load_scenario_file, Error, ScenarioConfig};

#[test]
fn partial_file_overrides_preset() {
    let cfg = load_scenario(
        r#"
        seed = 7
        ticks = 120
        [radio]
        sigma = 0.0

        [[pedestrian]]
        tick = 3
        x = 100.0
        y = -1.0
        speed = 1.2
        "#,
    )
    .unwrap();
    assert_eq!(cfg.seed, 7);
    assert_eq!(cfg.radio.sigma, 0.0);
    assert_eq!(cfg.street, ScenarioConfig::preset().street);
    assert_eq!(cfg.scripted_pedestrians.len(), 1);
    assert_eq!(cfg.scripted_pedestrians[0].dwell, 0.0);
}

#[test]
fn file_round_trip() {
    let mut cfg = ScenarioConfig::preset();
    cfg.chain.missing = vec![4, 9];
    cfg.controller.enabled = false;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scenario.toml");
    std::fs::write(&path, cfg.to_toml()).unwrap();
    assert_eq!(load_scenario_file(&path).unwrap(), cfg);
}

#[test]
fn invalid_values_name_their_field() {
    for (doc, field) in [
        ("[radio]\nsigma = -1.0", "radio.sigma"),
        ("[street]\nwidth = 1.0", "street.width"),
        ("[chain]\nlink_range = 0.0", "chain.link_range"),
    ] {
        match load_scenario(doc) {
            Err(Error::Validation { field: f, .. }) => assert_eq!(f, field, "{doc}"),
            other => panic!("{doc}: expected a validation error, got {other:?}"),
        }
    }
}

#[test]
fn typos_are_rejected() {
    assert!(matches!(load_scenario("[radio]\nsigmaa = 0.1"), Err(Error::Parse(_))));
    assert!(load_scenario_file(std::path::Path::new("/nonexistent/scenario.toml")).is_err());
}
