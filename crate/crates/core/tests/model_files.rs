use pkm_compliance::model::{
    builtin_fixture, model_hash, ortho3_demo_assembly_errors, parse_model, validate_model, FIXTURE_NAMES,
};

fn read(name: &str) -> String {
    let path = format!("{}/../../data/models/{name}.json", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

#[test]
fn shipped_files_match_builtins() {
    for name in FIXTURE_NAMES {
        let model = parse_model(&read(&name.to_ascii_lowercase())).unwrap();
        let builtin = builtin_fixture(name).unwrap();
        assert_eq!(model, builtin, "{name}");
        assert_eq!(model_hash(&model), model_hash(&builtin));
        assert!(validate_model(&model).is_empty());
    }
}

#[test]
fn misaligned_demo_file_carries_the_demo_errors() {
    let model = parse_model(&read("ortho-3-misaligned")).unwrap();
    for (chain, e) in model.chains.iter().zip(ortho3_demo_assembly_errors()) {
        assert!((&chain.assembly_error - &e).amax() < 1e-15, "{}", chain.name);
    }
    let base = builtin_fixture("ORTHO-3").unwrap();
    for (a, b) in model.chains.iter().zip(&base.chains) {
        assert!((a.joint_stiffness() - b.joint_stiffness()).amax() <= 1e-9 * b.joint_stiffness().amax());
    }
}
