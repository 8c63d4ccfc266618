//! Specification validation, shock application, subsystem embedding, and
//! JSON round-trips.

mod common;

use common::{load, single_type_spec};
use contagion::{
    embed_subsystem, validate_spec, Capital, ModelSpec, RawAtom, RawSpec, SpecError,
};

fn raw_atom(prob: f64, vtype: usize, w: f64, capital: Capital) -> RawAtom {
    RawAtom {
        prob,
        vtype,
        in_weights: vec![vec![w]],
        out_weights: vec![vec![w]],
        capital,
        shock_prob: 0.0,
        importance: 1.0,
    }
}

// ============================================================================
// Validation
// ============================================================================

#[test]
fn rejects_structurally_broken_specs() {
    // Probabilities must sum to one.
    let bad_mass = RawSpec {
        description: None,
        r_levels: 1,
        t_types: 1,
        atoms: vec![raw_atom(0.6, 1, 1.0, Capital::Finite(1))],
    };
    assert!(matches!(
        validate_spec(bad_mass),
        Err(SpecError::NonUnitMass { .. })
    ));

    // Weight matrices must be R x T.
    let mut bad_shape_atom = raw_atom(1.0, 1, 1.0, Capital::Finite(1));
    bad_shape_atom.in_weights = vec![vec![1.0, 2.0]];
    let bad_shape = RawSpec {
        description: None,
        r_levels: 1,
        t_types: 1,
        atoms: vec![bad_shape_atom],
    };
    assert!(matches!(
        validate_spec(bad_shape),
        Err(SpecError::ShapeMismatch(_))
    ));

    // Type indices are 1-based and bounded by T.
    let bad_type = RawSpec {
        description: None,
        r_levels: 1,
        t_types: 1,
        atoms: vec![raw_atom(1.0, 2, 1.0, Capital::Finite(1))],
    };
    assert!(matches!(
        validate_spec(bad_type),
        Err(SpecError::ShapeMismatch(_))
    ));

    // Negative weights are rejected.
    let mut neg_atom = raw_atom(1.0, 1, 1.0, Capital::Finite(1));
    neg_atom.out_weights = vec![vec![-0.5]];
    let negative = RawSpec {
        description: None,
        r_levels: 1,
        t_types: 1,
        atoms: vec![neg_atom],
    };
    assert!(matches!(
        validate_spec(negative),
        Err(SpecError::NegativeValue(_))
    ));

    // Shock probabilities live in [0, 1].
    let mut shock_atom = raw_atom(1.0, 1, 1.0, Capital::Finite(1));
    shock_atom.shock_prob = 1.5;
    let bad_shock = RawSpec {
        description: None,
        r_levels: 1,
        t_types: 1,
        atoms: vec![shock_atom],
    };
    assert!(validate_spec(bad_shock).is_err());

    // An empty atom list is meaningless.
    let empty = RawSpec {
        description: None,
        r_levels: 1,
        t_types: 1,
        atoms: Vec::new(),
    };
    assert!(matches!(
        validate_spec(empty),
        Err(SpecError::EmptyAtomList)
    ));
}

#[test]
fn json_parser_rejects_unknown_fields() {
    let text = r#"{"R": 1, "T": 1, "bogus": 3, "atoms": [
        {"prob": 1.0, "vtype": 1, "in_weights": [[1.0]],
         "out_weights": [[1.0]], "capital": 1}]}"#;
    assert!(matches!(
        ModelSpec::from_json_str(text),
        Err(SpecError::Parse(_))
    ));
}

#[test]
fn bundled_fixtures_all_validate() {
    for name in [
        "two_impact_unique_root.json",
        "two_impact_touching_roots.json",
        "two_impact_resilient.json",
        "two_impact_contagious.json",
        "coupled_subsystems_a.json",
        "coupled_subsystems_b.json",
        "coupled_subsystems_c.json",
        "counterparty_dependent.json",
        "creditor_only_weights.json",
    ] {
        let spec = load(name);
        assert!(spec.r_levels() >= 1 && spec.t_types() >= 1, "{name}");
    }
}

// ============================================================================
// Derived quantities
// ============================================================================

#[test]
fn zeta_and_live_set_match_hand_computation() {
    let spec = load("counterparty_dependent.json");
    let zeta = spec.zeta();
    // Atom 1 (type 1, mass 1/3) sends impact-1 weight 2 toward type 2 and
    // impact-2 weight 2 toward type 1; atom 2 (type 2, mass 2/3) sends
    // impact-1 weight 2 toward both types.
    assert!((zeta.get(0, 1, 0) - 2.0 / 3.0).abs() < 1e-12);
    assert!((zeta.get(1, 0, 0) - 2.0 / 3.0).abs() < 1e-12);
    assert!((zeta.get(0, 0, 1) - 4.0 / 3.0).abs() < 1e-12);
    assert!((zeta.get(0, 1, 1) - 4.0 / 3.0).abs() < 1e-12);
    assert_eq!(zeta.get(1, 0, 1), 0.0);
    assert_eq!(zeta.get(1, 1, 1), 0.0);

    let live = spec.live_set();
    assert_eq!(live.len(), 4);
    for (r, alpha, beta) in live.iter() {
        assert!(zeta.get(r, alpha, beta) > 0.0);
    }
}

// ============================================================================
// Shock application
// ============================================================================

#[test]
fn apply_shock_splits_mass_and_preserves_zeta() {
    let spec = load("coupled_subsystems_a.json");
    assert!(spec.has_shocks());
    assert_eq!(spec.initial_default_mass(), 0.0);

    let shocked = spec.apply_shock();
    assert!(!shocked.has_shocks(), "shock probabilities are consumed");
    assert_eq!(shocked.atoms().len(), 2 * spec.atoms().len());

    // The initial default mass equals the total shock mass.
    let expected_mass: f64 = spec.atoms().iter().map(|a| a.prob * a.shock_prob).sum();
    assert!((shocked.initial_default_mass() - expected_mass).abs() < 1e-15);

    // Total mass and mean out-weights are untouched by the split.
    let total: f64 = shocked.atoms().iter().map(|a| a.prob).sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert!(spec.zeta().sup_distance(&shocked.zeta()) < 1e-15);

    // A shockless spec passes through unchanged.
    let quiet = single_type_spec(1, 1.0, Capital::Finite(2), 0.0);
    let applied = quiet.apply_shock();
    assert_eq!(applied.atoms().len(), quiet.atoms().len());
    assert_eq!(applied.initial_default_mass(), 0.0);

    // Applying twice changes nothing further.
    let twice = shocked.apply_shock();
    assert_eq!(twice.atoms().len(), shocked.atoms().len());
    assert!((twice.initial_default_mass() - shocked.initial_default_mass()).abs() < 1e-15);
}

// ============================================================================
// Subsystem embedding
// ============================================================================

#[test]
fn embedding_preserves_subsystem_dynamics() {
    // A one-type subsystem keeps its root when embedded as a decoupled type
    // of a larger system: out-weights are rescaled by the inverse host
    // fraction so each member still receives the same mean load.
    let sub = single_type_spec(1, 1.5, Capital::Finite(1), 0.0).to_raw();
    let host = RawSpec {
        description: None,
        r_levels: 1,
        t_types: 2,
        atoms: vec![{
            let mut a = raw_atom(0.5, 1, 0.0, Capital::Infinite);
            a.in_weights = vec![vec![0.0, 0.0]];
            a.out_weights = vec![vec![0.0, 0.0]];
            a
        }],
    };
    let combined = validate_spec(embed_subsystem(&sub, 0.5, 2, &host).unwrap()).unwrap();

    let params = contagion::SolverParams::default();
    let alone = contagion::z_star(&validate_spec(sub).unwrap(), &params).unwrap();
    let embedded = contagion::z_star(&combined, &params).unwrap();
    // The embedded copy's self-coordinate (r=1, alpha=2, beta=2) carries the
    // same root value as the standalone system.
    assert!(
        (embedded.z.get(0, 1, 1) - alone.z.get(0, 0, 0)).abs() < 1e-8,
        "embedded root {} vs standalone {}",
        embedded.z.get(0, 1, 1),
        alone.z.get(0, 0, 0)
    );
}

#[test]
fn embedding_rejects_bad_requests() {
    let sub = single_type_spec(1, 1.0, Capital::Finite(1), 0.0).to_raw();
    let host = RawSpec {
        description: None,
        r_levels: 1,
        t_types: 2,
        atoms: vec![raw_atom(0.5, 1, 0.0, Capital::Infinite)],
    };
    // Fix host atom shape for T = 2.
    let mut host = host;
    host.atoms[0].in_weights = vec![vec![0.0, 0.0]];
    host.atoms[0].out_weights = vec![vec![0.0, 0.0]];

    // Occupied type index.
    assert!(matches!(
        embed_subsystem(&sub, 0.5, 1, &host),
        Err(SpecError::TypeCollision { .. })
    ));
    // More mass than remains unassigned.
    assert!(matches!(
        embed_subsystem(&sub, 0.75, 2, &host),
        Err(SpecError::MassOverflow { .. })
    ));
    // Out-of-range type index.
    assert!(matches!(
        embed_subsystem(&sub, 0.5, 3, &host),
        Err(SpecError::ShapeMismatch(_))
    ));
}

// ============================================================================
// Serialization
// ============================================================================

#[test]
fn json_round_trip_is_lossless() {
    for name in ["counterparty_dependent.json", "coupled_subsystems_b.json"] {
        let spec = load(name);
        let text = serde_json::to_string(&spec.to_raw()).unwrap();
        let back = ModelSpec::from_json_str(&text).unwrap();
        assert_eq!(spec.r_levels(), back.r_levels());
        assert_eq!(spec.t_types(), back.t_types());
        assert_eq!(spec.atoms().len(), back.atoms().len());
        assert!(spec.zeta().sup_distance(&back.zeta()) == 0.0);
        for (a, b) in spec.atoms().iter().zip(back.atoms()) {
            assert_eq!(a.prob, b.prob, "{name}");
            assert_eq!(a.capital, b.capital);
            assert_eq!(a.shock_prob, b.shock_prob);
            assert_eq!(a.importance, b.importance);
        }
    }
}
