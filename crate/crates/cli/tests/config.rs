use hplane_cli::config::*;
use hplane_cli::CliError;
use proptest::prelude::*;

#[test]
fn minimal_config_gets_defaults() {
    let cfg = parse_config("command = \"exhaust\"\nh = 0.0\n[curve]\nkind = \"circle\"\n").unwrap();
    assert_eq!(cfg.command, Command::Exhaust);
    assert_eq!(cfg.radii, vec![2.0, 3.0, 4.0, 5.0, 6.0]);
    assert_eq!(cfg.core_radius, 1.5);
    assert_eq!(cfg.curve.samples, 256);
    assert_eq!(cfg.threads, 1);
    // Defaults are echoed in full.
    let text = emit_config(&cfg);
    assert!(text.contains("core_radius = 1.5") && text.contains("max_iterations = 4000"), "{text}");
}

#[test]
fn h_outside_the_open_interval_is_rejected() {
    let err = parse_config("command = \"pair\"\nh = 1.0\n").unwrap_err();
    assert!(matches!(&err, CliError::Validation(m) if m.contains("(-1, 1)")), "{err}");
    assert_eq!(err.exit_code(), 1);
    let err = parse_config("command = \"sweep\"\nh_list = [0.2, -1.5]\n").unwrap_err();
    assert!(err.to_string().contains("(-1, 1)"));
}

#[test]
fn unknown_keys_are_rejected_with_a_location() {
    let err = parse_config("command = \"solve\"\nh = 0.1\n[solver]\nmax_iters = 3\n").unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, CliError::Parse(_)));
    assert!(msg.contains("max_iters") && msg.contains("line 4"), "{msg}");
    assert!(parse_config("command = \"solve\"\nh = 0.1\nradius = 3\n").is_err());
    assert!(parse_config("command = \"fly\"\n").is_err());
}

#[test]
fn command_requirements() {
    assert!(parse_config("command = \"solve\"\n").is_err());
    assert!(parse_config("command = \"sweep\"\n").is_err());
    assert!(parse_config("command = \"accept\"\n").is_ok());
    assert!(parse_config("command = \"annulus\"\n").is_ok());
    let few = parse_config("command = \"exhaust\"\nh = 0\n[curve]\nkind = \"circle\"\nsamples = 8\n").unwrap_err();
    assert!(few.to_string().contains("at least 16"));
    assert!(parse_config("command = \"exhaust\"\nh = 0\nradii = [3.0, 2.0]\n").is_err());
    assert!(parse_config("command = \"exhaust\"\nh = 0\ncore_radius = 2.5\n").is_err());
}

#[test]
fn fourier_curve_with_three_coefficients() {
    let cfg = parse_config(
        "command = \"exhaust\"\nh = 0.3\n[curve]\nkind = \"fourier-circle\"\ncoefficients = [0.1, 0.06, 0.04]\n",
    )
    .unwrap();
    let c = cfg.curve.build().unwrap();
    assert_eq!(c.len(), 256);
    assert!(c.is_simple());
    // A polar-angle graph is simple as long as it stays off the poles.
    let wild = CurveSpec { kind: CurveKind::FourierCircle, coefficients: vec![0.0, 0.0, 0.0, 0.0, 1.2], ..CurveSpec::default() };
    assert!(wild.build().unwrap().is_simple());
    let over = CurveSpec { kind: CurveKind::FourierCircle, coefficients: vec![1.7], ..CurveSpec::default() };
    assert!(matches!(over.build(), Err(CliError::Validation(_))));
    let e = CurveSpec { kind: CurveKind::Ellipse, semi_axes: Some([0.6, 1.1]), center: true, ..CurveSpec::default() };
    assert_eq!(e.build().unwrap().len(), 256);
    assert!(CurveSpec { kind: CurveKind::Ellipse, ..CurveSpec::default() }.build().is_err());
}

fn command() -> impl Strategy<Value = Command> {
    prop_oneof![
        Just(Command::Solve),
        Just(Command::Annulus),
        Just(Command::Pair),
        Just(Command::Sweep),
        Just(Command::Exhaust),
        Just(Command::Verify),
        Just(Command::Accept),
    ]
}

fn curve() -> impl Strategy<Value = CurveSpec> {
    (
        prop_oneof![Just(CurveKind::Circle), Just(CurveKind::Ellipse), Just(CurveKind::FourierCircle)],
        16usize..512,
        prop::array::uniform3(-1.0f64..1.0),
        0.1f64..3.0,
        prop::option::of(prop::array::uniform2(0.1f64..1.5)),
        prop::collection::vec(-0.2f64..0.2, 0..4),
        any::<bool>(),
    )
        .prop_map(|(kind, samples, axis, angular_radius, semi_axes, coefficients, center)| CurveSpec {
            kind,
            samples,
            axis,
            angular_radius,
            semi_axes,
            coefficients,
            center,
        })
}

fn config() -> impl Strategy<Value = RunConfig> {
    (
        command(),
        any::<u64>(),
        1usize..64,
        prop::option::of(-0.99f64..0.99),
        prop::option::of(prop::collection::vec(-0.99f64..0.99, 1..6)),
        prop::collection::vec(0.1f64..3.0, 1..6),
        curve(),
        (1usize..10_000, 1e-9f64..1e-2, 0.01f64..1.0, prop::option::of(0.01f64..1.0)),
    )
        .prop_map(|(command, seed, threads, h, h_list, steps, curve, (it, tol, edge, target))| {
            let mut cfg = RunConfig::new(command);
            cfg.seed = seed;
            cfg.threads = threads;
            cfg.h = h;
            cfg.h_list = h_list;
            cfg.radii = steps.iter().scan(1.5, |r, s| {
                *r += s;
                Some(*r)
            }).collect();
            cfg.curve = curve;
            cfg.solver.max_iterations = it;
            cfg.solver.gradient_tolerance = tol;
            cfg.solver.init_edge_length = edge;
            cfg.solver.target_edge_length = target;
            cfg.output = format!("runs/{seed}").into();
            cfg
        })
}

proptest! {
    #[test]
    fn emit_then_parse_round_trips(cfg in config()) {
        let text = emit_config(&cfg);
        prop_assert_eq!(parse_config(&text).is_ok(), cfg.validate().is_ok());
        let back: RunConfig = toml::from_str(&text).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
