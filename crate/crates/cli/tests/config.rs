use ompath::config::{Command, Config, Format, SystemBlock, TerminalKind};
use ompath::CliError;

const MINIMAL: &str = r#"
[system]
kind = "double_well"

[problem]
x0 = [-1.0]
x_target = [1.0]
"#;

fn load(text: &str, command: Command) -> Result<(Config, Vec<String>), CliError> {
    Config::load(text, Some(command), None)
}

#[test]
fn minimal_solve_config_gets_defaults() {
    let (cfg, applied) = load(MINIMAL, Command::Solve).unwrap();
    let s = cfg.solver();
    assert_eq!(s.n_nodes, Some(201));
    assert_eq!(s.damping_eta, Some(0.5));
    assert_eq!(s.max_iterations, Some(500));
    let p = cfg.problem();
    assert_eq!(p.terminal_weight, Some(1.0));
    assert_eq!(p.t0, Some(0.0));
    assert_eq!(p.tf, Some(1.0));
    assert_eq!(p.terminal_cost, Some(TerminalKind::Saturating));
    for key in [
        "solver.n_nodes = 201",
        "solver.damping_eta = 0.5",
        "problem.terminal_weight = 1.0",
    ] {
        assert!(applied.iter().any(|a| a == key), "{key} missing from {applied:?}");
    }
    assert!(cfg.mc.is_none());
    assert!(cfg.writes(Format::Csv) && cfg.writes(Format::Json));
}

#[test]
fn horizon_error_names_both_fields() {
    let text = format!("{MINIMAL}t0 = 2.0\ntf = 1.0\n");
    let err = load(&text, Command::Solve).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("problem.t0") && msg.contains("problem.tf"), "{msg}");
    match err {
        CliError::Validation { line, .. } => assert_eq!(line, Some(9)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn misspelt_key_gets_a_suggestion() {
    let text = format!("{MINIMAL}\n[solver]\ndampng_eta = 0.3\n");
    let err = load(&text, Command::Solve).unwrap_err();
    let msg = err.to_string();
    assert!(
        msg.contains("dampng_eta") && msg.contains("did you mean `damping_eta`"),
        "{msg}"
    );
    match err {
        CliError::Validation { field, line, .. } => {
            assert_eq!(field, "dampng_eta");
            assert_eq!(line, Some(10));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn unrelated_unknown_key_has_no_suggestion() {
    let text = format!("{MINIMAL}\n[solver]\nzzzzzzzzzzzz = 1\n");
    let msg = load(&text, Command::Solve).unwrap_err().to_string();
    assert!(msg.contains("zzzzzzzzzzzz") && !msg.contains("did you mean"), "{msg}");
}

#[test]
fn malformed_toml_is_a_parse_error() {
    let err = load("[system\nkind = 1", Command::Solve).unwrap_err();
    assert!(matches!(err, CliError::Parse { line: Some(1), .. }), "{err:?}");
}

#[test]
fn filled_config_round_trips() {
    for command in [Command::Solve, Command::Verify, Command::Sample] {
        let (cfg, _) = load(MINIMAL, command).unwrap();
        let echo = cfg.to_toml();
        let (again, applied) = Config::load(&echo, None, None).unwrap();
        assert_eq!(again, cfg);
        assert!(applied.is_empty(), "{applied:?}");
    }
}

#[test]
fn bundled_configs_load_and_round_trip() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let (cfg, _) = Config::load(&text, None, None).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(Config::load(&cfg.to_toml(), None, None).unwrap().0, cfg);
        seen += 1;
    }
    assert!(seen >= 7);
}

#[test]
fn command_line_and_config_must_agree() {
    let text = format!("command = \"sample\"\n{MINIMAL}");
    assert!(Config::load(&text, Some(Command::Sample), None).is_ok());
    let err = Config::load(&text, Some(Command::Solve), None).unwrap_err();
    assert!(matches!(err, CliError::Validation { line: Some(1), .. }), "{err:?}");
    assert!(Config::load(MINIMAL, None, None).is_err());
}

#[test]
fn seed_override_lands_in_mc_block() {
    let (cfg, _) = Config::load(MINIMAL, Some(Command::Sample), Some(99)).unwrap();
    assert_eq!(cfg.seed(), Some(99));
    // 1000 steps of the default dt over [0, 1], 10 per storage interval.
    assert_eq!(cfg.mc().n_nodes, Some(101));
}

#[test]
fn sampling_grid_must_divide_the_steps() {
    let text = format!("{MINIMAL}\n[mc]\nn_nodes = 7\n");
    let msg = load(&text, Command::Sample).unwrap_err().to_string();
    assert!(msg.contains("mc.n_nodes"), "{msg}");
}

#[test]
fn validation_catches_bad_values() {
    let cases = [
        (
            format!("{MINIMAL}\n[solver]\ndamping_eta = 1.5\n"),
            "solver.damping_eta",
        ),
        (format!("{MINIMAL}\n[solver]\nn_nodes = 3\n"), "solver.n_nodes"),
        (
            format!("{MINIMAL}\n[solver]\ncost_tolerance = -1.0\n"),
            "solver.cost_tolerance",
        ),
        (MINIMAL.replace("[1.0]", "[1.0, 2.0]"), "problem.x_target"),
        (MINIMAL.replace("[-1.0]", "[nan]"), "problem.x0"),
        (format!("{MINIMAL}\n[output]\nformats = []\n"), "output.formats"),
    ];
    for (text, field) in cases {
        let msg = load(&text, Command::Solve).unwrap_err().to_string();
        assert!(msg.contains(field), "{field}: {msg}");
    }
}

#[test]
fn missing_blocks_are_reported() {
    let msg = load("[system]\nkind = \"double_well\"\n", Command::Solve)
        .unwrap_err()
        .to_string();
    assert!(msg.contains("problem"), "{msg}");
    let msg = load(MINIMAL, Command::Geometry).unwrap_err().to_string();
    assert!(msg.contains("geometry"), "{msg}");
}

#[test]
fn custom_systems_need_a_horizon_and_shapes() {
    let custom = r#"
[system]
kind = "custom"
dim = 1
drift = ["x1 - x1^3"]
diffusion = [["1"]]

[problem]
x0 = [-1.0]
x_target = [1.0]
"#;
    let msg = load(custom, Command::Solve).unwrap_err().to_string();
    assert!(msg.contains("problem.tf"), "{msg}");
    let ok = format!("{custom}tf = 1.0\n");
    let (cfg, _) = load(&ok, Command::Solve).unwrap();
    assert!(matches!(cfg.system, SystemBlock::Custom(_)));
    let bad = ok.replace("[[\"1\"]]", "[[\"1\", \"0\"]]");
    let msg = load(&bad, Command::Solve).unwrap_err().to_string();
    assert!(msg.contains("system.diffusion"), "{msg}");
}

#[test]
fn npz_parameters_are_checked() {
    let text = "[system]\nkind = \"npz\"\nsigma = [1.0, 0.0, 1.0]\nD = -1.0\n\n[problem]\nx0 = [1.0, 1.0, 0.2]\nx_target = [0.9, 2.0, 0.2]\n";
    let msg = load(text, Command::Solve).unwrap_err().to_string();
    assert!(msg.contains("system"), "{msg}");
}
