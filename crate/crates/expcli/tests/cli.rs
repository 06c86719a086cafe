use std::path::Path;
use std::process::{Command, Output};

use embezzle_cli::config::{ExperimentConfig, ExperimentKind};
use embezzle_cli::experiments::{run, schema};
use embezzle_cli::output::{manifest_path, Manifest, ResultTable};

fn embezzle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_embezzle"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn same_seed_gives_identical_bytes_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mc.toml");
    write(&cfg, "samples = 4\nN = 12\nseed = 99\n");
    let a = dir.path().join("a/mc.csv");
    let b = dir.path().join("b/mc.csv");
    for (out, threads) in [(&a, "1"), (&b, "2")] {
        let o = embezzle(&[
            "montecarlo",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--threads",
            threads,
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let m = manifest_path(&a);
    let manifest = Manifest::from_json(&std::fs::read_to_string(&m).unwrap()).unwrap();
    assert_eq!(manifest.seed, 99);
    assert_eq!(manifest.rows, 4);
    assert_eq!(manifest.config.n, 12);

    let regen = dir.path().join("regen.csv");
    let o = embezzle(&["replay", m.to_str().unwrap(), "--out", regen.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(std::fs::read(&regen).unwrap(), std::fs::read(&a).unwrap());

    let mut tampered = manifest.clone();
    tampered.sha256 = "0".repeat(64);
    let bad = dir.path().join("bad.manifest.json");
    write(&bad, &tampered.to_json());
    assert_eq!(embezzle(&["replay", bad.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    write(&cfg, "samples = 2\nN = 5\nseed = 1\n");
    let mut outputs = Vec::new();
    for seed in ["1", "2"] {
        let out = dir.path().join(format!("{seed}.csv"));
        let o = embezzle(&["montecarlo", "--config", cfg.to_str().unwrap(), "--seed", seed, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push(std::fs::read(out).unwrap());
    }
    assert_ne!(outputs[0], outputs[1]);
}

#[test]
fn config_errors_exit_with_two_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("epsilon-grid = [0.1, 1.5]\n", "nmin", "epsilon-grid[1]"),
        ("bogus = 3\n", "nmin", "bogus"),
        ("d = 1\n", "embezzle", "d"),
        ("samples = 0\n", "montecarlo", "samples"),
        ("experiment = \"distill\"\n", "nmin", "experiment"),
        ("d = \"two\"\n", "fidelity", "d"),
        ("state-source = \"fixture:IV\"\n", "fidelity", "state-source"),
        ("resolution = 10\n", "qutrit-map", "resolution"),
        ("m-max = 100000\n", "consumption", "m-max"),
    ];
    for (i, (text, exp, field)) in cases.iter().enumerate() {
        let cfg = dir.path().join(format!("{i}.toml"));
        write(&cfg, text);
        let out = dir.path().join(format!("{i}.csv"));
        let o = embezzle(&[exp, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{text}: {}", stderr(&o));
        assert!(stderr(&o).contains(field), "{text}: {}", stderr(&o));
        assert!(!out.exists());
    }
    assert_eq!(embezzle(&["nmin", "--threads", "0"]).status.code(), Some(2));
    assert_eq!(embezzle(&["no-such-experiment"]).status.code(), Some(2));
}

#[test]
fn io_and_state_failures_have_their_own_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.toml");
    assert_eq!(embezzle(&["fidelity", "--config", missing.to_str().unwrap()]).status.code(), Some(1));

    let state = dir.path().join("state.json");
    let doc = r#"{"dim":4,"splitA":2,"splitB":2,"entries":[
        [[1,0],[0,0],[0,0],[0,0]],
        [[0,0],[1,0],[0,0],[0,0]],
        [[0,0],[0,0],[0,0],[0,0]],
        [[0,0],[0,0],[0,0],[0,0]]]}"#;
    write(&state, doc);
    let cfg = dir.path().join("f.toml");
    write(&cfg, &format!("state-source = \"file:{}\"\n", state.display()));
    let out = dir.path().join("f.csv");
    let o = embezzle(&["fidelity", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn every_experiment_round_trips_through_its_schema() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ExperimentKind::ALL {
        let mut cfg = ExperimentConfig {
            output_path: Some(dir.path().join(format!("{}.csv", kind.name()))),
            ..Default::default()
        };
        match kind {
            ExperimentKind::Nmin | ExperimentKind::Distill => cfg.n = Some(8),
            ExperimentKind::Montecarlo => {
                cfg.n = Some(8);
                cfg.samples = Some(3);
            }
            ExperimentKind::QutritMap => cfg.resolution = Some(50),
            _ => {}
        }
        let resolved = cfg.resolve(kind).unwrap();
        let table = run(&resolved).unwrap();
        assert!(!table.rows.is_empty(), "{}", kind.name());
        let bytes = table.to_csv();
        let back = ResultTable::from_csv(schema(kind), &bytes).unwrap();
        assert_eq!(back.rows.len(), table.rows.len());
        assert_eq!(back.to_csv(), bytes, "{}", kind.name());
    }
}

#[test]
fn fidelity_rows_match_labels() {
    let cfg = ExperimentConfig::default().resolve(ExperimentKind::Fidelity).unwrap();
    let table = run(&cfg).unwrap();
    assert_eq!(table.rows.len(), 20);
    let labelled: Vec<_> = table
        .rows
        .iter()
        .filter(|r| r[4].as_f64().is_some())
        .collect();
    assert_eq!(labelled.len(), 4);
    for row in labelled {
        let col = if row[3].as_text() == Some("f") { 2 } else { 1 };
        let got = row[col].as_f64().unwrap();
        let want = row[4].as_f64().unwrap();
        assert!((got - want).abs() <= 0.01, "{}: {got} vs {want}", row[0].render());
    }
}
