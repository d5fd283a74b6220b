use std::path::{Path, PathBuf};
use std::process::Command;

use mimo_ee::capacity::CapacityConfig;
use mimo_ee::optimizer::{relaxed_antennas, ExactSearch};
use mimo_ee::power::{db_to_linear, SystemParams};
use mimo_ee::sweep::{
    emit_csv, read_csv, run_sweep, Config, SweepObjective, SweepSpec, SweepVariable, TradeoffCurve,
};
use mimo_ee::Execution;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mimo-ee"))
}

fn spec(variable: SweepVariable, grid: Vec<f64>, objectives: Vec<SweepObjective>) -> SweepSpec {
    SweepSpec {
        variable,
        grid,
        fixed_value: match variable {
            SweepVariable::ChannelGainDb => 5.0,
            SweepVariable::Rate => -150.0,
        },
        params: SystemParams::reference_set(1.0),
        objectives,
        output_path: None,
        capacity: CapacityConfig::default(),
        search: ExactSearch::default(),
        threshold: 10.0,
        execution: Execution::Parallel,
    }
}

#[test]
fn two_objectives_three_points_give_six_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let s = spec(
        SweepVariable::ChannelGainDb,
        vec![-150.0, -140.0, -130.0],
        vec![SweepObjective::Exact, SweepObjective::Relaxed],
    );
    emit_csv(&run_sweep(&s).unwrap(), &path).unwrap();
    let rows = read_csv(&path).unwrap();
    assert_eq!(rows.len(), 6);
    let values: Vec<f64> = rows.iter().map(|r| r.sweep_value).collect();
    assert_eq!(values, [-150.0, -150.0, -140.0, -140.0, -130.0, -130.0]);
}

#[test]
fn single_point_grid_gives_one_row_per_objective() {
    let s = spec(
        SweepVariable::Rate,
        vec![2.0],
        vec![
            SweepObjective::Exact,
            SweepObjective::Bound,
            SweepObjective::Relaxed,
            SweepObjective::FixedAntennas(1),
        ],
    );
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.csv");
    emit_csv(&run_sweep(&s).unwrap(), &path).unwrap();
    let rows = read_csv(&path).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows
        .iter()
        .all(|r| r.sweep_var == "rate" && r.status == "ok"));
}

#[test]
fn empty_curve_is_rejected_without_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    let curve = TradeoffCurve {
        variable: SweepVariable::Rate,
        points: vec![],
    };
    assert!(emit_csv(&curve, &path).is_err());
    assert!(!path.exists());
}

#[test]
fn round_trip_and_row_identities() {
    let s = spec(
        SweepVariable::ChannelGainDb,
        (0..8).map(|i| -160.0 + 10.0 * i as f64).collect(),
        vec![
            SweepObjective::Exact,
            SweepObjective::Bound,
            SweepObjective::Relaxed,
            SweepObjective::FixedAntennas(1),
        ],
    );
    let curve = run_sweep(&s).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rt.csv");
    emit_csv(&curve, &path).unwrap();
    let rows = read_csv(&path).unwrap();

    let close = |a: f64, b: f64| (a - b).abs() <= 5e-9 * b.abs();
    let mut k = 0;
    for point in &curve.points {
        for (objective, outcome) in &point.outcomes {
            let row = &rows[k];
            k += 1;
            let r = outcome.as_ref().unwrap();
            assert_eq!(row.objective, objective.to_string());
            assert!(close(row.sweep_value, point.sweep_value));
            assert!(close(row.antennas.unwrap(), r.antennas));
            assert!(close(row.gamma.unwrap(), r.gamma));
            assert!(close(row.zeta.unwrap(), r.zeta));
            assert!(close(row.eta_bits_per_joule.unwrap(), r.eta));
            assert!(close(row.f_pa.unwrap(), r.breakdown.pa_fraction));
            assert_eq!(row.regime, point.regime.as_ref().unwrap().label());

            let params = SystemParams::reference_set(db_to_linear(point.sweep_value));
            assert!(
                (r.eta / (r.zeta * params.channel_gain / params.noise_psd) - 1.0).abs() < 1e-12
            );
            if *objective == SweepObjective::Bound {
                let relaxed = relaxed_antennas(5.0, &params.normalize().unwrap()).unwrap();
                assert!(
                    r.antennas == relaxed.floor().max(2.0) || r.antennas == relaxed.ceil().max(2.0)
                );
            }
        }
    }
    assert_eq!(k, rows.len());
}

#[test]
fn cli_sweep_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let status = cli()
            .args(["sweep", "--config"])
            .arg(configs().join("gain_sweep.toml"))
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    let header = bytes.split(|&c| c == b'\n').next().unwrap();
    assert_eq!(
        header,
        b"sweep_var,sweep_value,objective,M,gamma,zeta,eta_bits_per_joule,f_pa,regime,status"
    );
}

#[test]
fn cli_monte_carlo_seed_controls_output() {
    let run = |seed: &str| {
        cli()
            .args(["optimize", "--seed", seed, "--config"])
            .arg(configs().join("monte_carlo.toml"))
            .output()
            .unwrap()
    };
    let a = run("1");
    let b = run("1");
    let c = run("2");
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn cli_objective_override() {
    let out = cli()
        .args(["optimize", "--objective", "relaxed,fixed-m-4", "--config"])
        .arg(configs().join("single_point.toml"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let objectives: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap())
        .collect();
    assert_eq!(objectives, ["relaxed", "fixed-m-4"]);
}

#[test]
fn cli_config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "rate = 5\nunknown_key = 1\n").unwrap();
    for args in [
        vec![
            "sweep".into(),
            "--config".into(),
            bad.clone().into_os_string(),
        ],
        vec![
            "sweep".into(),
            "--config".into(),
            dir.path().join("missing.toml").into_os_string(),
        ],
        vec!["optimize".into()],
        vec!["no-such-command".into()],
    ] {
        let status = cli().args(&args).output().unwrap().status;
        assert_eq!(status.code(), Some(1), "{args:?}");
    }
    let no_sweep = dir.path().join("point.toml");
    std::fs::write(&no_sweep, "rate = 5\nchannel_gain_db = -140\n").unwrap();
    let status = cli()
        .arg("sweep")
        .arg("--config")
        .arg(&no_sweep)
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(1));
}

#[test]
fn cli_numerical_failure_exits_two() {
    // An unreachable tolerance makes every capacity inversion stall.
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tight.toml");
    std::fs::write(
        &cfg,
        "rate = 5\nchannel_gain_db = -140\nrate_tolerance = 1e-300\nobjectives = \"exact\"\n",
    )
    .unwrap();
    let out = cli()
        .arg("optimize")
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().contains("error:"));
}

#[test]
fn cli_pa_fraction_and_comparison() {
    let out = cli()
        .args(["pa-fraction", "--config"])
        .arg(configs().join("pa_fraction.toml"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let fractions: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(fractions.len(), 17);
    assert!(fractions.windows(2).all(|w| w[1] < w[0]));
    assert!(fractions.iter().all(|&f| f < 0.5));

    let out = cli()
        .args(["compare-fixed-m", "--config"])
        .arg(configs().join("single_point.toml"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let ratio: f64 = text
        .lines()
        .nth(1)
        .unwrap()
        .rsplit(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(ratio > 1.0);
}

#[test]
fn shipped_configs_parse() {
    for name in [
        "gain_sweep",
        "rate_sweep",
        "pa_fraction",
        "single_point",
        "monte_carlo",
    ] {
        let cfg = Config::load(&configs().join(format!("{name}.toml"))).unwrap();
        assert_eq!(
            cfg.params,
            SystemParams::reference_set(cfg.params.channel_gain),
            "{name}"
        );
    }
}
