use std::process::Command;

use coopcache::harness::{
    csv_string, preset, run_points, run_sweep, sweep_points, ConfigFile, Method, Overrides, HEADER,
};
use coopcache::{ChannelConfig, EnvironmentKind, PolicyKind, QuadratureConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_coopcache"))
}

#[test]
fn empty_file_gives_defaults() {
    let cfg = ConfigFile::parse("").unwrap();
    assert_eq!(cfg, ConfigFile::default());
    let s = &cfg.scenario;
    assert_eq!(s.environment, EnvironmentKind::SubUrban);
    assert_eq!(
        (s.lambda, s.subchannels, s.library_size, s.cache_size),
        (1e-3, 64, 20, 5)
    );
    assert_eq!(cfg.channel(1.0), ChannelConfig::default());
    assert_eq!(cfg.quadrature(), QuadratureConfig::default());
    let ch = cfg.channel(1.0);
    assert_eq!(
        (ch.alpha_l, ch.alpha_n, ch.wbar_l, ch.wbar_n),
        (2.09, 4.0, 10.0, 2.0)
    );
}

#[test]
fn errors_name_the_key() {
    let cases = [
        ("[scenario]\nkappa = 3\n", "scenario.kappa"),
        ("[scenario]\ncache_size = 30\n", "scenario.cache_size"),
        ("[scenario]\nlambda = -1.0\n", "scenario.lambda"),
        ("[scenario]\nkapa = 1\n", "kapa"),
        ("[simulation]\ntrials = 0\n", "simulation.trials"),
        ("[sweep]\nvalues = [2.0, 1.0]\n", "sweep.values"),
        ("[sweep]\nvalues = []\n", "sweep.values"),
        (
            "[sweep]\nvalues = [1.0]\nseries_values = [1.0]\n",
            "sweep.series_values",
        ),
        (
            "[scenario]\nenvironment = \"custom\"\n[environment]\nphi = 1.0\n",
            "psi",
        ),
        ("[scenario]\nenvironment = \"rural\"\n", "rural"),
    ];
    for (text, key) in cases {
        let err = ConfigFile::parse(text).unwrap_err().to_string();
        assert!(err.contains(key), "{text:?}: {err}");
    }
}

#[test]
fn custom_environment_round_trips() {
    let text = "[scenario]\nenvironment = \"custom\"\n[environment]\nphi = 5.0\npsi = 0.3\n\
                mu_los = 0.5\nmu_nlos = 15.0\na_los = 10.0\na_nlos = 30.0\nc_los = 0.05\nc_nlos = 0.02\n";
    let cfg = ConfigFile::parse(text).unwrap();
    let env = cfg.environment(EnvironmentKind::Custom).unwrap();
    assert_eq!(
        (env.phi, env.psi, env.mu_n, env.c_n),
        (5.0, 0.3, 15.0, 0.02)
    );
    let again = ConfigFile::parse(&cfg.to_toml()).unwrap();
    assert_eq!(again, cfg);
}

#[test]
fn override_marks_preset_custom() {
    let cfg = ConfigFile::parse("[environment]\nmu_nlos = 25.0\n").unwrap();
    let env = cfg.environment(EnvironmentKind::Urban).unwrap();
    assert_eq!(env.kind, EnvironmentKind::Custom);
    assert_eq!(env.mu_n, 25.0);
    assert_eq!(env.phi, coopcache::Environment::urban().phi);
}

#[test]
fn shipped_files_parse() {
    ConfigFile::parse(coopcache::harness::EXAMPLE_CONFIG).unwrap();
    for (name, _) in coopcache::harness::PRESETS {
        let cfg = preset(name).unwrap();
        assert!(cfg.sweep.is_some(), "{name}");
    }
    assert!(preset("nonexistent").is_err());
}

#[test]
fn sweep_order_and_row_count() {
    let cfg = preset("capacity_vs_radius").unwrap();
    let points = sweep_points(&cfg).unwrap();
    assert_eq!(points.len(), 4 * 3 * 5);
    assert_eq!(points[0].env, EnvironmentKind::HighRise);
    assert_eq!((points[0].kappa, points[0].x_cop), (0.2, 0.5));
    assert_eq!((points[1].kappa, points[1].x_cop), (0.2, 1.0));
    assert_eq!((points[5].kappa, points[5].x_cop), (0.8, 0.5));
    assert_eq!(points[15].env, EnvironmentKind::DenseUrban);

    let cfg = preset("policy_comparison").unwrap();
    let points = sweep_points(&cfg).unwrap();
    assert_eq!(points.len(), 3 * 3 * 5);
    assert_eq!(points[5].policy, PolicyKind::Mpc);
    assert_eq!(points[4].library_size, 40);
}

#[test]
fn fractional_library_size_is_rejected() {
    let cfg = ConfigFile::parse("[sweep]\nvariable = \"library_size\"\nvalues = [10.5]\n").unwrap();
    assert!(sweep_points(&cfg)
        .unwrap_err()
        .to_string()
        .contains("library_size"));
}

#[test]
fn methods_multiply_rows_and_share_ids() {
    let mut cfg = ConfigFile::parse(
        "[scenario]\nenvironment = \"sub_urban\"\n[simulation]\ntrials = 2000\n\
         [sweep]\nvariable = \"x_cop\"\nvalues = [1.0]\nmethods = [\"both\"]\n",
    )
    .unwrap();
    Overrides {
        seed: Some(9),
        ..Default::default()
    }
    .apply(&mut cfg)
    .unwrap();
    let rows = run_sweep(&cfg).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(
        (rows[0].method, rows[1].method),
        (Method::Analytic, Method::MonteCarlo)
    );
    assert_eq!(rows[0].scenario_id, rows[1].scenario_id);
    let (a, m) = (
        rows[0].outcome.clone().unwrap(),
        rows[1].outcome.clone().unwrap(),
    );
    assert!(a.std_err.is_none() && a.n_trials.is_none());
    assert_eq!(m.n_trials, Some(2000));
    assert!(rows.iter().all(|r| r.seed == 9));
}

#[test]
fn csv_layout() {
    let cfg = ConfigFile::default();
    let points = sweep_points(&cfg).unwrap();
    let rows = run_points(&cfg, &points, &[Method::Analytic]);
    let text = csv_string(&rows);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], HEADER.join(","));
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields.len(), HEADER.len());
    assert_eq!(
        &fields[..11],
        [
            "1",
            "sub_urban",
            "rcp",
            "analytic",
            "0.001",
            "1",
            "1",
            "64",
            "20",
            "5",
            "0.8"
        ]
    );
    assert_eq!((fields[13], fields[14], fields[15]), ("", "", "1"));
}

#[test]
fn failed_rows_are_marked() {
    // A window smaller than the cooperation zone is rejected when the
    // simulator is built, after the analytic row succeeded.
    let cfg = ConfigFile::parse("[simulation]\nr_max = 0.5\n[scenario]\nx_cop = 1.0\n").unwrap();
    let points = sweep_points(&cfg).unwrap();
    let rows = run_points(&cfg, &points, &[Method::Both]);
    assert!(!rows[0].failed());
    assert!(rows[1].failed());
    let text = csv_string(&rows);
    let last = text.lines().nth(2).unwrap();
    assert!(last.starts_with("1,sub_urban,rcp,failed,"), "{last}");
    assert!(last.ends_with(",,,,,1"), "{last}");
}

#[test]
fn cli_run_validate_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.toml");
    std::fs::write(&cfg, "[scenario]\nx_cop = 2.0\n").unwrap();
    let out = dir.path().join("out.csv");
    let policy = dir.path().join("policy.csv");
    let status = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .arg("--policy-out")
        .arg(&policy)
        .args(["--seed", "5"])
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().ends_with(",5"));
    let policy = std::fs::read_to_string(&policy).unwrap();
    assert_eq!(policy.lines().count(), 21);

    let ok = bin()
        .arg("validate")
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(ok.status.success());
    std::fs::write(&cfg, "[scenario]\nkappa = 3\n").unwrap();
    let bad = bin()
        .arg("validate")
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("scenario.kappa"));

    std::fs::write(&cfg, "[simulation]\nr_max = 0.5\n").unwrap();
    let failed = bin()
        .args(["run", "--method", "monte_carlo", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(failed.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&failed.stdout).contains(",failed,"));

    let missing = bin().args(["sweep"]).output().unwrap();
    assert!(!missing.status.success());
}

#[test]
fn cli_sweep_is_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.toml");
    std::fs::write(
        &cfg,
        "[simulation]\ntrials = 3000\n[sweep]\nvariable = \"x_cop\"\nvalues = [1.0, 2.0]\nmethods = [\"both\"]\n",
    )
    .unwrap();
    let run = |threads: &str| {
        let out = bin()
            .env("RAYON_NUM_THREADS", threads)
            .args(["sweep", "--seed", "11", "--config"])
            .arg(&cfg)
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    let one = run("1");
    assert_eq!(one, run("4"));
    assert_eq!(one, run("1"));
    assert_eq!(String::from_utf8_lossy(&one).lines().count(), 5);
}
