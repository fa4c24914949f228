use clap::Parser;
use pcyl::args::Cli;
use pcyl::config::{Family, Format, Problem, RunConfig};
use proptest::prelude::*;

#[test]
fn default_config_round_trips_byte_identically() {
    let text = RunConfig::default().to_toml();
    let parsed = RunConfig::from_toml(&text).unwrap();
    assert_eq!(parsed, RunConfig::default());
    assert_eq!(parsed.to_toml(), text);
}

#[test]
fn partial_file_is_completed_with_defaults() {
    let text = r#"
problem = "res"

[profile]
family = "indented"
alpha = 0.85

[tolerances]
target_r = 1e-3
"#;
    let cfg = RunConfig::from_toml(text).unwrap();
    assert_eq!(cfg.problem, Some(Problem::Res));
    assert_eq!(cfg.profile.alpha, Some(0.85));
    assert_eq!(cfg.profile.gamma, 2.0);
    assert_eq!(cfg.tolerances.target_r, 1e-3);
    assert_eq!(cfg.tolerances.contour_r0, RunConfig::default().tolerances.contour_r0);
    let again = RunConfig::from_toml(&cfg.to_toml()).unwrap();
    assert_eq!(again, cfg);
    assert_eq!(again.to_toml(), cfg.to_toml());
    assert_eq!(again.hash(), cfg.hash());
}

#[test]
fn unknown_keys_and_bad_values_are_rejected() {
    assert!(RunConfig::from_toml("[profile]\nalpah = 0.8\n").is_err());
    assert!(RunConfig::from_toml("[nonsense]\nx = 1\n").is_err());
    assert!(RunConfig::from_toml("problem = \"table3\"\n").is_err());
    assert!(RunConfig::from_toml("[modes]\nn_modes = -1\n").is_err());
    assert!(RunConfig::from_toml("[profile]\ngamma = \"two\"\n").is_err());
}

#[test]
fn validation_catches_inconsistent_settings() {
    let ok = |f: &dyn Fn(&mut RunConfig)| {
        let mut c = RunConfig { problem: Some(Problem::Eig), ..RunConfig::default() };
        c.profile.alpha = Some(0.8);
        f(&mut c);
        c.validate()
    };
    assert!(ok(&|_| {}).is_ok());
    assert!(ok(&|c| c.problem = None).is_err());
    assert!(ok(&|c| c.profile.alpha = Some(1.2)).is_err());
    assert!(ok(&|c| c.profile.alpha = None).is_err());
    assert!(ok(&|c| c.profile.gamma = -1.0).is_err());
    assert!(ok(&|c| c.tolerances.target_r = 1.0).is_err());
    assert!(ok(&|c| c.tolerances.target_r = 1e-7).is_err());
    assert!(ok(&|c| c.modes.n_start = 1).is_err());
    assert!(ok(&|c| c.modes.n_modes = Some(0)).is_err());
    assert!(ok(&|c| c.domain.interval = Some([1.0, 1.0])).is_err());
    assert!(ok(&|c| c.profile.family = Family::Pinched).is_err());
    assert!(ok(&|c| {
        c.problem = Some(Problem::Res);
        c.domain.truncate_x = 3.0;
    })
    .is_err());
    assert!(ok(&|c| {
        c.problem = Some(Problem::Scatter);
        c.scatter.omega_max = 7.0;
    })
    .is_err());
    assert!(ok(&|c| {
        c.problem = Some(Problem::RefFd);
        c.fd.nx = 4;
    })
    .is_err());
    assert!(ok(&|c| {
        c.problem = Some(Problem::Sweep);
        c.sweep.alphas = vec![0.8, 1.5];
    })
    .is_err());
    assert!(ok(&|c| {
        c.problem = Some(Problem::Table1);
        c.profile.family = Family::Uniform;
    })
    .is_err());
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(
        &path,
        "problem = \"eig\"\n[profile]\nfamily = \"indented\"\nalpha = 0.7\ngamma = 3.0\n[modes]\nn_modes = 6\n[output]\nformat = \"json\"\n",
    )
    .unwrap();
    let p = path.to_str().unwrap();
    let from_file = Cli::try_parse_from(["pcyl", "--config", p]).unwrap().resolve().unwrap();
    assert_eq!(from_file.problem, Some(Problem::Eig));
    assert_eq!(from_file.profile.alpha, Some(0.7));
    assert_eq!(from_file.modes.n_modes, Some(6));
    assert_eq!(from_file.output.format, Format::Json);

    let cli = Cli::try_parse_from([
        "pcyl",
        "res",
        "--config",
        p,
        "--alpha",
        "0.9",
        "--gamma",
        "2.5",
        "--adaptive",
        "1e-5",
        "--truncate-x",
        "6",
        "--contour-r0",
        "0.2",
        "--target-r",
        "1e-3",
        "--out",
        "x.csv",
        "--format",
        "csv",
    ])
    .unwrap();
    let cfg = cli.resolve().unwrap();
    assert_eq!(cfg.problem, Some(Problem::Res));
    assert_eq!(cfg.profile.alpha, Some(0.9));
    assert_eq!(cfg.profile.gamma, 2.5);
    assert_eq!(cfg.modes.n_modes, None);
    assert_eq!(cfg.modes.adaptive_tol, 1e-5);
    assert_eq!(cfg.domain.truncate_x, 6.0);
    assert_eq!(cfg.tolerances.contour_r0, 0.2);
    assert_eq!(cfg.tolerances.target_r, 1e-3);
    assert_eq!(cfg.output.path.as_deref(), Some(std::path::Path::new("x.csv")));
    assert_eq!(cfg.output.format, Format::Csv);

    let fixed = Cli::try_parse_from(["pcyl", "eig", "--modes", "3"]).unwrap().resolve().unwrap();
    assert_eq!(fixed.modes.n_modes, Some(3));
    assert_eq!(fixed.profile.gamma, 2.0);
    assert_eq!(fixed.domain.truncate_x, 5.4);
    assert_eq!(fixed.tolerances.target_r, 1e-4);
    assert!(Cli::try_parse_from(["pcyl", "eig", "--modes", "3", "--adaptive", "1e-4"]).is_err());
}

#[test]
fn hash_tracks_every_setting() {
    let a = RunConfig::default();
    let mut b = a.clone();
    b.tolerances.rtol = 1e-9;
    assert_ne!(a.hash(), b.hash());
    assert_eq!(a.hash(), RunConfig::default().hash());
    assert_eq!(a.hash().len(), 64);
    let mut c = a.clone();
    c.output.path = Some("elsewhere.csv".into());
    assert_eq!(a.hash(), c.hash());
}

fn arb_config() -> impl Strategy<Value = RunConfig> {
    (
        prop::option::of(prop::sample::select(vec![
            Problem::Eig,
            Problem::Res,
            Problem::Scatter,
            Problem::RefFd,
            Problem::Table1,
            Problem::Table2,
            Problem::Sweep,
        ])),
        prop::option::of(0.0f64..1.0),
        0.1f64..10.0,
        prop::option::of(1usize..40),
        1e-12f64..1.0,
        prop::collection::vec(-2.0f64..2.0, 0..6),
        prop::option::of((0.0f64..1.0, 1.0f64..5.0)),
        any::<bool>(),
    )
        .prop_map(|(problem, alpha, gamma, n_modes, tol, alphas, interval, json)| {
            let mut c = RunConfig { problem, ..RunConfig::default() };
            c.profile.alpha = alpha;
            c.profile.gamma = gamma;
            c.modes.n_modes = n_modes;
            c.modes.adaptive_tol = tol;
            c.tolerances.rtol = tol * 0.37;
            c.sweep.alphas = alphas;
            c.domain.interval = interval.map(|(a, b)| [a, b]);
            c.output.format = if json { Format::Json } else { Format::Csv };
            c
        })
}

proptest! {
    #[test]
    fn serialization_round_trips(cfg in arb_config()) {
        let text = cfg.to_toml();
        let parsed = RunConfig::from_toml(&text).unwrap();
        prop_assert_eq!(&parsed, &cfg);
        prop_assert_eq!(parsed.to_toml(), text);
    }
}
