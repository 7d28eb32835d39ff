use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use proptest::prelude::*;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn example(rel: &str) -> PathBuf {
    root().join("corpora/running_example").join(rel)
}

fn run(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_anflo"));
    cmd.args(args).env_remove("ANFLO_SEED");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("run anflo")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn learn_example(out: &Path, extra: &[&str]) -> Output {
    let corpus = example("trusted");
    let labels = example("topic_labels.txt");
    let mut args = vec![
        "learn",
        "--corpus",
        s(&corpus),
        "--topic-labels",
        s(&labels),
        "--k",
        "3",
        "--out",
        s(out),
    ];
    args.extend(extra);
    run(&args, &[])
}

#[test]
fn flows_prints_each_pair_with_optional_witness() {
    let bundle = example("trusted/travel/besttravel.app");
    let o = run(&["flows", s(&bundle)], &[]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "App: com.example.besttravel\n  1: Contacts -> SMS\n  2: GPS -> Internet\n"
    );
    let o = run(&["flows", "--verbose", s(&bundle)], &[]);
    assert!(stdout(&o).contains("via MainActivity#0 => "));
}

#[test]
fn flows_reports_bad_bundles_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.app");
    std::fs::write(
        &bad,
        "@id bad\n@description\nx\n@program\ncomponent A public {\n y = source nope\n}\n",
    )
    .unwrap();
    let good = example("aua/triporganizer.app");
    let o = run(&["flows", s(&bad), s(&good)], &[]);
    assert_eq!(o.status.code(), Some(5));
    assert!(stdout(&o).contains("App: com.example.triporganizer"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope"));
}

#[test]
fn learn_classify_bench_and_info() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    let o = learn_example(&model, &["--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("Travel"));

    let trip = example("aua/triporganizer.app");
    let quiet = example("aua/quietmaps.app");
    let o = run(&["classify", "--model", s(&model), s(&trip)], &[]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("verdict: anomalous"));
    assert!(text.contains("*  1: Contacts -> Internet"));
    assert!(text.contains("*  2: GPS -> Bluetooth"));
    assert!(text.contains("   3: Contacts -> SMS"));

    let o = run(&["classify", "--model", s(&model), s(&quiet)], &[]);
    assert_eq!(o.status.code(), Some(0));

    // Parallel batches produce the same bytes as sequential ones.
    let seq = run(
        &[
            "classify",
            "--model",
            s(&model),
            "--format",
            "json",
            s(&trip),
            s(&quiet),
        ],
        &[],
    );
    let par = run(
        &[
            "classify",
            "--model",
            s(&model),
            "--format",
            "json",
            "--jobs",
            "4",
            s(&trip),
            s(&quiet),
        ],
        &[],
    );
    assert_eq!(seq.stdout, par.stdout);
    assert!(stdout(&seq).contains("\"timing_ms\": null"));
    let timed = run(
        &[
            "classify",
            "--model",
            s(&model),
            "--format",
            "json",
            "--timing",
            s(&trip),
        ],
        &[],
    );
    assert!(!stdout(&timed).contains("\"timing_ms\": null"));

    let o = run(&["bench", "--model", s(&model), s(&trip)], &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("n=1 "));
    assert!(stdout(&o).contains("stddev_ms=0.000"));
    let o = run(&["bench", "--model", s(&model)], &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("n=0 mean_ms=0.000"));

    let o = run(&["model", "info", s(&model)], &[]);
    assert_eq!(o.status.code(), Some(0));
    let info = stdout(&o);
    assert!(info.contains("[Travel]"));
    assert!(info.contains("tau 5.5"));
    let o = run(&["model", "info", s(&dir.path().join("nope.json"))], &[]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn missing_bundle_is_a_per_bundle_error() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    learn_example(&model, &[]);
    let trip = example("aua/triporganizer.app");
    let missing = dir.path().join("missing.app");
    let o = run(&["classify", "--model", s(&model), s(&missing)], &[]);
    assert_eq!(o.status.code(), Some(5));
    let o = run(
        &["classify", "--model", s(&model), s(&missing), s(&trip)],
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("1 anomalous, 1 errors"));
}

#[test]
fn seed_comes_from_flag_config_or_environment() {
    let dir = tempfile::tempdir().unwrap();
    let by_flag = dir.path().join("flag.json");
    let by_env = dir.path().join("env.json");
    let by_cfg = dir.path().join("cfg.json");
    let default = dir.path().join("default.json");
    let fast = [
        "--train-iters",
        "50",
        "--infer-iters",
        "20",
        "--burn-in",
        "5",
    ];
    let mut flag_args = fast.to_vec();
    flag_args.extend(["--seed", "9"]);
    learn_example(&by_flag, &flag_args);

    let corpus = example("trusted");
    let labels = example("topic_labels.txt");
    let base = |out: &Path| {
        let mut a = vec![
            "learn",
            "--corpus",
            s(&corpus),
            "--topic-labels",
            s(&labels),
            "--k",
            "3",
        ];
        a.extend(fast);
        a.extend(["--out", s(out)]);
        a.iter().map(|x| x.to_string()).collect::<Vec<_>>()
    };
    let args = base(&by_env);
    let o = run(
        &args.iter().map(String::as_str).collect::<Vec<_>>(),
        &[("ANFLO_SEED", "9")],
    );
    assert_eq!(o.status.code(), Some(0));

    let cfg = dir.path().join("anflo.toml");
    std::fs::write(&cfg, "seed = 9\nstrategy = \"topic\"\n").unwrap();
    let mut args = base(&by_cfg);
    args.extend(["--config".into(), s(&cfg).into()]);
    // The config value wins over the environment.
    let o = run(
        &args.iter().map(String::as_str).collect::<Vec<_>>(),
        &[("ANFLO_SEED", "1")],
    );
    assert_eq!(o.status.code(), Some(0));

    let args = base(&default);
    run(&args.iter().map(String::as_str).collect::<Vec<_>>(), &[]);

    let read = |p: &Path| std::fs::read(p).unwrap();
    assert_eq!(read(&by_flag), read(&by_env));
    assert_eq!(read(&by_flag), read(&by_cfg));
    assert_ne!(read(&by_flag), read(&default));
}

#[test]
fn config_file_supplies_paths_and_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("anflo.toml");
    std::fs::write(
        &cfg,
        format!(
            "corpus = \"{}\"\nout = \"model.json\"\nstrategy = \"category\"\n",
            s(&example("trusted"))
        ),
    )
    .unwrap();
    let o = run(&["learn", "--config", s(&cfg)], &[]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    // Relative paths resolve against the config file's directory.
    assert!(dir.path().join("model.json").exists());
    assert!(stdout(&o).contains("Travel"));

    // Flags override the file.
    let o = run(&["learn", "--config", s(&cfg), "--strategy", "single"], &[]);
    assert!(stdout(&o).contains("ALL"));

    std::fs::write(&cfg, "corpus = \"x\"\ncolour = \"red\"\n").unwrap();
    let o = run(&["learn", "--config", s(&cfg)], &[]);
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn learn_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    std::fs::create_dir(&corpus).unwrap();
    std::fs::write(corpus.join("a.app"), "@id a\n@description\ntoo short\n").unwrap();
    let out = dir.path().join("m.json");
    let o = run(&["learn", "--corpus", s(&corpus), "--out", s(&out)], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());

    let catalog = dir.path().join("catalog.txt");
    std::fs::write(&catalog, "getLastKnownLocation -> source GPS\n").unwrap();
    let o = run(
        &[
            "learn",
            "--corpus",
            s(&example("trusted")),
            "--catalog",
            s(&catalog),
            "--out",
            s(&out),
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(3));

    std::fs::write(
        &catalog,
        "IPC -> both IPC\ngetLastKnownLocation -> source GPS\n",
    )
    .unwrap();
    let o = run(
        &[
            "learn",
            "--corpus",
            s(&example("trusted")),
            "--catalog",
            s(&catalog),
            "--strategy",
            "single",
            "--out",
            s(&out),
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(3), "unknown api in a trusted app");

    let o = run(&["learn", "--corpus", s(&corpus)], &[]);
    assert_eq!(o.status.code(), Some(64));
    let o = run(&["--help"], &[]);
    assert_eq!(o.status.code(), Some(0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Whatever is in the model file, an unreadable model always exits 4.
    #[test]
    fn corrupt_models_exit_4(junk in "[ -~]{0,64}") {
        let dir = tempfile::tempdir().unwrap();
        let model = dir.path().join("m.json");
        std::fs::write(&model, &junk).unwrap();
        let o = run(&["classify", "--model", s(&model), s(&example("aua/quietmaps.app"))], &[]);
        prop_assert_eq!(o.status.code(), Some(4));
    }
}
