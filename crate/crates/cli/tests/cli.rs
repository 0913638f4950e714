use std::path::Path;
use std::process::{Command, Output};

use strokefont::raster::{encode_png, BinaryRaster};

fn strokefont(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_strokefont"))
        .args(args)
        .env("RUST_BACKTRACE", "0")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn missing_input_path_fails_before_work() {
    let dir = tempfile::tempdir().unwrap();
    let o = strokefont(&["eval", "roundtrip", "--input", "/no/such/dir"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("/no/such/dir"));
    assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[test]
fn invalid_ruleset_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"version": 1, "source": "x", "characters": [{"char": "U+0A95", "variants": []}]}"#,
    )
    .unwrap();
    let o = strokefont(&["rules", "validate", "--rules", s(&bad)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("U+0A95"), "{}", stderr(&o));
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let out = dir.path().join("ds.csv");
    std::fs::write(
        &cfg,
        format!(r#"{{"per_class": 3, "seed": 5, "out": "{}"}}"#, s(&out)),
    )
    .unwrap();
    let o = strokefont(&["--config", s(&cfg), "dataset", "synth", "--per-class", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = std::fs::read_to_string(&out).unwrap().lines().count();
    assert_eq!(rows, 12);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("ds.report.json")).unwrap())
            .unwrap();
    assert_eq!(report["seed"], 5);
    assert_eq!(report["per_class"], 2);
}

#[test]
fn unknown_config_key_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"famly_name": "x"}"#).unwrap();
    let o = strokefont(&[
        "--config",
        s(&cfg),
        "dataset",
        "synth",
        "--out",
        s(&dir.path().join("a.csv")),
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("famly_name"));
}

#[test]
fn blank_sheet_names_every_cell() {
    let dir = tempfile::tempdir().unwrap();
    let sheet = dir.path().join("blank.png");
    std::fs::write(
        &sheet,
        encode_png(&BinaryRaster::new(90, 30).unwrap()).unwrap(),
    )
    .unwrap();
    let o = strokefont(&[
        "sheet",
        "segment",
        "--input",
        s(&sheet),
        "--layout",
        "1x3",
        "--chars",
        "U+0A95,U+0A96,U+0A97",
        "--out",
        s(&dir.path().join("crops")),
    ]);
    assert!(!o.status.success());
    let err = stderr(&o);
    for cp in ["U+0A95", "U+0A96", "U+0A97"] {
        assert!(err.contains(cp), "{err}");
    }
}

#[test]
fn sequential_and_parallel_runs_agree() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(strokefont(&["glyph", "generate", "--out", s(&a)])
        .status
        .success());
    assert!(
        strokefont(&["--sequential", "glyph", "generate", "--out", s(&b)])
            .status
            .success()
    );
    for e in std::fs::read_dir(&a).unwrap().flatten() {
        let other = b.join(e.file_name());
        assert_eq!(
            std::fs::read(e.path()).unwrap(),
            std::fs::read(other).unwrap(),
            "{:?}",
            e.file_name()
        );
    }
}

#[test]
fn sheet_to_font_through_a_saved_bank_and_model() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    let ok = |args: &[&str]| {
        let o = strokefont(args);
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
        String::from_utf8_lossy(&o.stdout).into_owned()
    };
    ok(&["sheet", "segment", "--out", s(&p("seeds"))]);
    ok(&[
        "model",
        "train",
        "--algo",
        "knn",
        "--out",
        s(&p("model.json")),
    ]);
    ok(&[
        "stroke",
        "extract",
        "--input",
        s(&p("seeds")),
        "--model",
        s(&p("model.json")),
        "--out",
        s(&p("bank")),
    ]);
    ok(&[
        "glyph",
        "generate",
        "--input",
        s(&p("seeds")),
        "--bank",
        s(&p("bank")),
        "--out",
        s(&p("glyphs")),
    ]);
    let table = ok(&[
        "eval",
        "roundtrip",
        "--input",
        s(&p("glyphs")),
        "--model",
        s(&p("model.json")),
    ]);
    assert!(table.contains("overall"));
    assert!(p("glyphs/roundtrip.json").exists());
    ok(&[
        "font",
        "build",
        "--input",
        s(&p("glyphs")),
        "--out",
        s(&p("font")),
    ]);
    let sfd = std::fs::read_to_string(p("font/StrokefontHand.sfd")).unwrap();
    assert!(sfd.starts_with("SplineFontDB: 3.0"));
    assert_eq!(std::fs::read_dir(p("font/svgs")).unwrap().count(), 26);
}

#[test]
fn learned_rules_regenerate_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    assert!(strokefont(&["glyph", "generate", "--out", s(&p("glyphs"))])
        .status
        .success());
    // samples: the generated glyphs only, not the seed crops
    std::fs::create_dir(p("samples")).unwrap();
    for e in std::fs::read_dir(p("glyphs")).unwrap().flatten() {
        let name = e.file_name().to_string_lossy().into_owned();
        let seed = ["u0AA1_v0.png", "u0AB3_v0.png", "u0A9E_v0.png"].contains(&name.as_str());
        if name.ends_with(".png") && !seed {
            std::fs::copy(e.path(), p("samples").join(&name)).unwrap();
        }
    }
    let o = strokefont(&[
        "rules",
        "learn",
        "--input",
        s(&p("samples")),
        "--out",
        s(&p("learned.json")),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(
        strokefont(&["rules", "validate", "--rules", s(&p("learned.json"))])
            .status
            .success()
    );
    let o = strokefont(&[
        "glyph",
        "generate",
        "--rules",
        s(&p("learned.json")),
        "--out",
        s(&p("again")),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = strokefont(&[
        "eval",
        "roundtrip",
        "--input",
        s(&p("again")),
        "--rules",
        s(&p("learned.json")),
        "--out",
        s(&p("rt.json")),
    ]);
    assert!(o.status.success());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(p("rt.json")).unwrap()).unwrap();
    assert!(v["overall"].as_f64().unwrap() >= 0.8, "{v}");
}
