//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! fails. Set `UPDATE_GOLDEN=1` to rewrite the SVG goldens instead of
//! comparing against them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use strokefont::assets::reference_stroke;
use strokefont::classify::{
    class_table, evaluate, split, summary_table, synthesize_dataset, train, Algo, TrainParams,
};
use strokefont::features::{extract, VECTOR_LEN};
use strokefont::fontio::{export_sfd, parse_sfd, GUJARATI};
use strokefont::par::Execution;
use strokefont::pipeline::build_font;
use strokefont::raster::{connected_components, load_binary, BinaryRaster, Point};
use strokefont::rules::default_ruleset;
use strokefont::strokes::{decompose, detect_endpoints, preprocess_stroke, StrokeClass};
use strokefont::thinning::{adaptive_thin, is_unit_width, zhang_suen};

type Outcome = Result<String, String>;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_strokefont")
}

fn run(args: &[&str]) -> Result<String, String> {
    let out = Command::new(bin())
        .args(args)
        .output()
        .map_err(|e| format!("spawn: {e}"))?;
    if !out.status.success() {
        return Err(format!(
            "`strokefont {}` exited {}: {}",
            args.join(" "),
            out.status,
            String::from_utf8_lossy(&out.stderr)
                .lines()
                .next()
                .unwrap_or("")
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn disc(img: &mut BinaryRaster, cx: i32, cy: i32, r: i32) {
    for y in cy - r..=cy + r {
        for x in cx - r..=cx + r {
            if (x - cx).pow(2) + (y - cy).pow(2) <= r * r && img.in_bounds(x, y) {
                img.put(Point::new(x, y), true);
            }
        }
    }
}

/// A few thick brush walks on a 64×64 canvas.
fn random_blob(seed: u64) -> BinaryRaster {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut img = BinaryRaster::new(64, 64).unwrap();
    for _ in 0..rng.gen_range(1..=3) {
        let (mut x, mut y) = (rng.gen_range(12.0..52.0), rng.gen_range(12.0..52.0));
        let r = rng.gen_range(2..=5);
        let mut heading: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        for _ in 0..rng.gen_range(8..30) {
            disc(&mut img, x as i32, y as i32, r);
            heading += rng.gen_range(-0.6..0.6);
            x = (x + 2.0 * heading.cos()).clamp(8.0, 56.0);
            y = (y + 2.0 * heading.sin()).clamp(8.0, 56.0);
        }
    }
    img
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut cases: Vec<(String, BinaryRaster)> = (0..50)
        .map(|s| (format!("blob {s}"), random_blob(s)))
        .collect();
    for c in StrokeClass::all() {
        let r = reference_stroke(c).map_err(|e| e.to_string())?;
        cases.push((format!("reference class {}", c.get()), r));
    }
    for (name, img) in &cases {
        let thin = adaptive_thin(&zhang_suen(img)).map_err(|e| format!("{name}: {e}"))?;
        check(
            is_unit_width(thin.raster()),
            format!("{name}: not unit width"),
        )?;
        let (a, b) = (
            connected_components(img).len(),
            connected_components(thin.raster()).len(),
        );
        check(a == b, format!("{name}: {a} components became {b}"))?;
    }
    let took = start.elapsed();
    check(took < Duration::from_secs(5), format!("took {took:?}"))?;
    Ok(format!(
        "{} images unit-width, components kept, {took:.2?}",
        cases.len()
    ))
}

type Segment = ((i32, i32), (i32, i32));

fn segments(w: usize, h: usize, segs: &[Segment]) -> BinaryRaster {
    let mut r = BinaryRaster::new(w, h).unwrap();
    for &((x0, y0), (x1, y1)) in segs {
        let n = (x1 - x0).abs().max((y1 - y0).abs());
        for t in 0..=n {
            r.put(
                Point::new(x0 + (x1 - x0) * t / n, y0 + (y1 - y0) * t / n),
                true,
            );
        }
    }
    r
}

fn endpoints_by_count(r: &BinaryRaster) -> Vec<Point> {
    r.ink_points()
        .into_iter()
        .filter(|p| {
            let mut n = 0;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    n += ((dx, dy) != (0, 0) && r.get(p.x + dx, p.y + dy)) as u32;
                }
            }
            n == 1
        })
        .collect()
}

fn criterion_2() -> Outcome {
    let shapes = [
        (
            "+",
            segments(21, 21, &[((2, 10), (18, 10)), ((10, 2), (10, 18))]),
            4,
        ),
        (
            "T",
            segments(21, 21, &[((2, 3), (18, 3)), ((10, 4), (10, 18))]),
            3,
        ),
        (
            "L",
            segments(21, 21, &[((3, 2), (3, 17)), ((4, 17), (18, 17))]),
            1,
        ),
        (
            "X",
            segments(21, 21, &[((2, 2), (18, 18)), ((18, 2), (2, 18))]),
            4,
        ),
        (
            "ladder",
            segments(
                21,
                25,
                &[((4, 2), (4, 22)), ((16, 2), (16, 22)), ((5, 12), (15, 12))],
            ),
            5,
        ),
    ];
    let mut counts = Vec::new();
    for (name, sk, want) in &shapes {
        let strokes = decompose(sk).map_err(|e| format!("{name}: {e}"))?;
        check(
            strokes.len() == *want,
            format!("{name}: {} strokes, want {want}", strokes.len()),
        )?;
        for s in &strokes {
            let e = detect_endpoints(&s.skeleton).len();
            check(e == 2, format!("{name}: a stroke has {e} endpoints"))?;
        }
        check(
            detect_endpoints(sk) == endpoints_by_count(sk),
            format!("{name}: endpoint masks disagree"),
        )?;
        counts.push(strokes.len().to_string());
    }
    for s in 0..20 {
        let sk = adaptive_thin(&zhang_suen(&random_blob(100 + s))).map_err(|e| e.to_string())?;
        check(
            detect_endpoints(sk.raster()) == endpoints_by_count(sk.raster()),
            format!("blob {}: endpoint masks disagree", 100 + s),
        )?;
    }
    Ok(format!(
        "counts +,T,L,X,ladder = {}; masks agree on 25 skeletons",
        counts.join(",")
    ))
}

fn criterion_3() -> Outcome {
    let mut hline = BinaryRaster::new(30, 30).unwrap();
    for x in 1..=28 {
        hline.set(x, 15, true);
    }
    let v = extract(&hline).map_err(|e| e.to_string())?.values();
    let mut expected = vec![0u8; 10];
    expected.extend([10, 1, 1, 1, 10]);
    expected.extend([0u8; 10]);
    check(
        v.to_vec() == expected,
        format!("horizontal line gave {v:?}"),
    )?;

    let ds = synthesize_dataset(20, 7).map_err(|e| e.to_string())?;
    for row in ds.to_rows() {
        check(
            row.len() == VECTOR_LEN + 1,
            format!("row of length {}", row.len()),
        )?;
        let tens = row[..VECTOR_LEN].iter().filter(|&&c| c == 10).count();
        check(tens <= 2, format!("{tens} endpoint entries"))?;
    }
    // the real pipeline on a drawn bar
    let mut bar = BinaryRaster::new(60, 9).unwrap();
    for y in 3..6 {
        for x in 2..58 {
            bar.set(x, y, true);
        }
    }
    let pre = preprocess_stroke(&bar).map_err(|e| e.to_string())?;
    let bv = extract(&pre).map_err(|e| e.to_string())?;
    check(bv.endpoint_count() == 2, "drawn bar: endpoint count")?;
    Ok(format!(
        "hline vector exact; {} synthetic rows length {VECTOR_LEN}, <=2 endpoints",
        ds.len()
    ))
}

fn criterion_4() -> Outcome {
    let ds = synthesize_dataset(100, 42).map_err(|e| e.to_string())?;
    let (tr, te) = split(&ds, 0.2, 42).map_err(|e| e.to_string())?;
    let verify = synthesize_dataset(10, 43).map_err(|e| e.to_string())?;
    check(verify.len() == 60, "verification set size")?;
    let params = TrainParams::default();
    let mut testing = Vec::new();
    let mut verification = Vec::new();
    let mut msg = Vec::new();
    for algo in [Algo::Knn, Algo::Forest] {
        let m = train(&tr, algo, &params).map_err(|e| e.to_string())?;
        let r = evaluate(&m, &te).map_err(|e| e.to_string())?;
        check(
            r.overall_accuracy >= 0.90,
            format!("{algo}: {:.3}", r.overall_accuracy),
        )?;
        msg.push(format!("{algo} {:.3}", r.overall_accuracy));
        verification.push(evaluate(&m, &verify).map_err(|e| e.to_string())?);
        testing.push(r);
    }
    let k1 = train(&tr, Algo::Knn, &TrainParams { k: 1, ..params }).map_err(|e| e.to_string())?;
    let self_acc = evaluate(&k1, &tr)
        .map_err(|e| e.to_string())?
        .overall_accuracy;
    check(
        self_acc == 1.0,
        format!("knn k=1 training accuracy {self_acc}"),
    )?;
    let tables = [
        class_table("Testing", &testing).render(),
        class_table("Verification", &verification).render(),
        summary_table("Summary", &testing, &verification).render(),
    ];
    for t in &tables {
        check(
            t.contains("Class 6") || t.contains("Accuracy"),
            "table shape",
        )?;
    }
    check(
        tables[0]
            .lines()
            .filter(|l| l.starts_with("Class "))
            .count()
            == 6,
        "six class rows",
    )?;
    Ok(format!(
        "{}; knn k=1 train 1.0; tables rendered",
        msg.join(", ")
    ))
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap().flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn criterion_5(work: &Path) -> Outcome {
    let a = work.join("glyphs");
    let b = work.join("glyphs_again");
    run(&[
        "glyph",
        "generate",
        "--seed",
        "42",
        "--out",
        a.to_str().unwrap(),
    ])?;
    run(&[
        "glyph",
        "generate",
        "--seed",
        "42",
        "--out",
        b.to_str().unwrap(),
    ])?;
    let (fa, fb) = (files(&a), files(&b));
    check(fa == fb, "two runs differ")?;
    let rules = default_ruleset();
    let generated: Vec<u32> = rules.characters.keys().copied().collect();
    check(generated.len() == 23, format!("{} rules", generated.len()))?;
    for cp in &generated {
        check(
            fa.contains_key(&format!("u{cp:04X}_v0.png")),
            format!("U+{cp:04X} missing"),
        )?;
    }
    let mut join_only = 0;
    for (cp, rule) in &rules.characters {
        for (v, placements) in rule.variants.iter().enumerate() {
            if placements[1..].iter().all(|p| p.jp.is_some()) {
                let g = load_binary(&a.join(format!("u{cp:04X}_v{v}.png")))
                    .map_err(|e| e.to_string())?;
                let n = connected_components(&g).len();
                check(n == 1, format!("U+{cp:04X} v{v}: {n} components"))?;
                join_only += 1;
            }
        }
    }
    Ok(format!(
        "23 glyphs, byte-identical reruns ({} files), {join_only} join-only glyphs connected",
        fa.len()
    ))
}

fn criterion_6(work: &Path) -> Outcome {
    let glyphs = work.join("glyphs");
    let report = work.join("roundtrip.json");
    run(&[
        "eval",
        "roundtrip",
        "--input",
        glyphs.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ])?;
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let overall = v["overall"].as_f64().ok_or("no overall")?;
    let control = v["negative_control"]["overall"]
        .as_f64()
        .ok_or("no control")?;
    let rows = v["report"]["rows"].as_array().map_or(0, Vec::len);
    check(rows == 23, format!("{rows} rows"))?;
    check(overall >= 0.80, format!("overall {overall:.4}"))?;
    check(control <= 0.20, format!("control {control:.4}"))?;
    Ok(format!(
        "overall {overall:.4}, scrambled control {control:.4}"
    ))
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/svgs")
}

fn criterion_7(work: &Path) -> Outcome {
    let glyphs = work.join("glyphs");
    let font = work.join("font");
    run(&[
        "font",
        "build",
        "--input",
        glyphs.to_str().unwrap(),
        "--out",
        font.to_str().unwrap(),
        "--family-name",
        "Strokefont Hand",
    ])?;
    let sfd =
        std::fs::read_to_string(font.join("StrokefontHand.sfd")).map_err(|e| e.to_string())?;
    check(sfd.starts_with("SplineFontDB: 3.0"), "SFD header")?;
    let blocks = sfd.lines().filter(|l| l.starts_with("StartChar")).count();
    check(blocks == 26, format!("{blocks} glyph blocks"))?;
    let parsed = parse_sfd(&sfd).map_err(|e| e.to_string())?;
    check(
        parsed.glyphs.keys().all(|cp| GUJARATI.contains(cp)),
        "codepoint outside the Gujarati block",
    )?;
    check(
        export_sfd(&parsed).map_err(|e| e.to_string())? == sfd,
        "re-export differs",
    )?;

    // independent rebuild from the same glyph files
    let mut imgs = BTreeMap::new();
    for e in std::fs::read_dir(&glyphs)
        .map_err(|e| e.to_string())?
        .flatten()
    {
        let name = e.file_name().to_string_lossy().into_owned();
        if let Some(hex) = name
            .strip_prefix('u')
            .and_then(|n| n.strip_suffix("_v0.png"))
        {
            let cp = u32::from_str_radix(hex, 16).map_err(|e| e.to_string())?;
            imgs.insert(cp, load_binary(&e.path()).map_err(|e| e.to_string())?);
        }
    }
    let (fp, _) = build_font(&imgs, "Strokefont Hand", 1.0, Execution::Sequential)
        .map_err(|e| e.to_string())?;
    check(
        parsed == fp,
        "parsed contours differ from the traced glyphs",
    )?;

    let got = files(&font.join("svgs"));
    let gold = golden_dir();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(&gold).map_err(|e| e.to_string())?;
        for (name, bytes) in &got {
            std::fs::write(gold.join(name), bytes).map_err(|e| e.to_string())?;
        }
    }
    let want = files(&gold);
    check(!want.is_empty(), "no golden SVGs")?;
    check(got.len() == 26, format!("{} SVGs", got.len()))?;
    for (name, bytes) in &got {
        check(
            want.get(name) == Some(bytes),
            format!("{name} differs from golden"),
        )?;
    }
    Ok(format!(
        "26 glyph blocks, exact parse round trip, {} SVGs match goldens",
        got.len()
    ))
}

fn main() {
    let start = Instant::now();
    let work = tempfile::tempdir().expect("temp dir");
    let results: Vec<(u8, &str, Outcome)> = vec![
        (1, "thinning invariant", criterion_1()),
        (2, "stroke decomposition", criterion_2()),
        (3, "feature pipeline", criterion_3()),
        (4, "classification", criterion_4()),
        (5, "end-to-end generation", criterion_5(work.path())),
        (6, "round-trip evaluation", criterion_6(work.path())),
        (7, "font export", criterion_7(work.path())),
    ];
    let took = start.elapsed();
    let mut failed = 0;
    for (n, name, r) in &results {
        match r {
            Ok(m) => println!("PASS criterion {n} ({name}): {m}"),
            Err(m) => {
                failed += 1;
                println!("FAIL criterion {n} ({name}): {m}")
            }
        }
    }
    if took < Duration::from_secs(60) {
        println!("PASS criterion 8 (wall clock): acceptance suite in {took:.2?}, no network");
    } else {
        failed += 1;
        println!("FAIL criterion 8 (wall clock): {took:.2?}");
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
