use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::json;
use strokefont::assets;
use strokefont::classify::{
    class_table, evaluate_with, split, summary_table, synthesize_with, train, Algo, Dataset,
    EvalReport, Model, Perturbation, TrainParams,
};
use strokefont::compose::StrokeBank;
use strokefont::fontio::{export_sfd, parse_sfd};
use strokefont::par::Execution;
use strokefont::pipeline::{
    bank_files, build_bank, build_font, bundled_seeds, default_model, generate_glyph_set,
    ingest_sheet, label_seed_strokes, learn_rules, load_bank, run_roundtrip_eval, scramble_ruleset,
    SheetLayout, DEFAULT_PER_CLASS,
};
use strokefont::raster::{encode_png, gray_from_bytes, load_gray, BinaryRaster};
use strokefont::rules::{
    default_ruleset, format_codepoint, load_ruleset, parse_codepoint, save_ruleset, RuleSet,
    DEFAULT_CLOSENESS,
};

use crate::config::RunConfig;
use crate::io::{
    read_char_images, read_glyphs, read_seed_dir, report_path, write_atomic, write_json,
};

fn load_model(cfg: &RunConfig) -> Result<Model> {
    match &cfg.model {
        Some(p) => Ok(Model::from_json(&std::fs::read_to_string(p)?)?),
        None => Ok(default_model(cfg.seed())?),
    }
}

fn load_rules(cfg: &RunConfig) -> Result<RuleSet> {
    match &cfg.rules {
        Some(p) => load_ruleset(&std::fs::read_to_string(p)?)
            .with_context(|| format!("loading {}", p.display())),
        None => Ok(default_ruleset()),
    }
}

fn seeds(cfg: &RunConfig) -> Result<BTreeMap<u32, BinaryRaster>> {
    match &cfg.input {
        Some(dir) => read_seed_dir(dir),
        None => Ok(bundled_seeds()?),
    }
}

fn parse_chars(list: &str) -> Result<Vec<u32>> {
    list.split([',', ' '])
        .filter(|s| !s.is_empty())
        .map(|s| parse_codepoint(s).with_context(|| format!("bad codepoint {s:?}")))
        .collect()
}

fn params(cfg: &RunConfig) -> TrainParams {
    let d = TrainParams::default();
    TrainParams {
        k: cfg.k.unwrap_or(d.k),
        trees: cfg.trees.unwrap_or(d.trees),
        seed: cfg.seed(),
        ..d
    }
}

fn dataset(cfg: &RunConfig, exec: Execution) -> Result<Dataset> {
    match &cfg.input {
        Some(p) => Ok(Dataset::read_csv(File::open(p)?)?),
        None => Ok(synthesize_with(
            cfg.per_class.unwrap_or(DEFAULT_PER_CLASS),
            cfg.seed(),
            &Perturbation::default(),
            exec,
        )?),
    }
}

pub fn sheet_segment(cfg: &RunConfig) -> Result<()> {
    let out = cfg.out()?;
    let scan = match &cfg.input {
        Some(p) => load_gray(p)?,
        None => gray_from_bytes(assets::sheet_png())?,
    };
    let (rows, cols) = SheetLayout::parse_grid(cfg.layout.as_deref().unwrap_or("1x3"))?;
    let chars = match &cfg.chars {
        Some(list) => parse_chars(list)?,
        None => assets::seed_codepoints(),
    };
    let layout = SheetLayout::new(rows, cols, chars)?;
    let got = ingest_sheet(&scan, &layout)?;
    for w in &got.warnings {
        eprintln!("warning: {w}");
    }
    let mut crops = Vec::new();
    for (cp, crop) in &got.crops {
        let file = format!("u{cp:04X}.png");
        write_atomic(&out.join(&file), &encode_png(crop)?)?;
        println!(
            "{}  {}x{}  {}",
            format_codepoint(*cp),
            crop.width(),
            crop.height(),
            file
        );
        crops.push(
            json!({"char": format_codepoint(*cp), "file": file, "width": crop.width(),
                          "height": crop.height(), "ink": crop.ink_count()}),
        );
    }
    write_json(
        &report_path(out, true),
        &json!({"layout": layout, "crops": crops, "warnings": got.warnings}),
    )
}

pub fn stroke_extract(cfg: &RunConfig, exec: Execution) -> Result<()> {
    let out = cfg.out()?;
    let model = load_model(cfg)?;
    let strokes = label_seed_strokes(&seeds(cfg)?, &model, exec)?;
    let bank = StrokeBank::from_strokes(strokes.clone())?;
    let files = bank_files(&strokes, bank.pen_width)?;
    for (name, bytes) in &files {
        write_atomic(&out.join(name), bytes)?;
    }
    println!("{:<8} {:>5} {:>6}  file", "char", "class", "extent");
    let mut rows = Vec::new();
    for (s, (file, _)) in strokes.iter().zip(&files) {
        let ch = s.source_char.map(format_codepoint).unwrap_or_default();
        let class = s.class_label.map_or(0, |c| c.get());
        println!("{ch:<8} {class:>5} {:>6}  {file}", s.extent());
        rows.push(json!({"char": ch, "class": class, "extent": s.extent(), "file": file}));
    }
    let missing = bank.missing();
    if !missing.is_empty() {
        eprintln!("warning: bank has no stroke of classes {missing:?}");
    }
    write_json(
        &report_path(out, true),
        &json!({"strokes": rows, "missing_classes": missing, "pen_width": bank.pen_width}),
    )
}

pub fn dataset_synth(cfg: &RunConfig, exec: Execution) -> Result<()> {
    let out = cfg.out()?;
    let per_class = cfg.per_class.unwrap_or(DEFAULT_PER_CLASS);
    let ds = synthesize_with(per_class, cfg.seed(), &Perturbation::default(), exec)?;
    let mut buf = Vec::new();
    ds.write_csv(&mut buf)?;
    write_atomic(out, &buf)?;
    println!("{} rows, class counts {:?}", ds.len(), ds.class_counts());
    write_json(
        &report_path(out, false),
        &json!({"rows": ds.len(), "per_class": per_class, "seed": cfg.seed(),
                "class_counts": ds.class_counts(), "perturbation": Perturbation::default()}),
    )
}

pub fn model_train(cfg: &RunConfig, exec: Execution) -> Result<()> {
    let out = cfg.out()?;
    let algo: Algo = cfg.algo.as_deref().unwrap_or("knn").parse()?;
    let ds = dataset(cfg, exec)?;
    let frac = cfg.test_fraction.unwrap_or(0.0);
    let (train_set, test_set) = if frac > 0.0 {
        let (a, b) = split(&ds, frac, cfg.seed())?;
        (a, Some(b))
    } else {
        (ds, None)
    };
    let model = train(&train_set, algo, &params(cfg))?;
    write_atomic(out, model.to_json()?.as_bytes())?;
    let report = match &test_set {
        Some(t) => Some(evaluate_with(&model, t, exec)?),
        None => None,
    };
    println!("{algo} trained on {} rows", train_set.len());
    if let Some(r) = &report {
        println!(
            "held-out accuracy {:.4} on {} rows",
            r.overall_accuracy,
            test_set.as_ref().map_or(0, Dataset::len)
        );
    }
    write_json(
        &report_path(out, false),
        &json!({"algo": algo, "params": params(cfg), "training_rows": train_set.len(), "test": report}),
    )
}

pub fn model_eval(cfg: &RunConfig, exec: Execution) -> Result<()> {
    let ds = dataset(cfg, exec)?;
    let verify_n = cfg.verify.unwrap_or(10);
    let verification = synthesize_with(verify_n, cfg.seed() + 1, &Perturbation::default(), exec)?;
    let (testing, checked): (Vec<EvalReport>, Vec<EvalReport>) = if let Some(p) = &cfg.model {
        let m = Model::from_json(&std::fs::read_to_string(p)?)?;
        (
            vec![evaluate_with(&m, &ds, exec)?],
            vec![evaluate_with(&m, &verification, exec)?],
        )
    } else {
        let algos: Vec<Algo> = match cfg.algo.as_deref() {
            None | Some("all") => Algo::ALL.to_vec(),
            Some(a) => vec![a.parse()?],
        };
        let (train_set, test_set) = split(&ds, cfg.test_fraction.unwrap_or(0.2), cfg.seed())?;
        let mut t = Vec::new();
        let mut v = Vec::new();
        for a in algos {
            let m = train(&train_set, a, &params(cfg))?;
            t.push(evaluate_with(&m, &test_set, exec)?);
            v.push(evaluate_with(&m, &verification, exec)?);
        }
        (t, v)
    };
    println!(
        "{}",
        class_table("Testing accuracy per class", &testing).render()
    );
    println!(
        "{}",
        class_table(
            &format!("Verification accuracy per class ({verify_n} per class)"),
            &checked
        )
        .render()
    );
    println!("{}", summary_table("Summary", &testing, &checked).render());
    if let Some(out) = &cfg.out {
        write_json(out, &json!({"testing": testing, "verification": checked}))?;
    }
    Ok(())
}

pub fn rules_learn(cfg: &RunConfig, exec: Execution) -> Result<()> {
    let out = cfg.out()?;
    let input = cfg
        .input
        .as_deref()
        .context("--input (directory of character samples) is required")?;
    let samples = read_char_images(input)?;
    let model = load_model(cfg)?;
    let rs = learn_rules(&samples, &model, DEFAULT_CLOSENESS, exec)?;
    write_atomic(out, save_ruleset(&rs)?.as_bytes())?;
    for r in rs.rules() {
        println!("{r}");
    }
    let counts: BTreeMap<String, usize> = samples
        .iter()
        .map(|(cp, v)| (format_codepoint(*cp), v.len()))
        .collect();
    write_json(
        &report_path(out, false),
        &json!({"rules": rs.len(), "samples": counts}),
    )
}

pub fn rules_validate(cfg: &RunConfig) -> Result<()> {
    let path = cfg
        .rules
        .as_deref()
        .or(cfg.input.as_deref())
        .context("--rules is required")?;
    let result = load_ruleset(&std::fs::read_to_string(path)?);
    let report = match &result {
        Ok(rs) => json!({"valid": true, "rules": rs.len(),
            "two_variant": rs.rules().filter(|r| r.variants.len() == 2).count()}),
        Err(e) => json!({"valid": false, "error": e.to_string()}),
    };
    if let Some(out) = &cfg.out {
        write_json(out, &report)?;
    }
    match result {
        Ok(rs) => {
            println!("{}: {} rules, valid", path.display(), rs.len());
            Ok(())
        }
        Err(e) => bail!("{}: {e}", path.display()),
    }
}

pub fn glyph_generate(cfg: &RunConfig, exec: Execution) -> Result<()> {
    let out = cfg.out()?;
    let seeds = seeds(cfg)?;
    let rules = load_rules(cfg)?;
    let bank = match &cfg.bank {
        Some(dir) => StrokeBank::from_strokes(load_bank(dir)?)?,
        None => build_bank(&seeds, &load_model(cfg)?, exec)?,
    };
    let set = generate_glyph_set(&seeds, &bank, &rules, exec)?;
    let mut manifest = Vec::new();
    for (g, entry) in &set {
        write_atomic(&out.join(&entry.file), &encode_png(&g.raster)?)?;
        let classes: Vec<String> = entry.classes.iter().map(u8::to_string).collect();
        println!(
            "{:<8} v{} {:<12} {}",
            entry.character,
            entry.variant,
            if entry.seed {
                "seed".to_string()
            } else {
                classes.join(",")
            },
            entry.file
        );
        manifest.push(entry.clone());
    }
    write_json(&out.join("manifest.json"), &manifest)?;
    let bank_counts: BTreeMap<u8, usize> = bank
        .classes()
        .iter()
        .map(|c| (c.get(), bank.get(*c).len()))
        .collect();
    write_json(
        &report_path(out, true),
        &json!({"glyphs": set.len(), "generated": set.iter().filter(|(_, e)| !e.seed && e.variant == 0).count(),
                "seeds": seeds.len(), "rules": rules.len(), "bank": bank_counts, "seed": cfg.seed()}),
    )
}

pub fn font_build(cfg: &RunConfig, exec: Execution) -> Result<()> {
    let out = cfg.out()?;
    let input = cfg
        .input
        .as_deref()
        .context("--input (glyph directory) is required")?;
    let family = cfg
        .family_name
        .clone()
        .unwrap_or_else(|| "Strokefont Hand".to_string());
    let epsilon = cfg.epsilon.unwrap_or(1.0);
    let glyphs = read_glyphs(input, true)?;
    let (fp, svgs) = build_font(&glyphs, &family, epsilon, exec)?;
    let sfd = export_sfd(&fp)?;
    let reparsed = parse_sfd(&sfd)? == fp;
    let file_stem: String = family.split_whitespace().collect();
    write_atomic(&out.join(format!("{file_stem}.sfd")), sfd.as_bytes())?;
    for (cp, svg) in &svgs {
        write_atomic(&out.join(format!("svgs/u{cp:04X}.svg")), svg.as_bytes())?;
    }
    let contours: BTreeMap<String, usize> = fp
        .glyphs
        .iter()
        .map(|(cp, g)| (format_codepoint(*cp), g.contours.len()))
        .collect();
    println!(
        "{} glyphs -> {}",
        fp.glyphs.len(),
        out.join(format!("{file_stem}.sfd")).display()
    );
    println!("SFD re-read identical: {reparsed}");
    write_json(
        &report_path(out, true),
        &json!({"family": family, "glyphs": fp.glyphs.len(), "epsilon": epsilon,
                "contours": contours, "sfd_round_trip": reparsed}),
    )?;
    anyhow::ensure!(
        reparsed,
        "SFD output did not parse back to the same contours"
    );
    Ok(())
}

pub fn eval_roundtrip(cfg: &RunConfig, exec: Execution) -> Result<()> {
    let input = cfg
        .input
        .as_deref()
        .context("--input (glyph directory) is required")?;
    let glyphs = read_glyphs(input, false)?;
    let rules = load_rules(cfg)?;
    let model = load_model(cfg)?;
    let report = run_roundtrip_eval(&glyphs, &rules, &model, exec)?;
    let control = run_roundtrip_eval(&glyphs, &scramble_ruleset(&rules), &model, exec)?;
    print!("{}", report.render());
    println!(
        "negative control (scrambled rules): overall {:.4}",
        control.overall
    );
    let default_out = input.join("roundtrip.json");
    let out: &Path = cfg.out.as_deref().unwrap_or(&default_out);
    write_json(
        out,
        &json!({"overall": report.overall, "report": report,
                "negative_control": {"overall": control.overall, "passed": control.passed}}),
    )
}
