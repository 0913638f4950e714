//! `strokefont`: handwritten Gujarati font generation from a few seed
//! characters.
//!
//! Typical run:
//!
//! ```text
//! strokefont sheet segment --out seeds/            # bundled 1×3 seed sheet
//! strokefont stroke extract --input seeds/ --out bank/
//! strokefont glyph generate --input seeds/ --bank bank/ --out glyphs/
//! strokefont eval roundtrip --input glyphs/
//! strokefont font build --input glyphs/ --out font/ --family-name "My Hand"
//! ```

mod commands;
mod config;
mod io;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use strokefont::par::Execution;

use crate::config::RunConfig;

#[derive(Parser, Debug)]
#[command(
    name = "strokefont",
    version,
    about = "Handwritten Gujarati font generation"
)]
struct Cli {
    /// JSON file with default values for any flag (flags win).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run every stage on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    group: Group,
}

#[derive(Subcommand, Debug)]
enum Group {
    /// Sample-sheet handling.
    Sheet {
        #[command(subcommand)]
        cmd: SheetCmd,
    },
    /// Stroke extraction into a labelled bank.
    Stroke {
        #[command(subcommand)]
        cmd: StrokeCmd,
    },
    /// Synthetic training data.
    Dataset {
        #[command(subcommand)]
        cmd: DatasetCmd,
    },
    /// Stroke classifiers.
    Model {
        #[command(subcommand)]
        cmd: ModelCmd,
    },
    /// Composition rules.
    Rules {
        #[command(subcommand)]
        cmd: RulesCmd,
    },
    /// Glyph synthesis.
    Glyph {
        #[command(subcommand)]
        cmd: GlyphCmd,
    },
    /// Font output.
    Font {
        #[command(subcommand)]
        cmd: FontCmd,
    },
    /// Self-evaluation.
    Eval {
        #[command(subcommand)]
        cmd: EvalCmd,
    },
}

#[derive(Subcommand, Debug)]
enum SheetCmd {
    /// Cut a scanned sheet into one image per character.
    Segment(SegmentArgs),
}

#[derive(Subcommand, Debug)]
enum StrokeCmd {
    /// Extract and classify the strokes of seed characters.
    Extract(ExtractArgs),
}

#[derive(Subcommand, Debug)]
enum DatasetCmd {
    /// Write a synthetic stroke dataset as CSV.
    Synth(SynthArgs),
}

#[derive(Subcommand, Debug)]
enum ModelCmd {
    /// Train a classifier.
    Train(TrainArgs),
    /// Evaluate one model, or compare all classifiers on a split.
    Eval(ModelEvalArgs),
}

#[derive(Subcommand, Debug)]
enum RulesCmd {
    /// Learn composition rules from character sample images.
    Learn(LearnArgs),
    /// Check a ruleset file.
    Validate(ValidateArgs),
}

#[derive(Subcommand, Debug)]
enum GlyphCmd {
    /// Generate every ruleset character from the seed strokes.
    Generate(GenerateArgs),
}

#[derive(Subcommand, Debug)]
enum FontCmd {
    /// Trace glyphs and write an SFD font plus SVGs.
    Build(FontArgs),
}

#[derive(Subcommand, Debug)]
enum EvalCmd {
    /// Re-extract strokes from generated glyphs and compare with the rules.
    Roundtrip(RoundtripArgs),
}

#[derive(Args, Debug, Default)]
struct Io {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct Seed {
    /// Seed for every stochastic stage.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug, Default)]
struct ModelRef {
    /// Model JSON; without it a k-NN is trained on synthetic strokes.
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct RulesRef {
    /// Ruleset JSON; the bundled ruleset by default.
    #[arg(long)]
    rules: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SegmentArgs {
    #[command(flatten)]
    io: Io,
    /// Grid as RxC.
    #[arg(long)]
    layout: Option<String>,
    /// Expected characters in reading order, e.g. U+0AA1,U+0AB3.
    #[arg(long)]
    chars: Option<String>,
}

#[derive(Args, Debug)]
struct ExtractArgs {
    #[command(flatten)]
    io: Io,
    #[command(flatten)]
    seed: Seed,
    #[command(flatten)]
    model: ModelRef,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[command(flatten)]
    io: Io,
    #[command(flatten)]
    seed: Seed,
    #[arg(long)]
    per_class: Option<usize>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    io: Io,
    #[command(flatten)]
    seed: Seed,
    /// knn, tree, nb or forest.
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    trees: Option<usize>,
    /// Hold out this stratified fraction and report accuracy on it.
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    per_class: Option<usize>,
}

#[derive(Args, Debug)]
struct ModelEvalArgs {
    #[command(flatten)]
    io: Io,
    #[command(flatten)]
    seed: Seed,
    #[command(flatten)]
    model: ModelRef,
    /// knn, tree, nb, forest or all.
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    per_class: Option<usize>,
    /// Samples per class in the verification run.
    #[arg(long)]
    verify: Option<usize>,
}

#[derive(Args, Debug)]
struct LearnArgs {
    #[command(flatten)]
    io: Io,
    #[command(flatten)]
    seed: Seed,
    #[command(flatten)]
    model: ModelRef,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[command(flatten)]
    io: Io,
    #[command(flatten)]
    rules: RulesRef,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[command(flatten)]
    io: Io,
    #[command(flatten)]
    seed: Seed,
    #[command(flatten)]
    model: ModelRef,
    #[command(flatten)]
    rules: RulesRef,
    /// Stroke bank directory from `stroke extract`.
    #[arg(long)]
    bank: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FontArgs {
    #[command(flatten)]
    io: Io,
    /// Douglas-Peucker tolerance in em units.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    family_name: Option<String>,
}

#[derive(Args, Debug)]
struct RoundtripArgs {
    #[command(flatten)]
    io: Io,
    #[command(flatten)]
    seed: Seed,
    #[command(flatten)]
    model: ModelRef,
    #[command(flatten)]
    rules: RulesRef,
}

impl Io {
    fn flags(&self) -> RunConfig {
        RunConfig {
            input: self.input.clone(),
            out: self.out.clone(),
            ..RunConfig::default()
        }
    }
}

fn flags(group: &Group) -> RunConfig {
    match group {
        Group::Sheet {
            cmd: SheetCmd::Segment(a),
        } => RunConfig {
            layout: a.layout.clone(),
            chars: a.chars.clone(),
            ..a.io.flags()
        },
        Group::Stroke {
            cmd: StrokeCmd::Extract(a),
        } => RunConfig {
            seed: a.seed.seed,
            model: a.model.model.clone(),
            ..a.io.flags()
        },
        Group::Dataset {
            cmd: DatasetCmd::Synth(a),
        } => RunConfig {
            seed: a.seed.seed,
            per_class: a.per_class,
            ..a.io.flags()
        },
        Group::Model {
            cmd: ModelCmd::Train(a),
        } => RunConfig {
            seed: a.seed.seed,
            algo: a.algo.clone(),
            k: a.k,
            trees: a.trees,
            test_fraction: a.test_fraction,
            per_class: a.per_class,
            ..a.io.flags()
        },
        Group::Model {
            cmd: ModelCmd::Eval(a),
        } => RunConfig {
            seed: a.seed.seed,
            model: a.model.model.clone(),
            algo: a.algo.clone(),
            k: a.k,
            trees: a.trees,
            test_fraction: a.test_fraction,
            per_class: a.per_class,
            verify: a.verify,
            ..a.io.flags()
        },
        Group::Rules {
            cmd: RulesCmd::Learn(a),
        } => RunConfig {
            seed: a.seed.seed,
            model: a.model.model.clone(),
            ..a.io.flags()
        },
        Group::Rules {
            cmd: RulesCmd::Validate(a),
        } => RunConfig {
            rules: a.rules.rules.clone(),
            ..a.io.flags()
        },
        Group::Glyph {
            cmd: GlyphCmd::Generate(a),
        } => RunConfig {
            seed: a.seed.seed,
            model: a.model.model.clone(),
            rules: a.rules.rules.clone(),
            bank: a.bank.clone(),
            ..a.io.flags()
        },
        Group::Font {
            cmd: FontCmd::Build(a),
        } => RunConfig {
            epsilon: a.epsilon,
            family_name: a.family_name.clone(),
            ..a.io.flags()
        },
        Group::Eval {
            cmd: EvalCmd::Roundtrip(a),
        } => RunConfig {
            seed: a.seed.seed,
            model: a.model.model.clone(),
            rules: a.rules.rules.clone(),
            ..a.io.flags()
        },
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let file = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let cfg = file.overlay(flags(&cli.group));
    cfg.check_inputs()?;
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    match &cli.group {
        Group::Sheet { .. } => commands::sheet_segment(&cfg),
        Group::Stroke { .. } => commands::stroke_extract(&cfg, exec),
        Group::Dataset { .. } => commands::dataset_synth(&cfg, exec),
        Group::Model {
            cmd: ModelCmd::Train(_),
        } => commands::model_train(&cfg, exec),
        Group::Model {
            cmd: ModelCmd::Eval(_),
        } => commands::model_eval(&cfg, exec),
        Group::Rules {
            cmd: RulesCmd::Learn(_),
        } => commands::rules_learn(&cfg, exec),
        Group::Rules {
            cmd: RulesCmd::Validate(_),
        } => commands::rules_validate(&cfg),
        Group::Glyph { .. } => commands::glyph_generate(&cfg, exec),
        Group::Font { .. } => commands::font_build(&cfg, exec),
        Group::Eval { .. } => commands::eval_roundtrip(&cfg, exec),
    }
}
