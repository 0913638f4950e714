use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid raster dimensions {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },

    #[error("pixel buffer holds {actual} values, expected {expected}")]
    BufferSize { expected: usize, actual: usize },

    #[error("structuring element has no on cells")]
    EmptyKernel,

    #[error("thinning divergence after {0} passes")]
    ThinningDivergence(usize),

    #[error("not a stroke: {0} endpoints")]
    NotAStroke(usize),

    #[error("degenerate stroke crop with {0} ink pixels")]
    DegenerateStroke(usize),

    #[error("missing label")]
    MissingLabel,

    #[error("invalid stroke class {0} (expected 1..=6)")]
    InvalidClass(u8),

    #[error("invalid feature code {0}")]
    InvalidFeatureCode(u8),

    #[error("insufficient samples for class {0}")]
    InsufficientSamples(u8),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown algorithm {0:?}")]
    UnknownAlgorithm(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("rule {character}: field `{field}`: {message}")]
    Rule {
        character: String,
        field: String,
        message: String,
    },

    #[error("ambiguous decomposition for {0}")]
    AmbiguousDecomposition(String),

    #[error("oversize stroke ({width}x{height} exceeds canvas)")]
    OversizeStroke { width: usize, height: usize },

    #[error("placement out of bounds")]
    PlacementOutOfBounds,

    #[error("{character}: missing stroke classes {classes:?}")]
    MissingStrokeClass { character: String, classes: Vec<u8> },

    #[error("unknown character {0}")]
    UnknownCharacter(String),

    #[error("glyph generation failed for {} character(s): {}", .0.len(), summarize(.0))]
    Generation(Vec<(String, String)>),

    #[error("empty glyph")]
    EmptyGlyph,

    #[error("glyph {character} does not fit the {canvas}px canvas")]
    GlyphOverflow { character: String, canvas: usize },

    #[error("sfd line {line}: {message}")]
    SfdParse { line: usize, message: String },

    #[error("no ink found for expected characters: {}", .0.join(", "))]
    EmptyCells(Vec<String>),

    #[error("invalid sheet layout: {0}")]
    Layout(String),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn summarize(failures: &[(String, String)]) -> String {
    failures
        .iter()
        .map(|(c, e)| format!("{c}: {e}"))
        .collect::<Vec<_>>()
        .join("; ")
}
