use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("pixel (row {row}, col {col}) outside {width}x{height} image")]
    OutOfImage {
        row: i64,
        col: i64,
        width: usize,
        height: usize,
    },

    #[error("unknown class id {id} at row {row}, col {col}")]
    UnknownClass { id: u8, row: usize, col: usize },

    #[error("row {row} is at or above the ground horizon")]
    BeyondHorizon { row: usize },

    #[error("no feasible sub-goal")]
    NoFeasibleSubgoal,

    #[error("image of {width}x{height} exceeds the {limit}x{limit} oracle limit")]
    TooLarge {
        width: usize,
        height: usize,
        limit: usize,
    },

    #[error("dimension mismatch: expected {expected:?}, got {got:?} ({context})")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
        context: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid episode: {0}")]
    Episode(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}
