//! Binary classification of tabular data with a potential-weight
//! preprocessing step and a single-epoch binary-step network, plus a
//! deterministic multi-agent runtime that runs the two as an
//! acquisition → modeling → delivery pipeline.
//!
//! ```
//! use mas_classify::{dataset, pwla::ReductionPolicy, smffnn};
//!
//! let csv = "id,a,b,label\n\
//!            r1,1,10,2\n\
//!            r2,2,11,2\n\
//!            r3,8,30,1\n\
//!            r4,9,31,1\n";
//! let sel = dataset::SchemaSelection::new(["a", "b"]).with_label("label");
//! let ds = dataset::parse_csv(csv, "demo", &sel).unwrap();
//! let model = smffnn::fit(&ds, ReductionPolicy::MeanThreshold).unwrap();
//! assert_eq!(model.train_accuracy, 1.0);
//! ```

pub mod dataset;
pub mod org;
pub mod pwla;
pub mod runtime;
pub mod smffnn;
pub mod zones;

use thiserror::Error;

/// Any error the library can produce, tagged by its kind.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Dataset(#[from] dataset::DatasetError),
    #[error(transparent)]
    Pwla(#[from] pwla::PwlaError),
    #[error(transparent)]
    Smffnn(#[from] smffnn::SmffnnError),
    #[error(transparent)]
    Runtime(#[from] runtime::RuntimeError),
    #[error(transparent)]
    Zone(#[from] zones::ZoneError),
    #[error("PipelineError: {0}")]
    Pipeline(String),
}

impl Error {
    pub fn kind(&self) -> &str {
        match self {
            Error::Dataset(e) => e.kind(),
            Error::Pwla(e) => e.kind(),
            Error::Smffnn(e) => e.kind(),
            Error::Runtime(e) => e.kind(),
            Error::Zone(e) => e.kind(),
            Error::Pipeline(_) => "PipelineError",
        }
    }
}
