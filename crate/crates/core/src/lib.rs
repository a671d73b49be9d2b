#![no_std]

extern crate alloc;

pub mod certified;
pub mod diagnostics;
pub mod error;
pub mod freq;
pub mod linalg;
pub mod measure;
pub mod stage;
pub mod spectra;
pub mod sumsine;
pub mod triples;

pub use certified::{Certified, CertifiedComplex, CertifiedReal};
pub use error::{MoranError, Result};
pub use freq::Freq;
pub use measure::{certified_depth, truncated_product, mask_ft, moran_ft, partial_measure, DiscreteMeasure, EvalConfig, FourierTransform};
pub use stage::{Family, MoranSpec, Stage, StageSource, TailRule, TailSpec};
