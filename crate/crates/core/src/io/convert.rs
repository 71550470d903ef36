//! Extension point for importing other datasets' annotation files.

use std::path::Path;

use super::{AnnotationRecord, IoError};

pub trait DatasetConverter {
    fn name(&self) -> &'static str;

    fn convert(&self, input: &Path) -> Result<Vec<AnnotationRecord>, IoError>;
}

/// Placeholder for the LOAF release. The published schema is not available
/// here, so conversion is refused rather than guessed.
#[derive(Debug, Clone, Copy, Default)]
pub struct LoafConverter;

impl DatasetConverter for LoafConverter {
    fn name(&self) -> &'static str {
        "loaf"
    }

    fn convert(&self, input: &Path) -> Result<Vec<AnnotationRecord>, IoError> {
        Err(IoError::Unsupported(format!(
            "cannot convert {}: the LOAF annotation schema is not implemented yet",
            input.display()
        )))
    }
}
