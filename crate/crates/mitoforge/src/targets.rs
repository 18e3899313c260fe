use std::path::{Path, PathBuf};

use mitoforge_core::imaging::ImageBuffer;
use mitoforge_core::pipeline::TargetPool;
use mitoforge_core::Error as CoreError;

use crate::error::{CliError, Result};
use crate::png::load_png;

/// The `*.png` files of a directory, sorted by file name and loaded on demand.
#[derive(Debug, Clone, Default)]
pub struct DirPool {
    paths: Vec<PathBuf>,
}

impl DirPool {
    pub fn open(dir: &Path) -> Result<Self> {
        let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
        let mut paths = Vec::new();
        for entry in entries {
            let path = entry.map_err(|e| CliError::io(dir, e))?.path();
            let is_png = path
                .extension()
                .is_some_and(|ext| ext.eq_ignore_ascii_case("png"));
            if is_png && path.is_file() {
                paths.push(path);
            }
        }
        paths.sort();
        Ok(Self { paths })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn paths(&self) -> &[PathBuf] {
        &self.paths
    }
}

impl TargetPool for DirPool {
    fn len(&self) -> usize {
        self.paths.len()
    }

    fn name(&self, index: usize) -> String {
        self.paths[index]
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default()
    }

    fn load(&self, index: usize) -> mitoforge_core::Result<ImageBuffer> {
        load_png(&self.paths[index]).map_err(|e| CoreError::InvalidInput(format!("target image: {e}")))
    }
}
