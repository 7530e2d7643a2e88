use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use bfly_core::matrix::format_g17;

/// CSV text whose first line names the artifact it reproduces.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(artifact: &str, columns: &[&str]) -> Self {
        Self {
            text: format!("# {artifact}\n{}\n", columns.join(",")),
        }
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) {
        let line: Vec<&str> = fields.iter().map(AsRef::as_ref).collect();
        self.text.push_str(&line.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

pub fn g(x: f64) -> String {
    format_g17(x)
}

pub fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

pub fn write(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> anyhow::Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}
