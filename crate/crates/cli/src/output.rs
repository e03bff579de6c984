//! Output directories are written to a hidden staging directory next to the
//! target and renamed into place only when the command succeeds.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::Failure;

pub const RUN_MANIFEST: &str = "run.toml";
pub const RUN_FORMAT_VERSION: u32 = 1;

pub struct Staged {
    target: PathBuf,
    staging: PathBuf,
    force: bool,
    committed: bool,
}

impl Staged {
    /// Refuses an existing target without `force`, and any target that
    /// contains, equals or sits inside one of the input directories.
    pub fn create(target: &Path, force: bool, inputs: &[&Path]) -> Result<Self, Failure> {
        let name = target
            .file_name()
            .ok_or_else(|| Failure::usage(format!("invalid output directory {}", target.display())))?;
        if target.exists() && !force {
            return Err(Failure::usage(format!(
                "output directory {} exists (use --force to replace it)",
                target.display()
            )));
        }
        let out_abs = absolute(target);
        for input in inputs {
            let inp = absolute(input);
            if inp.starts_with(&out_abs) || (input.is_dir() && out_abs.starts_with(&inp)) {
                return Err(Failure::usage(format!(
                    "output directory {} overlaps input {}",
                    target.display(),
                    input.display()
                )));
            }
        }
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent).map_err(|e| Failure::runtime(format!("cannot create {}: {e}", parent.display())))?;
        let staging = parent.join(format!(".{}.partial", name.to_string_lossy()));
        if staging.exists() {
            fs::remove_dir_all(&staging).map_err(|e| Failure::runtime(format!("cannot clear {}: {e}", staging.display())))?;
        }
        fs::create_dir(&staging).map_err(|e| Failure::runtime(format!("cannot create {}: {e}", staging.display())))?;
        Ok(Self { target: target.to_path_buf(), staging, force, committed: false })
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.staging.join(file)
    }

    pub fn write(&self, file: &str, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
        let p = self.path(file);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir).map_err(|e| Failure::runtime(format!("cannot create {}: {e}", dir.display())))?;
        }
        fs::write(&p, contents).map_err(|e| Failure::runtime(format!("cannot write {}: {e}", p.display())))
    }

    pub fn write_manifest(&self, command: &str, config: &RunConfig, inputs: &[(&str, &Path)]) -> Result<(), Failure> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            format_version: u32,
            command: &'a str,
            seed: u64,
            inputs: std::collections::BTreeMap<&'a str, String>,
            config: &'a RunConfig,
        }
        let m = Manifest {
            format_version: RUN_FORMAT_VERSION,
            command,
            seed: config.seed,
            inputs: inputs.iter().map(|(k, p)| (*k, p.display().to_string())).collect(),
            config,
        };
        let text = toml::to_string(&m).map_err(|e| Failure::runtime(format!("cannot serialise manifest: {e}")))?;
        self.write(RUN_MANIFEST, text)
    }

    pub fn commit(mut self) -> Result<PathBuf, Failure> {
        if self.target.exists() {
            debug_assert!(self.force);
            fs::remove_dir_all(&self.target)
                .map_err(|e| Failure::runtime(format!("cannot replace {}: {e}", self.target.display())))?;
        }
        fs::rename(&self.staging, &self.target)
            .map_err(|e| Failure::runtime(format!("cannot move output into {}: {e}", self.target.display())))?;
        self.committed = true;
        Ok(self.target.clone())
    }
}

impl Drop for Staged {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.staging);
        }
    }
}

fn absolute(p: &Path) -> PathBuf {
    if let Ok(c) = fs::canonicalize(p) {
        return c;
    }
    match (p.parent(), p.file_name()) {
        (Some(parent), Some(name)) => {
            let parent = if parent.as_os_str().is_empty() { Path::new(".") } else { parent };
            absolute(parent).join(name)
        }
        _ => std::env::current_dir().map(|d| d.join(p)).unwrap_or_else(|_| p.to_path_buf()),
    }
}
