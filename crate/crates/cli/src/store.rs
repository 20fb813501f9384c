//! On-disk layout of a store directory.
//!
//! ```text
//! <dir>/graph.jsonl   knowledge graph, rewritten atomically on every change
//! <dir>/drr.jsonl     hash-chained decision records, append-only
//! <dir>/config.json   engine configuration
//! <dir>/lock          held exclusively while a command writes
//! ```

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use adi_core::drr::{DesignRationaleRecord, DrrStore};
use adi_core::graph::KnowledgeGraph;
use adi_core::model::{load_config, Config};
use adi_core::{Error, Result};

pub struct Store {
    dir: PathBuf,
}

/// Exclusive writer lock, released on drop.
pub struct WriteLock(#[allow(dead_code)] File);

fn io(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

impl Store {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Store { dir: dir.into() }
    }

    pub fn graph_path(&self) -> PathBuf {
        self.dir.join("graph.jsonl")
    }

    pub fn drr_path(&self) -> PathBuf {
        self.dir.join("drr.jsonl")
    }

    pub fn config_path(&self) -> PathBuf {
        self.dir.join("config.json")
    }

    pub fn is_initialized(&self) -> bool {
        self.graph_path().exists()
    }

    pub fn init(&self, cfg: &Config) -> Result<()> {
        fs::create_dir_all(&self.dir).map_err(|e| io(&self.dir, e))?;
        let _lock = self.lock()?;
        write_atomic(&self.graph_path(), "")?;
        write_atomic(&self.drr_path(), &DrrStore::new().to_jsonl())?;
        if !self.config_path().exists() {
            let text = serde_json::to_string_pretty(&cfg.to_json()).expect("serializable");
            write_atomic(&self.config_path(), &(text + "\n"))?;
        }
        Ok(())
    }

    pub fn lock(&self) -> Result<WriteLock> {
        let path = self.dir.join("lock");
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&path)
            .map_err(|e| io(&path, e))?;
        file.lock().map_err(|e| io(&path, e))?;
        Ok(WriteLock(file))
    }

    fn read(&self, path: &Path) -> Result<String> {
        if !self.is_initialized() {
            return Err(Error::Io(format!(
                "no store at {}; run `adi init` first",
                self.dir.display()
            )));
        }
        fs::read_to_string(path).map_err(|e| io(path, e))
    }

    pub fn load_graph(&self) -> Result<KnowledgeGraph> {
        KnowledgeGraph::from_jsonl(&self.read(&self.graph_path())?)
    }

    pub fn save_graph(&self, g: &KnowledgeGraph) -> Result<()> {
        write_atomic(&self.graph_path(), &g.to_jsonl())
    }

    pub fn load_drr(&self) -> Result<DrrStore> {
        DrrStore::from_jsonl(&self.read(&self.drr_path())?)
    }

    pub fn drr_bytes(&self) -> Result<Vec<u8>> {
        self.read(&self.drr_path())?;
        fs::read(self.drr_path()).map_err(|e| io(&self.drr_path(), e))
    }

    /// Appends one record line; earlier bytes are never rewritten.
    pub fn append_drr(&self, record: &DesignRationaleRecord) -> Result<()> {
        let path = self.drr_path();
        let mut f = OpenOptions::new()
            .append(true)
            .open(&path)
            .map_err(|e| io(&path, e))?;
        writeln!(f, "{}", record.canonical_line()).map_err(|e| io(&path, e))?;
        f.sync_all().map_err(|e| io(&path, e))
    }

    /// The explicit file if given, else the store's config, else defaults.
    pub fn config(&self, explicit: Option<&Path>) -> Result<Config> {
        let path = match explicit {
            Some(p) => p.to_path_buf(),
            None if self.config_path().exists() => self.config_path(),
            None => return Ok(Config::default()),
        };
        load_config(&fs::read_to_string(&path).map_err(|e| io(&path, e))?)
    }
}

fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text).map_err(|e| io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io(path, e))
}
