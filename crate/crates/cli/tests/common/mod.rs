#![allow(dead_code)]

use std::path::{Path, PathBuf};

use tempfile::TempDir;

pub const T0: &str = "2026-01-01T00:00:00Z";

pub struct Run {
    pub code: i32,
    pub out: String,
    pub err: String,
}

impl Run {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_str(&self.out)
            .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", self.out))
    }

    pub fn err_json(&self) -> serde_json::Value {
        serde_json::from_str(&self.err)
            .unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {}", self.err))
    }
}

/// A fresh store in a temporary directory, driven in-process.
pub struct Sandbox {
    dir: TempDir,
    pub now: String,
}

impl Sandbox {
    pub fn new() -> Self {
        let sb = Sandbox::bare();
        sb.ok(&["init"]);
        sb
    }

    /// No `init`.
    pub fn bare() -> Self {
        Sandbox {
            dir: tempfile::tempdir().expect("temp dir"),
            now: T0.into(),
        }
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub fn store(&self) -> PathBuf {
        self.dir.path().join("store")
    }

    pub fn run(&self, args: &[&str]) -> Run {
        let store = self.store();
        let mut argv: Vec<String> =
            vec!["adi".into(), "--store".into(), store.display().to_string()];
        if !args.contains(&"--now") {
            argv.extend(["--now".into(), self.now.clone()]);
        }
        argv.extend(args.iter().map(|s| s.to_string()));
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = adi_cli::run(argv, &mut out, &mut err);
        Run {
            code,
            out: String::from_utf8(out).expect("utf-8 stdout"),
            err: String::from_utf8(err).expect("utf-8 stderr"),
        }
    }

    pub fn ok(&self, args: &[&str]) -> Run {
        let r = self.run(args);
        assert_eq!(r.code, 0, "adi {args:?} failed: {}{}", r.out, r.err);
        r
    }

    pub fn read(&self, file: &str) -> String {
        std::fs::read_to_string(self.store().join(file)).expect("store file")
    }

    /// Three L2 steps citing 0.95, 0.85 and 0.40, each resting on the
    /// previous one.
    pub fn worked_chain() -> Self {
        let sb = Sandbox::new();
        for (i, raw) in ["0.95", "0.85", "0.40"].iter().enumerate() {
            let (s, e) = (format!("S{}", i + 1), format!("e{}", i + 1));
            sb.ok(&[
                "add-evidence",
                "--id",
                &e,
                "--score",
                raw,
                "--formality",
                "F2",
                "--method",
                "executed_verified",
            ]);
            let mut args = vec![
                "add-claim",
                "step",
                "--id",
                &s,
                "--formality",
                "F2",
                "--actor",
                "llm-1",
                "--evidence",
                &e,
            ];
            let prev = format!("S{i}");
            if i > 0 {
                args.extend(["--depends-on", &prev]);
            }
            sb.ok(&args);
            sb.ok(&["promote", &s, "--actor", "reviewer"]);
            sb.ok(&["promote", &s, "--actor", "reviewer"]);
        }
        sb
    }
}
