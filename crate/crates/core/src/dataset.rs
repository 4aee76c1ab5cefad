//! On-disk dataset layout: a manifest of split-tagged instance files and one
//! label record per solved instance.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::exact::LabeledInstance;
use crate::instance::{load_instance, Instance};
use crate::solution::{CostBreakdown, Solution};
use crate::textfmt::{bits, parse_bits, Reader, Writer};

const MANIFEST_MAGIC: &str = "covertour-manifest";
const LABEL_MAGIC: &str = "covertour-label";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Test,
    TestNew,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Test, Split::TestNew];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "Train",
            Split::Test => "Test",
            Split::TestNew => "TestNew",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Train" | "train" => Ok(Split::Train),
            "Test" | "test" => Ok(Split::Test),
            "TestNew" | "test-new" | "testnew" => Ok(Split::TestNew),
            other => Err(Error::InvalidArgument(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub split: Split,
    pub node_set_id: u64,
    /// Relative to the manifest's directory.
    pub path: PathBuf,
}

impl ManifestEntry {
    /// Label record path: `labels/<instance stem>.label` beside the manifest.
    pub fn label_path(&self) -> PathBuf {
        let stem = self
            .path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        PathBuf::from("labels").join(format!("{stem}.label"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn to_text(&self) -> String {
        let mut w = Writer::new(MANIFEST_MAGIC, 1);
        w.scalar("entries", self.entries.len());
        for e in &self.entries {
            w.line(
                "entry",
                [
                    e.split.to_string(),
                    e.node_set_id.to_string(),
                    e.path.to_string_lossy().into_owned(),
                ],
            );
        }
        w.finish()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut r = Reader::new(text, MANIFEST_MAGIC, 1)?;
        let count: usize = r.scalar("entries")?;
        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            let (line, toks) = r.tokens("entry")?;
            if toks.len() != 3 {
                return Err(Error::Malformed {
                    line,
                    message: "manifest entry needs `split node_set_id path`".into(),
                });
            }
            let node_set_id = toks[1].parse().map_err(|_| Error::Malformed {
                line,
                message: format!("bad node set id `{}`", toks[1]),
            })?;
            entries.push(ManifestEntry {
                split: toks[0].parse()?,
                node_set_id,
                path: PathBuf::from(toks[2]),
            });
        }
        r.expect_end()?;
        Ok(Manifest { entries })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Manifest::from_text(&text)
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn count(&self, split: Split) -> usize {
        self.split(split).count()
    }
}

/// Serializes the optimum of a labeled instance; `instance_ref` is the
/// instance path as written in the manifest.
pub fn label_to_text(label: &LabeledInstance, instance_ref: &Path) -> String {
    let sol = &label.optimal;
    let mut w = Writer::new(LABEL_MAGIC, 1);
    w.scalar("instance", instance_ref.to_string_lossy());
    w.line("open", bits(&sol.open));
    w.line("assignment", &sol.assignment);
    w.line("route", &sol.route);
    w.line(
        "cost",
        [sol.cost.facility, sol.cost.assignment, sol.cost.transport, sol.cost.total],
    );
    w.finish()
}

/// Parses a label record against its instance, re-checking feasibility and
/// the recorded costs.
pub fn label_from_text(text: &str, instance: Instance) -> Result<LabeledInstance> {
    let mut r = Reader::new(text, LABEL_MAGIC, 1)?;
    let _: String = r.scalar("instance")?;
    let open = parse_bits("open", r.vector("open")?)?;
    let assignment = r.vector("assignment")?;
    let route = r.vector("route")?;
    let cost: Vec<f64> = r.vector("cost")?;
    r.expect_end()?;
    if cost.len() != 4 {
        return Err(Error::dim("cost", 4, cost.len()));
    }
    let sol = Solution::new(&instance, open, assignment, route)?;
    let recorded = CostBreakdown {
        facility: cost[0],
        assignment: cost[1],
        transport: cost[2],
        total: cost[3],
    };
    if recorded != sol.cost {
        return Err(Error::Invariant(format!(
            "recorded cost {recorded:?} differs from evaluated {:?}",
            sol.cost
        )));
    }
    LabeledInstance::new(instance, sol)
}

pub fn save_label(label: &LabeledInstance, instance_ref: &Path, path: &Path) -> Result<()> {
    std::fs::write(path, label_to_text(label, instance_ref)).map_err(|e| Error::io(path, e))
}

/// Loads the instance and label record of a manifest entry.
pub fn load_labeled(root: &Path, entry: &ManifestEntry) -> Result<LabeledInstance> {
    let instance = load_instance(&root.join(&entry.path))?;
    let path = root.join(entry.label_path());
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    label_from_text(&text, instance)
}
