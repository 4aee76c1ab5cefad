use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use covertour::dataset::{load_labeled, save_label, Manifest, ManifestEntry, Split};
use covertour::ml::{encode_scp, encode_tsp, train, Example, MlpModel, TrainConfig, TrainHistory};
use covertour::{generate_instance, generate_node_set, label_dataset, load_instance};
use covertour::{CostConfig, LabeledInstance};

use crate::error::{io_err, write_file, CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const SCP_CHECKPOINT: &str = "model1_scp.ckpt";
pub const TSP_CHECKPOINT: &str = "model2_tsp.ckpt";
pub const HISTORY_FILE: &str = "history.csv";

/// How node sets and their cost variants are divided into splits.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub node_sets: usize,
    pub variants_per_set: usize,
    /// Node sets whose every variant goes to TestNew.
    pub heldout_node_sets: usize,
    /// Fraction of the remaining variants that goes to Test.
    pub test_fraction: f64,
    pub seed: u64,
    pub locations: usize,
    pub side_km: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            node_sets: 12,
            variants_per_set: 50,
            heldout_node_sets: 2,
            test_fraction: 0.1,
            seed: 42,
            locations: covertour::instance::DEFAULT_LOCATIONS,
            side_km: covertour::instance::DEFAULT_SIDE_KM,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> CliResult<()> {
        if self.node_sets == 0 || self.variants_per_set == 0 {
            return Err(CliError::Invalid("need at least one node set and variant".into()));
        }
        if self.heldout_node_sets >= self.node_sets {
            return Err(CliError::Invalid(format!(
                "held-out node sets ({}) must be fewer than node sets ({})",
                self.heldout_node_sets, self.node_sets
            )));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(CliError::Invalid("test fraction must lie in (0, 1)".into()));
        }
        if self.locations == 0 || self.locations > covertour::exact::MAX_EXACT_LOCATIONS {
            return Err(CliError::Invalid(format!(
                "location count must be in 1..={}",
                covertour::exact::MAX_EXACT_LOCATIONS
            )));
        }
        Ok(())
    }
}

/// Generates node sets and cost variants, writes instance files and the
/// split-tagged manifest under `out_dir`.
///
/// Held-out node sets contribute only to TestNew; the other sets' variants
/// are pooled and a seeded `test_fraction` of them becomes Test.
pub fn cmd_gen(spec: &SplitSpec, cfg: &CostConfig, out_dir: &Path) -> CliResult<Manifest> {
    spec.validate()?;
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut entries = Vec::with_capacity(spec.node_sets * spec.variants_per_set);
    for set in 0..spec.node_sets {
        let mut nodes = generate_node_set(rng.gen(), spec.locations, spec.side_km)?;
        nodes.id = set as u64;
        for variant in 0..spec.variants_per_set {
            let inst = generate_instance(&nodes, rng.gen(), cfg)?;
            let rel = PathBuf::from("instances").join(format!("ns{set:03}_v{variant:04}.inst"));
            let path = out_dir.join(&rel);
            write_file(&path, inst.to_text())?;
            entries.push(ManifestEntry {
                split: Split::Train,
                node_set_id: set as u64,
                path: rel,
            });
        }
    }

    let mut sets: Vec<u64> = (0..spec.node_sets as u64).collect();
    sets.shuffle(&mut rng);
    let heldout = &sets[..spec.heldout_node_sets];
    let mut pooled = Vec::new();
    for (idx, e) in entries.iter_mut().enumerate() {
        if heldout.contains(&e.node_set_id) {
            e.split = Split::TestNew;
        } else {
            pooled.push(idx);
        }
    }
    pooled.shuffle(&mut rng);
    let n_test = ((pooled.len() as f64 * spec.test_fraction).round() as usize).max(1);
    for &idx in &pooled[..n_test.min(pooled.len())] {
        entries[idx].split = Split::Test;
    }

    let manifest = Manifest { entries };
    write_file(&out_dir.join(MANIFEST_FILE), manifest.to_text())?;
    Ok(manifest)
}

fn manifest_root(manifest_path: &Path) -> PathBuf {
    manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

pub fn load_manifest(manifest_path: &Path) -> CliResult<(PathBuf, Manifest)> {
    if !manifest_path.exists() {
        return Err(CliError::Missing(manifest_path.to_path_buf()));
    }
    Ok((manifest_root(manifest_path), Manifest::load(manifest_path)?))
}

/// Solves every instance exactly and writes one label record per instance.
/// Instances that fail are reported together after the rest are written.
pub fn cmd_label(manifest_path: &Path, parallelism: usize) -> CliResult<usize> {
    let (root, manifest) = load_manifest(manifest_path)?;
    let instances = manifest
        .entries
        .iter()
        .map(|e| load_instance(&root.join(&e.path)))
        .collect::<Result<Vec<_>, _>>()?;
    let labels = label_dataset(&instances, parallelism);
    let label_dir = root.join("labels");
    std::fs::create_dir_all(&label_dir).map_err(|e| io_err(&label_dir, e))?;

    let mut failures = Vec::new();
    let mut written = 0;
    for (idx, (entry, label)) in manifest.entries.iter().zip(labels).enumerate() {
        match label {
            Ok(label) => {
                save_label(&label, &entry.path, &root.join(entry.label_path()))?;
                written += 1;
            }
            Err(e) => failures.push((idx, e.to_string())),
        }
    }
    if failures.is_empty() {
        Ok(written)
    } else {
        Err(CliError::LabelFailures(failures))
    }
}

pub fn load_split(root: &Path, manifest: &Manifest, split: Split) -> CliResult<Vec<(PathBuf, LabeledInstance)>> {
    manifest
        .split(split)
        .map(|e| {
            if !root.join(e.label_path()).exists() {
                return Err(CliError::Missing(root.join(e.label_path())));
            }
            Ok((e.path.clone(), load_labeled(root, e)?))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutputs {
    pub scp: MlpModel,
    pub tsp: MlpModel,
    pub scp_history: TrainHistory,
    pub tsp_history: TrainHistory,
}

/// Trains the facility model on `(instance → optimal open set)` and the route
/// model on `((instance, optimal open set) → optimal arcs)`, using the Train
/// split only. Writes both checkpoints and the per-epoch loss history.
pub fn cmd_train(manifest_path: &Path, cfg: &TrainConfig, out_dir: &Path) -> CliResult<TrainOutputs> {
    let (root, manifest) = load_manifest(manifest_path)?;
    let labeled = load_split(&root, &manifest, Split::Train)?;

    let scp_data: Vec<Example> = labeled
        .iter()
        .map(|(_, l)| Example {
            features: encode_scp(&l.instance).values,
            target: l.g_star.clone(),
        })
        .collect();
    let tsp_data = labeled
        .iter()
        .map(|(_, l)| {
            Ok(Example {
                features: encode_tsp(&l.instance, &l.optimal.open)?.values,
                target: l.pz_star.values().to_vec(),
            })
        })
        .collect::<Result<Vec<_>, covertour::Error>>()?;

    let tsp_cfg = TrainConfig {
        seed: cfg.seed.wrapping_add(1),
        ..cfg.clone()
    };
    let (scp, tsp) = rayon::join(|| train(&scp_data, cfg), || train(&tsp_data, &tsp_cfg));
    let (scp, scp_history) = scp?;
    let (tsp, tsp_history) = tsp?;

    write_file(&out_dir.join(SCP_CHECKPOINT), scp.to_text())?;
    write_file(&out_dir.join(TSP_CHECKPOINT), tsp.to_text())?;
    write_file(
        &out_dir.join(HISTORY_FILE),
        history_csv(&[("scp", &scp_history), ("tsp", &tsp_history)]),
    )?;
    Ok(TrainOutputs {
        scp,
        tsp,
        scp_history,
        tsp_history,
    })
}

fn history_csv(models: &[(&str, &TrainHistory)]) -> String {
    let mut out = String::from("model,round,epoch,train_loss,validation_loss,hidden,dropout\n");
    for (name, hist) in models {
        for e in &hist.epochs {
            let hidden = e.hidden.iter().map(|w| w.to_string()).collect::<Vec<_>>().join("x");
            out.push_str(&format!(
                "{name},{},{},{},{},{hidden},{}\n",
                e.round, e.epoch, e.train_loss, e.validation_loss, e.dropout
            ));
        }
    }
    out
}

pub fn load_models(dir: &Path) -> CliResult<(MlpModel, MlpModel)> {
    let read = |name: &str| -> CliResult<MlpModel> {
        let path = dir.join(name);
        let text = std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        Ok(MlpModel::from_text(&text)?)
    };
    Ok((read(SCP_CHECKPOINT)?, read(TSP_CHECKPOINT)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_arithmetic_and_disjointness() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SplitSpec {
            locations: 5,
            ..SplitSpec::default()
        };
        let m = cmd_gen(&spec, &CostConfig::default(), dir.path()).unwrap();
        assert_eq!(m.entries.len(), 600);
        assert_eq!(m.count(Split::TestNew), 100);
        assert_eq!(m.count(Split::Test), 50);
        assert_eq!(m.count(Split::Train), 450);
        let new_sets: std::collections::BTreeSet<u64> =
            m.split(Split::TestNew).map(|e| e.node_set_id).collect();
        assert_eq!(new_sets.len(), 2);
        assert!(m
            .split(Split::Train)
            .chain(m.split(Split::Test))
            .all(|e| !new_sets.contains(&e.node_set_id)));

        let dir2 = tempfile::tempdir().unwrap();
        let m2 = cmd_gen(&spec, &CostConfig::default(), dir2.path()).unwrap();
        assert_eq!(m, m2);
        let a = std::fs::read(dir.path().join(MANIFEST_FILE)).unwrap();
        let b = std::fs::read(dir2.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_spec_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SplitSpec {
            heldout_node_sets: 12,
            ..SplitSpec::default()
        };
        assert!(matches!(
            cmd_gen(&spec, &CostConfig::default(), dir.path()),
            Err(CliError::Invalid(_))
        ));
    }

    #[test]
    fn label_missing_manifest() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            cmd_label(&dir.path().join("nope.txt"), 1),
            Err(CliError::Missing(_))
        ));
    }
}
