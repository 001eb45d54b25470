//! Dataset loading: line-format files (gzip-transparent) and the bundled
//! synthetic generator.

use std::io::Read;
use std::path::Path;

use interleave_lab_core::dataset::{generate_synthetic, parse_letor, QueryRecord, SyntheticConfig};
use interleave_lab_core::ranking::DEFAULT_MAX_GRADE;

use crate::config::ConfigMap;
use crate::CliError;

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

/// Reads a dataset file, transparently decompressing gzip.
pub fn load_dataset_file(path: &Path, max_grade: u8) -> Result<Vec<QueryRecord>, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::io(format!("reading dataset {}", path.display()), e))?;
    let text = if bytes.starts_with(&GZIP_MAGIC) {
        let mut decoder = flate2::read::GzDecoder::new(bytes.as_slice());
        let mut out = String::new();
        decoder
            .read_to_string(&mut out)
            .map_err(|e| CliError::io(format!("decompressing {}", path.display()), e))?;
        out
    } else {
        String::from_utf8(bytes)
            .map_err(|e| CliError::io(format!("decoding {}", path.display()), e))?
    };
    parse_letor(&text, max_grade)
        .map_err(|e| CliError::Io(format!("parsing {}: {e}", path.display())))
}

/// Synthetic generator settings from config, all optional.
pub fn synthetic_from_config(config: &ConfigMap) -> Result<SyntheticConfig, CliError> {
    let mut synth = SyntheticConfig::default();
    if let Some(queries) = config.get_parsed::<usize>("synthetic.queries")? {
        synth.queries = queries;
    }
    if let Some(features) = config.get_parsed::<usize>("synthetic.features")? {
        synth.features = features;
    }
    if let Some(group_size) = config.get_parsed::<usize>("synthetic.group_size")? {
        synth.group_size = group_size;
    }
    if let Some(noise) = config.get_parsed::<f64>("synthetic.noise")? {
        synth.off_group_ceiling = noise;
    }
    if let Some(seed) = config.get_parsed::<u64>("synthetic.seed")? {
        synth.seed = seed;
    }
    for (key, slot) in [
        ("synthetic.best_grades", &mut synth.best_grades),
        ("synthetic.worst_grades", &mut synth.worst_grades),
    ] {
        if let Some(values) = config.get_list::<f64>(key)? {
            if values.len() != 3 {
                return Err(CliError::Validation(format!(
                    "config key `{key}` needs exactly three probabilities"
                )));
            }
            slot.copy_from_slice(&values);
        }
    }
    if !(synth.off_group_ceiling >= 0.0 && synth.off_group_ceiling < 1.0) {
        return Err(CliError::Validation(
            "synthetic.noise must lie in [0, 1) to keep feature rankings disjoint".into(),
        ));
    }
    if synth.queries == 0 || synth.features < 2 || synth.group_size == 0 {
        return Err(CliError::Validation(
            "synthetic dataset needs queries >= 1, features >= 2, group_size >= 1".into(),
        ));
    }
    for grades in [&synth.best_grades, &synth.worst_grades] {
        let sum: f64 = grades.iter().sum();
        if grades.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (sum - 1.0).abs() > 1e-9 {
            return Err(CliError::Validation(
                "synthetic grade distributions must be probabilities summing to 1".into(),
            ));
        }
    }
    Ok(synth)
}

/// Resolves the dataset source: an explicit path or the synthetic set.
pub struct LoadedDataset {
    pub label: String,
    pub records: Vec<QueryRecord>,
    /// Feature indices available for pairing.
    pub features: Vec<u32>,
}

pub fn load_dataset(
    path: Option<&Path>,
    synthetic: bool,
    config: &ConfigMap,
) -> Result<LoadedDataset, CliError> {
    let max_grade =
        config.get_parsed::<u8>("dataset.max_grade")?.unwrap_or(DEFAULT_MAX_GRADE);
    let (label, records) = match (path, synthetic) {
        (Some(path), false) => {
            let label = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string());
            (label, load_dataset_file(path, max_grade)?)
        }
        (None, true) => {
            let synth = synthetic_from_config(config)?;
            ("synthetic".to_string(), generate_synthetic(&synth))
        }
        (Some(_), true) => {
            return Err(CliError::Validation(
                "--dataset and --synthetic are mutually exclusive".into(),
            ))
        }
        (None, false) => {
            return Err(CliError::Validation(
                "either --dataset <path> or --synthetic is required".into(),
            ))
        }
    };
    if records.is_empty() {
        return Err(CliError::Validation(format!("dataset `{label}` has no queries")));
    }
    let features = match config.get_list::<u32>("dataset.features")? {
        Some(features) => features,
        None => records[0].feature_indices(),
    };
    Ok(LoadedDataset { label, records, features })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn temp_dir() -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!(
            "ilab-dataio-{}-{:?}",
            std::process::id(),
            std::thread::current().id()
        ));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn loads_plain_text_files() {
        let dir = temp_dir();
        let path = dir.join("tiny.txt");
        std::fs::write(&path, "1 qid:1 1:0.5 2:0.1\n0 qid:1 1:0.2 2:0.9\n").unwrap();
        let records = load_dataset_file(&path, 2).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].docs.len(), 2);
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn loads_gzip_files_transparently() {
        let dir = temp_dir();
        let path = dir.join("tiny.txt.gz");
        let mut encoder =
            flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
        encoder.write_all(b"2 qid:9 1:0.7\n").unwrap();
        std::fs::write(&path, encoder.finish().unwrap()).unwrap();
        let records = load_dataset_file(&path, 2).unwrap();
        assert_eq!(records[0].query_id, "9");
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn missing_file_reports_the_path() {
        let err = load_dataset_file(Path::new("no/such/file.txt"), 2).unwrap_err();
        assert!(err.to_string().contains("no/such/file.txt"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn parse_errors_carry_the_line() {
        let dir = temp_dir();
        let path = dir.join("bad.txt");
        std::fs::write(&path, "1 qid:1 1:0.5\nbroken line\n").unwrap();
        let err = load_dataset_file(&path, 2).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn synthetic_config_is_validated() {
        let map = ConfigMap::parse("synthetic.noise = 1.5\n", "test").unwrap();
        assert!(synthetic_from_config(&map).is_err());
        let map = ConfigMap::parse("synthetic.best_grades = 0.5,0.5,0.5\n", "test").unwrap();
        assert!(synthetic_from_config(&map).is_err());
        let map =
            ConfigMap::parse("synthetic.queries = 5\nsynthetic.features = 3\n", "test").unwrap();
        let synth = synthetic_from_config(&map).unwrap();
        assert_eq!((synth.queries, synth.features), (5, 3));
    }

    #[test]
    fn dataset_features_default_to_the_first_query() {
        let loaded = load_dataset(None, true, &ConfigMap::empty()).unwrap();
        assert_eq!(loaded.label, "synthetic");
        assert_eq!(loaded.features, vec![1, 2, 3, 4, 5, 6]);
    }
}
