//! File formats: stratification schemes, record and count files, posterior
//! sample files. Every output starts with `# key: value` provenance lines
//! carrying at least the config hash of the producing run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use lcmcr::data::{CapturePattern, CsvSchema, PatternCounts, RecordRow, StratificationScheme};
use lcmcr::posterior::{ChainDiagnostics, Draw, PosteriorSamples, RunMeta};
use lcmcr::{Error, Result};

#[derive(Deserialize)]
struct SchemeFile {
    labels: Vec<String>,
    regions: BTreeMap<String, String>,
}

pub fn load_scheme(path: &Path) -> Result<StratificationScheme> {
    let text = fs::read_to_string(path)?;
    let raw: SchemeFile = toml::from_str(&text)
        .map_err(|e| Error::Validation(format!("scheme {}: {e}", path.display())))?;
    StratificationScheme::new(raw.regions, raw.labels)
}

pub fn load_records(
    path: &Path,
    scheme: &StratificationScheme,
    missing_as_label: Option<&str>,
) -> Result<Vec<RecordRow>> {
    let file = fs::File::open(path)?;
    let mut rows = lcmcr::data::parse_records(file, &CsvSchema::default(), scheme)?;
    if let Some(label) = missing_as_label {
        if scheme.label_index(label).is_none() {
            return Err(Error::Validation(format!(
                "missing_as_label {label:?} is not in the label set"
            )));
        }
        for row in &mut rows {
            if row.label.is_none() {
                row.label = Some(label.to_string());
            }
        }
    }
    Ok(rows)
}

fn provenance_block(entries: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (key, value) in entries {
        writeln!(out, "# {key}: {value}").expect("string write");
    }
    out
}

/// Splits leading `# key: value` lines from the CSV body.
fn split_provenance(text: &str) -> (BTreeMap<String, String>, String) {
    let mut meta = BTreeMap::new();
    let mut body_start = 0;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((key, value)) = rest.split_once(':') {
                meta.insert(key.trim().to_string(), value.trim().to_string());
            }
            body_start += line.len() + 1;
        } else {
            break;
        }
    }
    (meta, text[body_start.min(text.len())..].to_string())
}

pub fn counts_file_name(region: &str) -> String {
    format!("counts_{region}.csv")
}

pub fn samples_file_name(region: &str) -> String {
    format!("samples_{region}.csv")
}

/// Writes one region's aggregated `(pattern, label, count)` triples.
pub fn write_counts(
    path: &Path,
    region: &str,
    counts: &PatternCounts,
    config_hash: &str,
) -> Result<()> {
    let mut out = provenance_block(&[
        ("config_hash", config_hash.to_string()),
        ("region", region.to_string()),
        ("lists", counts.lists().to_string()),
    ]);
    out.push_str("pattern,label,count\n");
    for (&(pattern, y), &count) in counts.observed() {
        writeln!(out, "{pattern},{},{count}", counts.labels()[y]).expect("string write");
    }
    for (&pattern, &count) in counts.missing() {
        writeln!(out, "{pattern},,{count}").expect("string write");
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a `(pattern, label, count)` file back into counts.
pub fn read_counts(path: &Path, scheme: &StratificationScheme) -> Result<(String, PatternCounts)> {
    let text = fs::read_to_string(path)?;
    let (meta, body) = split_provenance(&text);
    let region = meta
        .get("region")
        .cloned()
        .or_else(|| {
            path.file_stem()
                .and_then(|s| s.to_str())
                .and_then(|s| s.strip_prefix("counts_"))
                .map(String::from)
        })
        .ok_or_else(|| {
            Error::Validation(format!("{}: cannot determine region", path.display()))
        })?;

    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
    let mut triples = Vec::new();
    let mut lists = None;
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| Error::Parse { row, message: e.to_string() })?;
        let pattern_text = record
            .get(0)
            .ok_or_else(|| Error::Parse { row, message: "missing pattern".into() })?;
        let pattern = CapturePattern::parse(pattern_text)?;
        lists.get_or_insert(pattern.lists());
        let label = match record.get(1).map(str::trim) {
            Some("") | None => None,
            Some(l) => Some(l.to_string()),
        };
        let count: u64 = record
            .get(2)
            .ok_or_else(|| Error::Parse { row, message: "missing count".into() })?
            .trim()
            .parse()
            .map_err(|e| Error::Parse { row, message: format!("bad count: {e}") })?;
        triples.push((pattern, label, count));
    }
    let lists =
        lists.ok_or_else(|| Error::Validation(format!("{}: empty counts", path.display())))?;
    let counts = PatternCounts::from_triples(triples, scheme, lists)?;
    Ok((region, counts))
}

/// Writes a posterior sample file: provenance header, then one row per
/// retained draw. `extra` provenance pairs (e.g. observed counts) are
/// appended to the header.
pub fn write_samples(
    path: &Path,
    samples: &PosteriorSamples,
    extra: &[(&str, String)],
) -> Result<()> {
    let labels = &samples.labels;
    let mut entries = vec![
        ("config_hash", samples.meta.config_hash.clone()),
        ("region", samples.meta.region.clone()),
        ("prior_scheme", samples.meta.prior_scheme.clone()),
        ("seed", samples.meta.seed.to_string()),
        ("stream_id", samples.meta.stream_id.to_string()),
        ("labels", labels.join(",")),
        (
            "divergence",
            match samples.diagnostics.divergence {
                Some(d) => format!("iteration={} residual={:e}", d.iteration, d.residual),
                None => "none".to_string(),
            },
        ),
    ];
    entries.extend(extra.iter().map(|(k, v)| (*k, v.clone())));
    let mut out = provenance_block(&entries);
    out.push_str("iteration,N_total");
    for l in labels {
        write!(out, ",N_{l}").expect("string write");
    }
    for l in labels {
        write!(out, ",rho_{l}").expect("string write");
    }
    for l in labels {
        write!(out, ",imputed_{l}").expect("string write");
    }
    for l in labels {
        write!(out, ",alpha_{l}").expect("string write");
    }
    out.push('\n');
    for d in &samples.draws {
        write!(out, "{},{}", d.iteration, d.n_total).expect("string write");
        for v in &d.n_y {
            write!(out, ",{v}").expect("string write");
        }
        for v in &d.rho {
            write!(out, ",{v}").expect("string write");
        }
        for v in &d.imputed {
            write!(out, ",{v}").expect("string write");
        }
        for v in &d.alpha {
            write!(out, ",{v}").expect("string write");
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// A sample file read back: the draws plus the raw provenance map.
pub struct SamplesFile {
    pub samples: PosteriorSamples,
    pub provenance: BTreeMap<String, String>,
}

impl SamplesFile {
    /// Observed-count-per-label provenance, when the producer recorded it.
    pub fn n_obs(&self) -> Option<Vec<u64>> {
        self.provenance.get("n_obs").map(|s| {
            s.split(',').map(|v| v.trim().parse().unwrap_or(0)).collect()
        })
    }
}

pub fn read_samples(path: &Path) -> Result<SamplesFile> {
    let text = fs::read_to_string(path)?;
    let (meta, body) = split_provenance(&text);
    let labels: Vec<String> = meta
        .get("labels")
        .map(|l| l.split(',').map(str::to_string).collect())
        .ok_or_else(|| Error::Validation(format!("{}: no labels header", path.display())))?;
    let y = labels.len();

    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
    let parse_f = |row: usize, s: &str| -> Result<f64> {
        s.parse().map_err(|e| Error::Parse { row, message: format!("bad float {s:?}: {e}") })
    };
    let parse_u = |row: usize, s: &str| -> Result<u64> {
        s.parse().map_err(|e| Error::Parse { row, message: format!("bad count {s:?}: {e}") })
    };
    let mut draws = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| Error::Parse { row, message: e.to_string() })?;
        let expected = 2 + 4 * y;
        if record.len() != expected {
            return Err(Error::Parse {
                row,
                message: format!("expected {expected} columns, got {}", record.len()),
            });
        }
        let get = |col: usize| record.get(col).unwrap().trim();
        let mut draw = Draw {
            iteration: parse_u(row, get(0))?,
            n_total: parse_u(row, get(1))?,
            n_y: Vec::with_capacity(y),
            rho: Vec::with_capacity(y),
            imputed: Vec::with_capacity(y),
            alpha: Vec::with_capacity(y),
        };
        for i in 0..y {
            draw.n_y.push(parse_u(row, get(2 + i))?);
        }
        for i in 0..y {
            draw.rho.push(parse_f(row, get(2 + y + i))?);
        }
        for i in 0..y {
            draw.imputed.push(parse_u(row, get(2 + 2 * y + i))?);
        }
        for i in 0..y {
            draw.alpha.push(parse_f(row, get(2 + 3 * y + i))?);
        }
        draws.push(draw);
    }

    let samples = PosteriorSamples {
        labels,
        draws,
        meta: RunMeta {
            region: meta.get("region").cloned().unwrap_or_default(),
            prior_scheme: meta.get("prior_scheme").cloned().unwrap_or_default(),
            seed: meta.get("seed").and_then(|s| s.parse().ok()).unwrap_or(0),
            stream_id: meta.get("stream_id").and_then(|s| s.parse().ok()).unwrap_or(0),
            config_hash: meta.get("config_hash").cloned().unwrap_or_default(),
        },
        diagnostics: ChainDiagnostics::default(),
    };
    Ok(SamplesFile { samples, provenance: meta })
}

/// Sorted sample files in a directory (or the file itself).
pub fn collect_sample_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .map(|n| n.starts_with("samples_") && n.ends_with(".csv"))
                .unwrap_or(false)
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Validation(format!(
            "no sample files (samples_*.csv) under {}",
            path.display()
        )));
    }
    Ok(files)
}

pub fn collect_counts_files(path: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(path)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .map(|n| n.starts_with("counts_") && n.ends_with(".csv"))
                .unwrap_or(false)
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Validation(format!(
            "no count files (counts_*.csv) under {}",
            path.display()
        )));
    }
    Ok(files)
}

/// Writes records in the ingestion format (for the simulator).
pub fn write_records(path: &Path, rows: &[RecordRow], lists: usize) -> Result<()> {
    let mut out = String::from("record_id,region,label");
    for j in 1..=lists {
        write!(out, ",list{j}").expect("string write");
    }
    out.push('\n');
    for row in rows {
        write!(out, "{},{},{}", row.record_id, row.region_code, row.label.as_deref().unwrap_or(""))
            .expect("string write");
        for j in 0..lists {
            write!(out, ",{}", if row.inclusion.contains(j) { 1 } else { 0 })
                .expect("string write");
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn provenance_round_trips() {
        let text = "# config_hash: abc\n# region: R1\nkey,count\nx,1\n";
        let (meta, body) = split_provenance(text);
        assert_eq!(meta["config_hash"], "abc");
        assert_eq!(meta["region"], "R1");
        assert!(body.starts_with("key,count"));
    }
}
