//! Dataset directory: `manifest.toml` plus `segments.csv`.
//!
//! `segments.csv` has the header `segment_id,radar_id,class_label,snr_db,s0..s{K-1}`
//! and one row per segment, ordered by sample then radar; sample values are
//! decimal dBsm with 9 significant digits. Segment ids are
//! `sample_id * N + radar_id`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AircraftProfile, RadarConfig, RawSample, RcsSegment, SimConfig, Snr};
use crate::{Error, Result};

pub const DATASET_FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const SEGMENTS_FILE: &str = "segments.csv";
pub const SIGNIFICANT_DIGITS: usize = 9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub master_seed: u64,
    pub snr_db: Snr,
    pub count_per_class: usize,
    pub num_samples: usize,
    pub samples_per_segment: usize,
    pub sim: SimConfig,
    pub radars: Vec<RadarConfig>,
    pub profiles: Vec<AircraftProfile>,
}

/// Formats `v` in plain decimal notation with `digits` significant digits.
pub fn format_significant(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let mag = v.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - mag).max(0) as usize;
    let s = format!("{v:.decimals$}");
    // Rounding up can carry into a new leading digit (9.99.. -> 10.0..).
    let rounded: f64 = s.parse().unwrap_or(v);
    if rounded != 0.0 && (rounded.abs().log10().floor() as i32) > mag && decimals > 0 {
        let d = decimals - 1;
        return format!("{v:.d$}");
    }
    s
}

/// Rounds through the on-disk representation.
pub fn quantize(v: f64) -> f64 {
    format_significant(v, SIGNIFICANT_DIGITS).parse().expect("formatted float parses")
}

fn snr_field(s: Snr) -> String {
    match s {
        Snr::Clean => "clean".to_string(),
        Snr::Db(v) => format!("{v}"),
    }
}

pub fn write_dataset(dir: &Path, manifest: &DatasetManifest, samples: &[RawSample]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mpath = dir.join(MANIFEST_FILE);
    let text = toml::to_string(manifest).map_err(|e| Error::format(&mpath, e.to_string()))?;
    fs::write(&mpath, text).map_err(|e| Error::io(&mpath, e))?;

    let spath = dir.join(SEGMENTS_FILE);
    let k = manifest.samples_per_segment;
    let mut out = String::with_capacity(samples.len() * manifest.radars.len() * (k * 12 + 32));
    out.push_str("segment_id,radar_id,class_label,snr_db");
    for i in 0..k {
        out.push_str(&format!(",s{i}"));
    }
    out.push('\n');
    for s in samples {
        for seg in &s.segments {
            if seg.samples.len() != k {
                return Err(Error::shape(format!(
                    "segment {} has {} samples, manifest says {k}",
                    seg.segment_id,
                    seg.samples.len()
                )));
            }
            out.push_str(&format!(
                "{},{},{},{}",
                seg.segment_id,
                seg.radar_id,
                seg.class_label,
                snr_field(seg.snr)
            ));
            for v in &seg.samples {
                out.push(',');
                out.push_str(&format_significant(*v, SIGNIFICANT_DIGITS));
            }
            out.push('\n');
        }
    }
    let mut f = fs::File::create(&spath).map_err(|e| Error::io(&spath, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(&spath, e))?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<DatasetManifest> {
    let mpath = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let m: DatasetManifest = toml::from_str(&text).map_err(|e| Error::format(&mpath, e.to_string()))?;
    if m.format_version != DATASET_FORMAT_VERSION {
        return Err(Error::format(
            &mpath,
            format!("unsupported format version {}", m.format_version),
        ));
    }
    Ok(m)
}

pub fn read_dataset(dir: &Path) -> Result<(DatasetManifest, Vec<RawSample>)> {
    let manifest = read_manifest(dir)?;
    let spath = dir.join(SEGMENTS_FILE);
    let n = manifest.radars.len();
    let k = manifest.samples_per_segment;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(&spath)
        .map_err(|e| Error::format(&spath, e.to_string()))?;
    let headers = rdr.headers().map_err(|e| Error::format(&spath, e.to_string()))?;
    if headers.len() != 4 + k || &headers[0] != "segment_id" || &headers[3] != "snr_db" {
        return Err(Error::format(&spath, format!("unexpected header with {} columns", headers.len())));
    }
    let bad = |row: usize, msg: &str| Error::format(&spath, format!("row {row}: {msg}"));
    let mut samples: Vec<RawSample> = Vec::with_capacity(manifest.num_samples);
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::format(&spath, e.to_string()))?;
        let segment_id: usize = rec[0].parse().map_err(|_| bad(row, "segment_id"))?;
        let radar_id: usize = rec[1].parse().map_err(|_| bad(row, "radar_id"))?;
        let class_label: u8 = rec[2].parse().map_err(|_| bad(row, "class_label"))?;
        let snr: Snr = rec[3].parse().map_err(|_| bad(row, "snr_db"))?;
        let values: Vec<f64> = (0..k)
            .map(|i| rec[4 + i].parse::<f64>().map_err(|_| bad(row, "sample value")))
            .collect::<Result<_>>()?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(bad(row, "non-finite sample"));
        }
        if radar_id >= n || segment_id % n != radar_id {
            return Err(bad(row, "segment/radar id mismatch"));
        }
        let sample_id = segment_id / n;
        if radar_id == 0 {
            samples.push(RawSample {
                sample_id,
                label: class_label,
                snr,
                segments: Vec::with_capacity(n),
            });
        }
        let cur = samples.last_mut().ok_or_else(|| bad(row, "segment before radar 0"))?;
        if cur.sample_id != sample_id || cur.segments.len() != radar_id || cur.label != class_label {
            return Err(bad(row, "segments out of order"));
        }
        cur.segments.push(RcsSegment {
            radar_id,
            class_label,
            snr,
            samples: values,
            sample_rate: manifest.sim.sample_rate,
            segment_id,
        });
    }
    if samples.len() != manifest.num_samples || samples.iter().any(|s| s.segments.len() != n) {
        return Err(Error::format(&spath, "sample count does not match manifest"));
    }
    Ok((manifest, samples))
}
