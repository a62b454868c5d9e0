//! Line-delimited JSON records and the on-disk layout of a season.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use mapseg::dataset::{
    BoxRecord, DatasetHeader, DescriptorRecord, SeasonData, TrackRecord, TruthRecord,
};
use mapseg::model::{FrameId, ObjectBox, PoseRecord};
use mapseg::synth::GeneratedSeason;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const HEADER: &str = "header.json";
pub const TRACKS: &str = "tracks.jsonl";
pub const BOXES: &str = "boxes.jsonl";
pub const POSES: &str = "poses.jsonl";
pub const DESCRIPTORS: &str = "descriptors.jsonl";
pub const TRUTH: &str = "truth.jsonl";

fn open(path: &Path) -> CliResult<File> {
    File::open(path).map_err(|e| CliError::io(path, e))
}

/// Reads one JSON object per non-blank line. `check` sees each record with
/// its 1-based line number and may reject it.
pub fn read_jsonl_with<T: DeserializeOwned>(
    path: &Path,
    mut check: impl FnMut(&T) -> Result<(), String>,
) -> CliResult<Vec<T>> {
    let reader = BufReader::new(open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let data_err = |message: String| CliError::Data {
            file: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let line = line.map_err(|e| data_err(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(&line).map_err(|e| data_err(e.to_string()))?;
        check(&record).map_err(data_err)?;
        out.push(record);
    }
    Ok(out)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    read_jsonl_with(path, |_| Ok(()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data {
        file: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

pub fn write_jsonl<'a, T: Serialize + 'a>(
    path: &Path,
    records: impl IntoIterator<Item = &'a T>,
) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| CliError::io(path, e))?;
        w.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// Loads a season directory. Descriptors are optional; records are checked
/// against the header as they are read.
pub fn load_season(dir: &Path) -> CliResult<SeasonData> {
    let header: DatasetHeader = read_json(&dir.join(HEADER))?;
    header.validate().map_err(|e| CliError::Data {
        file: dir.join(HEADER),
        line: 1,
        message: e.to_string(),
    })?;
    let extent = header.extent();

    let mut last_frame = 0u64;
    let tracks = read_jsonl_with(&dir.join(TRACKS), |t: &TrackRecord| {
        if t.frame < last_frame {
            return Err(format!("frame {} after frame {last_frame}", t.frame));
        }
        last_frame = t.frame;
        if !extent.contains(t.x, t.y) {
            return Err(format!("point ({}, {}) lies outside the image", t.x, t.y));
        }
        Ok(())
    })?;
    let boxes = read_jsonl_with(&dir.join(BOXES), |b: &BoxRecord| {
        ObjectBox::new(b.id, FrameId(b.frame), b.bbox(), &extent)
            .map(|_| ())
            .map_err(|e| e.to_string())
    })?;
    let mut prev: Option<PoseRecord> = None;
    let poses = read_jsonl_with(&dir.join(POSES), |p: &PoseRecord| {
        if let Some(q) = prev {
            if p.frame <= q.frame || p.s < q.s {
                return Err("pose frames and travel distance must increase".into());
            }
        }
        prev = Some(*p);
        Ok(())
    })?;
    let desc_path = dir.join(DESCRIPTORS);
    let descriptors = if desc_path.exists() {
        let mut dim: Option<usize> = None;
        read_jsonl_with(&desc_path, |d: &DescriptorRecord| {
            match dim {
                Some(n) if n != d.vec.len() => {
                    return Err(format!("descriptor has {} entries, expected {n}", d.vec.len()))
                }
                _ => dim = Some(d.vec.len()),
            }
            Ok(())
        })?
    } else {
        Vec::new()
    };
    Ok(SeasonData {
        header: Some(header),
        tracks,
        boxes,
        poses,
        descriptors,
    })
}

pub fn load_truth(dir: &Path) -> CliResult<Option<Vec<TruthRecord>>> {
    let path = dir.join(TRUTH);
    if !path.exists() {
        return Ok(None);
    }
    read_jsonl(&path).map(Some)
}

pub fn save_season(dir: &Path, season: &GeneratedSeason) -> CliResult<()> {
    create_dir(dir)?;
    let d = &season.data;
    let header = d.header.as_ref().ok_or_else(|| {
        CliError::Invariant("generated season has no header".into())
    })?;
    write_json(&dir.join(HEADER), header)?;
    write_jsonl(&dir.join(TRACKS), &d.tracks)?;
    write_jsonl(&dir.join(BOXES), &d.boxes)?;
    write_jsonl(&dir.join(POSES), &d.poses)?;
    write_jsonl(&dir.join(DESCRIPTORS), &d.descriptors)?;
    write_jsonl(&dir.join(TRUTH), &season.truth.records())
}

pub fn season_dir(root: &Path, season: u32) -> PathBuf {
    root.join(format!("season-{season}"))
}
