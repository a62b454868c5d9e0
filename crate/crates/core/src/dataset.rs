//! Record types of a recorded (or synthesized) season and the grouping of
//! those records into per-frame measurements.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BBox, FrameId, ImageExtent, ObjectBox, PoseLog, PoseRecord};
use crate::trackgraph::TrackUpdate;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub width: f64,
    pub height: f64,
    pub frame_count: u64,
    /// Travel length of the sequence, meters.
    pub map_length: f64,
    pub season: String,
}

impl DatasetHeader {
    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err(Error::Config("image dimensions must be positive".into()));
        }
        if !(self.map_length > 0.0) {
            return Err(Error::Config("map length must be positive".into()));
        }
        Ok(())
    }

    pub fn extent(&self) -> ImageExtent {
        ImageExtent::new(self.width, self.height)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub id: u64,
    pub frame: u64,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxRecord {
    pub id: u64,
    pub frame: u64,
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BoxRecord {
    pub fn bbox(&self) -> BBox {
        BBox::new(self.x_min, self.y_min, self.x_max, self.y_max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescriptorRecord {
    pub frame: u64,
    pub vec: Vec<f64>,
}

/// Planted label of one trajectory; `None` marks clutter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub id: u64,
    pub cluster: Option<u32>,
}

/// Everything recorded for one season.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SeasonData {
    pub header: Option<DatasetHeader>,
    pub tracks: Vec<TrackRecord>,
    pub boxes: Vec<BoxRecord>,
    pub poses: Vec<PoseRecord>,
    pub descriptors: Vec<DescriptorRecord>,
}

/// Measurements of one frame in the form the graph builder consumes.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameMeasurements {
    pub frame: FrameId,
    pub updates: Vec<TrackUpdate>,
    pub boxes: Vec<ObjectBox>,
}

fn frame_entry(m: &mut BTreeMap<u64, FrameMeasurements>, f: u64) -> &mut FrameMeasurements {
    m.entry(f).or_insert_with(|| FrameMeasurements {
        frame: FrameId(f),
        updates: Vec::new(),
        boxes: Vec::new(),
    })
}

impl SeasonData {
    pub fn header(&self) -> Result<&DatasetHeader> {
        self.header
            .as_ref()
            .ok_or_else(|| Error::Config("dataset header missing".into()))
    }

    pub fn pose_log(&self) -> Result<PoseLog> {
        PoseLog::new(self.poses.clone())
    }

    /// Groups tracks and boxes by frame in ascending order, validating boxes
    /// against the image extent. Every pose frame appears, even when empty.
    pub fn frames(&self) -> Result<Vec<FrameMeasurements>> {
        let extent = self.header()?.extent();
        let mut by_frame: BTreeMap<u64, FrameMeasurements> = self
            .poses
            .iter()
            .map(|p| {
                (
                    p.frame.0,
                    FrameMeasurements {
                        frame: p.frame,
                        updates: Vec::new(),
                        boxes: Vec::new(),
                    },
                )
            })
            .collect();
        for t in &self.tracks {
            frame_entry(&mut by_frame, t.frame).updates.push(TrackUpdate {
                id: t.id,
                x: t.x,
                y: t.y,
            });
        }
        for b in &self.boxes {
            let ob = ObjectBox::new(b.id, FrameId(b.frame), b.bbox(), &extent)?;
            frame_entry(&mut by_frame, b.frame).boxes.push(ob);
        }
        Ok(by_frame.into_values().collect())
    }

    /// Descriptors grouped by frame.
    pub fn descriptors_by_frame(&self) -> BTreeMap<FrameId, Vec<Vec<f64>>> {
        let mut out: BTreeMap<FrameId, Vec<Vec<f64>>> = BTreeMap::new();
        for d in &self.descriptors {
            out.entry(FrameId(d.frame)).or_default().push(d.vec.clone());
        }
        out
    }
}
