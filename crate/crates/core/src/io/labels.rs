use std::path::Path;

use super::binary::{read_file, write_file, Reader, Writer};
use super::frame::NULL_SEMANTIC;
use crate::error::{Error, Result};
use crate::label::LabeledFrame;
use crate::scene::{Point3, QuerySample, SampleKind};

pub const LABEL_MAGIC: &[u8; 4] = b"WLBL";
pub const LABEL_VERSION: u16 = 1;
/// Color bin stored for NULL color.
pub const NULL_COLOR: u8 = u8::MAX;

const SAMPLE_BYTES: usize = 5 * 4 + 3 + 2 + 1;

fn kind_code(kind: SampleKind) -> u8 {
    match kind {
        SampleKind::Surface => 0,
        SampleKind::Free => 1,
        SampleKind::Negative => 2,
    }
}

pub fn encode_labels(labels: &LabeledFrame) -> Result<Vec<u8>> {
    let mut w = Writer::new(LABEL_MAGIC, LABEL_VERSION);
    w.u32(labels.frame_id);
    w.f64(labels.traversability);
    w.len(labels.samples.len())?;
    for s in &labels.samples {
        w.f64(s.position.x);
        w.f64(s.position.y);
        w.f64(s.position.z);
        w.f64(s.sdf);
        w.f64(s.confidence);
        w.bytes(&s.color_bins.unwrap_or([NULL_COLOR; 3]));
        w.u16(s.semantic.unwrap_or(NULL_SEMANTIC));
        w.u8(kind_code(s.kind));
    }
    Ok(w.buf)
}

/// Decodes and checks every sample's invariants.
pub fn decode_labels(bytes: &[u8]) -> Result<LabeledFrame> {
    let mut r = Reader::new(bytes);
    r.header(LABEL_MAGIC, LABEL_VERSION)?;
    let frame_id = r.u32()?;
    let traversability = r.f64()?;
    let n = r.count(SAMPLE_BYTES)?;
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let position = Point3::new(r.f64()?, r.f64()?, r.f64()?);
        let (sdf, confidence) = (r.f64()?, r.f64()?);
        let bins: [u8; 3] = r.take(3)?.try_into().expect("three bytes");
        let color_bins = match bins {
            [NULL_COLOR, NULL_COLOR, NULL_COLOR] => None,
            b if b.contains(&NULL_COLOR) => return Err(r.error("partially NULL color")),
            b => Some(b),
        };
        let semantic = r.u16()?;
        let kind = match r.u8()? {
            0 => SampleKind::Surface,
            1 => SampleKind::Free,
            2 => SampleKind::Negative,
            k => return Err(r.error(format!("unknown sample kind {k}"))),
        };
        samples.push(QuerySample {
            position,
            sdf,
            confidence,
            color_bins,
            semantic: (semantic != NULL_SEMANTIC).then_some(semantic),
            kind,
        });
    }
    r.finish()?;
    for (index, s) in samples.iter().enumerate() {
        s.check().map_err(|message| Error::Validation { index, message })?;
    }
    if !(0.0..=1.0).contains(&traversability) {
        return Err(Error::Format { offset: 10, message: format!("traversability {traversability} outside [0,1]") });
    }
    Ok(LabeledFrame { frame_id, samples, traversability })
}

pub fn write_labels(path: &Path, labels: &LabeledFrame) -> Result<()> {
    write_file(path, &encode_labels(labels)?)
}

pub fn read_labels(path: &Path) -> Result<LabeledFrame> {
    decode_labels(&read_file(path)?)
}
