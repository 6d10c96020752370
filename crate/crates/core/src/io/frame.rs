use std::path::Path;

use super::binary::{read_file, write_file, Reader, Writer};
use crate::error::Result;
use crate::scene::{Frame, ImuSample, Lab, Point3, PointCloud, Pose, SurfacePoint, TactileSample};

pub const FRAME_MAGIC: &[u8; 4] = b"WFRM";
pub const FRAME_VERSION: u16 = 1;
/// Semantic id stored for NULL in frame and label files.
pub const NULL_SEMANTIC: u16 = u16::MAX;

const POINT_BYTES: usize = 6 * 4 + 2;

fn point3(w: &mut Writer, p: Point3) {
    w.f64(p.x);
    w.f64(p.y);
    w.f64(p.z);
}

fn read_point3(r: &mut Reader) -> Result<Point3> {
    Ok(Point3::new(r.f64()?, r.f64()?, r.f64()?))
}

pub fn encode_frame(frame: &Frame) -> Result<Vec<u8>> {
    let mut w = Writer::new(FRAME_MAGIC, FRAME_VERSION);
    w.u32(frame.id);
    w.len(frame.cloud.len())?;
    w.len(frame.audio.len())?;
    for ch in &frame.audio {
        w.len(ch.len())?;
    }
    w.len(frame.imu.len())?;
    w.len(frame.tactile.len())?;
    w.u32(frame.sample_rate);
    w.f32(frame.accumulation_window);
    point3(&mut w, frame.pose.position);
    w.f64(frame.pose.yaw);
    point3(&mut w, frame.cloud.sensor_origin);
    for p in &frame.cloud.points {
        point3(&mut w, p.position);
        w.f64(p.color.l);
        w.f64(p.color.a);
        w.f64(p.color.b);
        w.u16(p.semantic.unwrap_or(NULL_SEMANTIC));
    }
    for ch in &frame.audio {
        ch.iter().for_each(|&v| w.f32(v));
    }
    for s in &frame.imu {
        w.f32(s.t);
        s.accel.iter().for_each(|&v| w.f32(v));
    }
    for s in &frame.tactile {
        w.f32(s.t);
        s.forces.iter().for_each(|&v| w.f32(v));
    }
    Ok(w.buf)
}

pub fn decode_frame(bytes: &[u8]) -> Result<Frame> {
    let mut r = Reader::new(bytes);
    r.header(FRAME_MAGIC, FRAME_VERSION)?;
    let id = r.u32()?;
    let n_points = r.count(POINT_BYTES)?;
    let n_channels = r.count(4)?;
    let audio_lens = (0..n_channels).map(|_| r.count(4)).collect::<Result<Vec<_>>>()?;
    let n_imu = r.count(16)?;
    let n_tactile = r.count(20)?;
    let sample_rate = r.u32()?;
    let accumulation_window = r.f32()?;
    let pose = Pose::new(read_point3(&mut r)?, r.f64()?);
    let sensor_origin = read_point3(&mut r)?;
    let points = (0..n_points)
        .map(|_| {
            let position = read_point3(&mut r)?;
            let color = Lab::new(r.f64()?, r.f64()?, r.f64()?);
            let id = r.u16()?;
            Ok(SurfacePoint { position, color, semantic: (id != NULL_SEMANTIC).then_some(id) })
        })
        .collect::<Result<Vec<_>>>()?;
    let audio = audio_lens
        .iter()
        .map(|&n| (0..n).map(|_| r.f32()).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let imu = (0..n_imu)
        .map(|_| Ok(ImuSample { t: r.f32()?, accel: [r.f32()?, r.f32()?, r.f32()?] }))
        .collect::<Result<Vec<_>>>()?;
    let tactile = (0..n_tactile)
        .map(|_| Ok(TactileSample { t: r.f32()?, forces: [r.f32()?, r.f32()?, r.f32()?, r.f32()?] }))
        .collect::<Result<Vec<_>>>()?;
    r.finish()?;
    Ok(Frame {
        id,
        cloud: PointCloud { points, sensor_origin },
        audio,
        sample_rate,
        imu,
        tactile,
        pose,
        accumulation_window,
    })
}

pub fn write_frame(path: &Path, frame: &Frame) -> Result<()> {
    write_file(path, &encode_frame(frame)?)
}

pub fn read_frame(path: &Path) -> Result<Frame> {
    decode_frame(&read_file(path)?)
}
