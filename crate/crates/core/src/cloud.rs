//! Colored point clouds and their ASCII PLY representation.
//!
//! Required vertex properties are `x y z red green blue`. Two optional scalar
//! properties are understood: `thermal` (°C) and `thermal_score`. Missing
//! per-point values are written as `nan`.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Isometry3, Point3};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct ColoredPoint {
    pub position: Point3<f64>,
    pub rgb: [u8; 3],
    /// Temperature sampled from a thermal image, °C.
    pub thermal_raw: Option<f64>,
    /// Weighted-RGB heat score, set by [`crate::affordance::score_cloud`].
    pub thermal_score: Option<f64>,
}

impl ColoredPoint {
    pub fn new(position: Point3<f64>, rgb: [u8; 3]) -> Self {
        Self { position, rgb, thermal_raw: None, thermal_score: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<ColoredPoint>,
}

impl PointCloud {
    pub fn new(points: Vec<ColoredPoint>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Applies a rigid transform to every position.
    pub fn transformed(&self, t: &Isometry3<f64>) -> Self {
        let points = self
            .points
            .iter()
            .map(|p| ColoredPoint { position: t * p.position, ..p.clone() })
            .collect();
        Self { points }
    }
}

#[derive(Debug, Error)]
pub enum PlyError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("PLY header: {0}")]
    Header(String),
    #[error("PLY line {line}: {reason}")]
    Body { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Prop {
    X,
    Y,
    Z,
    Red,
    Green,
    Blue,
    Thermal,
    Score,
    Ignored,
}

pub fn write_ply_string(cloud: &PointCloud) -> String {
    let with_thermal = cloud.points.iter().any(|p| p.thermal_raw.is_some());
    let with_score = cloud.points.iter().any(|p| p.thermal_score.is_some());
    let mut s = String::new();
    s.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(s, "element vertex {}", cloud.len());
    s.push_str("property double x\nproperty double y\nproperty double z\n");
    s.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    if with_thermal {
        s.push_str("property double thermal\n");
    }
    if with_score {
        s.push_str("property double thermal_score\n");
    }
    s.push_str("end_header\n");
    let opt = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), |x| x.to_string());
    for p in &cloud.points {
        let q = &p.position;
        let _ = write!(s, "{} {} {} {} {} {}", q.x, q.y, q.z, p.rgb[0], p.rgb[1], p.rgb[2]);
        if with_thermal {
            let _ = write!(s, " {}", opt(p.thermal_raw));
        }
        if with_score {
            let _ = write!(s, " {}", opt(p.thermal_score));
        }
        s.push('\n');
    }
    s
}

pub fn parse_ply(text: &str) -> Result<PointCloud, PlyError> {
    let mut lines = text.lines().enumerate();
    let header_err = |m: &str| PlyError::Header(m.to_string());
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(header_err("missing 'ply' magic")),
    }
    let mut count = None;
    let mut props = Vec::new();
    let mut in_vertex = false;
    let mut ended = false;
    for (_, line) in lines.by_ref() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["format", "ascii", _] => {}
            ["format", ..] => return Err(header_err("only ascii PLY is supported")),
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", "vertex", n] => {
                count = Some(n.parse::<usize>().map_err(|_| header_err("bad vertex count"))?);
                in_vertex = true;
            }
            ["element", ..] => in_vertex = false,
            ["property", "list", ..] if in_vertex => return Err(header_err("list vertex properties unsupported")),
            ["property", _, name] if in_vertex => props.push(match *name {
                "x" => Prop::X,
                "y" => Prop::Y,
                "z" => Prop::Z,
                "red" => Prop::Red,
                "green" => Prop::Green,
                "blue" => Prop::Blue,
                "thermal" => Prop::Thermal,
                "thermal_score" => Prop::Score,
                _ => Prop::Ignored,
            }),
            ["property", ..] => {}
            ["end_header"] => {
                ended = true;
                break;
            }
            _ => return Err(header_err(&format!("unexpected header line '{line}'"))),
        }
    }
    if !ended {
        return Err(header_err("missing end_header"));
    }
    let count = count.ok_or_else(|| header_err("no vertex element"))?;
    for required in [Prop::X, Prop::Y, Prop::Z, Prop::Red, Prop::Green, Prop::Blue] {
        if !props.contains(&required) {
            return Err(header_err(&format!("missing property {required:?}")));
        }
    }

    let mut points = Vec::with_capacity(count);
    for (idx, line) in lines {
        if points.len() == count {
            break;
        }
        if line.trim().is_empty() {
            continue;
        }
        let body_err = |reason: String| PlyError::Body { line: idx + 1, reason };
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < props.len() {
            return Err(body_err(format!("expected {} values, found {}", props.len(), toks.len())));
        }
        let mut pos = [0.0; 3];
        let mut rgb = [0u8; 3];
        let mut point = ColoredPoint::new(Point3::origin(), rgb);
        for (prop, tok) in props.iter().zip(&toks) {
            let float = || tok.parse::<f64>().map_err(|_| body_err(format!("bad number '{tok}'")));
            let byte = || tok.parse::<u8>().map_err(|_| body_err(format!("bad color '{tok}'")));
            let finite = |v: f64| v.is_finite().then_some(v);
            match prop {
                Prop::X => pos[0] = float()?,
                Prop::Y => pos[1] = float()?,
                Prop::Z => pos[2] = float()?,
                Prop::Red => rgb[0] = byte()?,
                Prop::Green => rgb[1] = byte()?,
                Prop::Blue => rgb[2] = byte()?,
                Prop::Thermal => point.thermal_raw = finite(float()?),
                Prop::Score => point.thermal_score = finite(float()?),
                Prop::Ignored => {}
            }
        }
        point.position = Point3::from(pos);
        point.rgb = rgb;
        points.push(point);
    }
    if points.len() != count {
        return Err(PlyError::Header(format!("header declares {count} vertices, body has {}", points.len())));
    }
    Ok(PointCloud { points })
}

pub fn read_ply(path: &Path) -> Result<PointCloud, PlyError> {
    parse_ply(&std::fs::read_to_string(path)?)
}

pub fn write_ply(path: &Path, cloud: &PointCloud) -> Result<(), PlyError> {
    std::fs::write(path, write_ply_string(cloud))?;
    Ok(())
}
