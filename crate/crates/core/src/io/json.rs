use std::path::Path;

use nalgebra::Matrix3;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, Frame, Plane, Pose, Vec3};
use crate::layout::RoleAssignment;
use crate::losses::PlaneSet;

use super::{read_file, write_atomic};

/// Pretty JSON with a trailing newline. Field order follows declaration order,
/// and floats are written in shortest round-trip form, so output is
/// byte-stable and parses back bit-exactly.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::SchemaError(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::SchemaError(e.to_string()))
}

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    write_atomic(path, to_json(value)?.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let bytes = read_file(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| Error::SchemaError(e.to_string()))?;
    from_json(text)
}

/// Coordinate frame tag of plane files; only camera-frame planes are stored.
pub const CAMERA_FRAME: &str = "camera";

/// Planes of one image with optional room-role metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanesDocument {
    pub planes: PlaneSet,
    pub roles: Option<RoleAssignment>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlaneEntry {
    param: [f64; 3],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanesFile {
    planes: Vec<PlaneEntry>,
    k_capacity: usize,
    frame: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    roles: Option<RoleAssignment>,
}

impl PlanesDocument {
    pub fn new(planes: PlaneSet) -> Self {
        Self { planes, roles: None }
    }

    pub fn to_json(&self) -> Result<String> {
        let file = PlanesFile {
            planes: self.planes.params().iter().map(|p| PlaneEntry { param: [p.x, p.y, p.z] }).collect(),
            k_capacity: self.planes.capacity(),
            frame: CAMERA_FRAME.into(),
            roles: self.roles,
        };
        to_json(&file)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PlanesFile = from_json(text)?;
        if file.frame != CAMERA_FRAME {
            return Err(Error::SchemaError(format!("frame must be \"{CAMERA_FRAME}\", got \"{}\"", file.frame)));
        }
        if file.planes.is_empty() {
            return Err(Error::SchemaError("at least one plane is required".into()));
        }
        if file.planes.len() > file.k_capacity {
            return Err(Error::SchemaError(format!(
                "{} planes exceed k_capacity {}",
                file.planes.len(),
                file.k_capacity
            )));
        }
        let planes = file
            .planes
            .iter()
            .enumerate()
            .map(|(i, e)| {
                Plane::from_param(Vec3::from(e.param)).map_err(|err| Error::SchemaError(format!("plane {i}: {err}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let n = planes.len();
        let planes = PlaneSet::new(planes, file.k_capacity).map_err(|e| Error::SchemaError(e.to_string()))?;
        if let Some(roles) = &file.roles {
            roles.validate(n).map_err(|e| Error::SchemaError(e.to_string()))?;
        }
        Ok(Self { planes, roles: file.roles })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = read_file(path)?;
        Self::from_json(std::str::from_utf8(&bytes).map_err(|e| Error::SchemaError(e.to_string()))?)
    }
}

pub fn parse_intrinsics(text: &str) -> Result<CameraIntrinsics> {
    let k: CameraIntrinsics = from_json(text)?;
    k.validate().map_err(|e| Error::SchemaError(e.to_string()))?;
    Ok(k)
}

pub fn read_intrinsics(path: impl AsRef<Path>) -> Result<CameraIntrinsics> {
    let bytes = read_file(path)?;
    parse_intrinsics(std::str::from_utf8(&bytes).map_err(|e| Error::SchemaError(e.to_string()))?)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameEntry {
    intrinsics: CameraIntrinsics,
    /// World-to-camera rotation, row-major.
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryFile {
    frames: Vec<FrameEntry>,
}

/// `{"frames": [{"intrinsics": {..}, "rotation": [[..]], "translation": [..]}]}`.
pub fn trajectory_to_json(frames: &[Frame]) -> Result<String> {
    let frames = frames
        .iter()
        .map(|f| {
            let r = f.pose.rotation();
            let t = f.pose.translation();
            FrameEntry {
                intrinsics: f.intrinsics,
                rotation: std::array::from_fn(|i| std::array::from_fn(|j| r[(i, j)])),
                translation: [t.x, t.y, t.z],
            }
        })
        .collect();
    to_json(&TrajectoryFile { frames })
}

pub fn parse_trajectory(text: &str) -> Result<Vec<Frame>> {
    let file: TrajectoryFile = from_json(text)?;
    file.frames
        .into_iter()
        .enumerate()
        .map(|(i, e)| {
            let schema = |err: Error| Error::SchemaError(format!("frame {i}: {err}"));
            e.intrinsics.validate().map_err(schema)?;
            let r = Matrix3::from_fn(|a, b| e.rotation[a][b]);
            let pose = Pose::new(r, Vec3::from(e.translation)).map_err(schema)?;
            Ok(Frame { intrinsics: e.intrinsics, pose })
        })
        .collect()
}

pub fn read_trajectory(path: impl AsRef<Path>) -> Result<Vec<Frame>> {
    let bytes = read_file(path)?;
    parse_trajectory(std::str::from_utf8(&bytes).map_err(|e| Error::SchemaError(e.to_string()))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn capacity_is_preserved() {
        let text = r#"{"planes":[{"param":[0,0,1]},{"param":[1,0,0]},{"param":[0,2,0]},{"param":[0,0,3]}],
                       "k_capacity":10,"frame":"camera"}"#;
        let doc = PlanesDocument::from_json(text).unwrap();
        assert_eq!(doc.planes.len(), 4);
        assert_eq!(doc.planes.capacity(), 10);
    }

    #[test]
    fn schema_violations() {
        for bad in [
            r#"{"planes":[],"k_capacity":10,"frame":"camera"}"#,
            r#"{"planes":[{"param":[0,0,1]}],"k_capacity":10,"frame":"world"}"#,
            r#"{"planes":[{"param":[0,0,1]}],"k_capacity":0,"frame":"camera"}"#,
            r#"{"planes":[{"param":[0,0,0]}],"k_capacity":10,"frame":"camera"}"#,
            r#"{"planes":[{"param":[0,0,1]}],"k_capacity":10,"frame":"camera","extra":1}"#,
            r#"{"planes":[{"param":[0,0,1]}],"k_capacity":10,"frame":"camera","roles":{"floor":3}}"#,
            r#"{"planes":[{"param":[0,0]}],"k_capacity":10,"frame":"camera"}"#,
        ] {
            assert!(matches!(PlanesDocument::from_json(bad), Err(Error::SchemaError(_))), "{bad}");
        }
    }

    #[test]
    fn random_planes_round_trip_bit_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let planes: Vec<Plane> = (0..rng.random_range(1..=10))
                .map(|_| {
                    let v = Vec3::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(0.1..9.0));
                    Plane::from_param(v).unwrap()
                })
                .collect();
            let doc = PlanesDocument::new(PlaneSet::with_default_capacity(planes).unwrap());
            let text = doc.to_json().unwrap();
            let back = PlanesDocument::from_json(&text).unwrap();
            for (a, b) in back.planes.params().iter().zip(doc.planes.params()) {
                assert_eq!(a.map(f64::to_bits), b.map(f64::to_bits));
            }
            assert_eq!(back.to_json().unwrap(), text);
        }
    }

    #[test]
    fn trajectory_round_trip() {
        let k = CameraIntrinsics::centered(100.0, 32, 24).unwrap();
        let r = nalgebra::Rotation3::from_euler_angles(0.1, -0.3, 0.7).into_inner();
        let frames = vec![Frame { intrinsics: k, pose: Pose::new(r, Vec3::new(0.5, -1.0, 2.0)).unwrap() }];
        let text = trajectory_to_json(&frames).unwrap();
        assert_eq!(parse_trajectory(&text).unwrap(), frames);
        let bad = text.replace("0.5", "\"x\"");
        assert!(matches!(parse_trajectory(&bad), Err(Error::SchemaError(_))));
    }
}
