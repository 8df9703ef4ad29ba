//! Room layout estimation from a plane set with role assignments.
//!
//! Every configuration in a fixed box-room catalog is projected into the
//! image by first exit from the room interior (each pixel takes the visible
//! role whose plane has the smallest positive depth along the ray), scored by
//! agreement with the winner-takes-all plane segmentation, and the best
//! configuration wins.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{plane_depth, CameraIntrinsics, Plane};
use crate::maps::{same_size, ProbMaskStack};
use crate::segmentation::masks_to_labels;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Ceiling,
    Floor,
    WallLeft,
    WallMiddle,
    WallRight,
}

impl Role {
    pub const ALL: [Role; 5] = [Role::Ceiling, Role::Floor, Role::WallLeft, Role::WallMiddle, Role::WallRight];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Role> {
        Self::ALL.get(i).copied()
    }

    fn bit(self) -> u8 {
        1 << self.index()
    }
}

/// Per-pixel room roles; `None` marks pixels without a role.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleMap {
    width: usize,
    height: usize,
    roles: Vec<Option<Role>>,
}

impl RoleMap {
    pub fn new(width: usize, height: usize, roles: Vec<Option<Role>>) -> Result<Self> {
        if roles.len() != width * height {
            return Err(Error::DimensionMismatch(format!("{} roles for {width}x{height}", roles.len())));
        }
        Ok(Self { width, height, roles })
    }

    pub fn filled(width: usize, height: usize, role: Option<Role>) -> Self {
        Self { width, height, roles: vec![role; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn size(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn roles(&self) -> &[Option<Role>] {
        &self.roles
    }

    pub fn get(&self, u: usize, v: usize) -> Option<Role> {
        self.roles[v * self.width + u]
    }

    pub fn at(&self, index: usize) -> Option<Role> {
        self.roles[index]
    }

    pub fn set_at(&mut self, index: usize, role: Option<Role>) {
        self.roles[index] = role;
    }

    /// Roles present anywhere in the map.
    pub fn visible(&self) -> LayoutConfiguration {
        LayoutConfiguration(self.roles.iter().flatten().fold(0, |m, r| m | r.bit()))
    }
}

/// Plane index per role.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<Role, usize>", into = "BTreeMap<Role, usize>")]
pub struct RoleAssignment {
    planes: [Option<usize>; 5],
}

impl RoleAssignment {
    pub fn new(pairs: impl IntoIterator<Item = (Role, usize)>) -> Result<Self> {
        let mut planes = [None; 5];
        for (role, plane) in pairs {
            if planes.iter().flatten().any(|&p| p == plane) {
                return Err(Error::InvalidConfig(format!("plane {plane} assigned to two roles")));
            }
            planes[role.index()] = Some(plane);
        }
        Ok(Self { planes })
    }

    pub fn plane(&self, role: Role) -> Option<usize> {
        self.planes[role.index()]
    }

    pub fn role_of(&self, plane: usize) -> Option<Role> {
        Role::ALL.into_iter().find(|r| self.plane(*r) == Some(plane))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Role, usize)> + '_ {
        Role::ALL.into_iter().filter_map(|r| self.plane(r).map(|p| (r, p)))
    }

    pub fn validate(&self, num_planes: usize) -> Result<()> {
        match self.iter().find(|(_, p)| *p >= num_planes) {
            Some((r, p)) => Err(Error::InvalidConfig(format!("role {r:?} references plane {p} of {num_planes}"))),
            None => Ok(()),
        }
    }
}

impl TryFrom<BTreeMap<Role, usize>> for RoleAssignment {
    type Error = Error;
    fn try_from(m: BTreeMap<Role, usize>) -> Result<Self> {
        Self::new(m)
    }
}

impl From<RoleAssignment> for BTreeMap<Role, usize> {
    fn from(a: RoleAssignment) -> Self {
        a.iter().collect()
    }
}

/// Set of visible roles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LayoutConfiguration(u8);

impl LayoutConfiguration {
    pub fn from_roles(roles: &[Role]) -> Self {
        Self(roles.iter().fold(0, |m, r| m | r.bit()))
    }

    pub fn contains(&self, role: Role) -> bool {
        self.0 & role.bit() != 0
    }

    pub fn roles(&self) -> Vec<Role> {
        Role::ALL.into_iter().filter(|r| self.contains(*r)).collect()
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    /// Catalog membership: at least one of floor, ceiling, middle wall, and
    /// visible walls contiguous in left-middle-right order.
    pub fn is_valid(&self) -> bool {
        let anchor = self.contains(Role::Floor) || self.contains(Role::Ceiling) || self.contains(Role::WallMiddle);
        let split_walls =
            self.contains(Role::WallLeft) && self.contains(Role::WallRight) && !self.contains(Role::WallMiddle);
        anchor && !split_walls
    }
}

impl Serialize for LayoutConfiguration {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.roles().serialize(s)
    }
}

impl<'de> Deserialize<'de> for LayoutConfiguration {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let roles = Vec::<Role>::deserialize(d)?;
        let c = Self::from_roles(&roles);
        if !c.is_valid() {
            return Err(serde::de::Error::custom("layout configuration outside the catalog"));
        }
        Ok(c)
    }
}

/// All valid configurations, fewest roles first.
pub fn catalog() -> Vec<LayoutConfiguration> {
    let mut all: Vec<LayoutConfiguration> = (1u8..32).map(LayoutConfiguration).filter(|c| c.is_valid()).collect();
    all.sort_by_key(|c| (c.len(), c.0));
    all
}

/// First-exit projection of a configuration.
///
/// Pixels where no visible role's plane is defined take the middle wall when
/// visible, otherwise the visible role whose plane normal is most aligned
/// with the viewing ray.
pub fn project_layout(
    planes: &[Plane],
    roles: &RoleAssignment,
    config: LayoutConfiguration,
    k: &CameraIntrinsics,
) -> Result<RoleMap> {
    if !config.is_valid() {
        return Err(Error::InvalidConfig(format!("{:?} is not in the catalog", config.roles())));
    }
    roles.validate(planes.len())?;
    let visible: Vec<(Role, Plane)> = config
        .roles()
        .into_iter()
        .map(|r| {
            roles
                .plane(r)
                .map(|p| (r, planes[p]))
                .ok_or_else(|| Error::InvalidConfig(format!("role {r:?} has no plane")))
        })
        .collect::<Result<_>>()?;

    let mut out = RoleMap::filled(k.width, k.height, None);
    for v in 0..k.height {
        for u in 0..k.width {
            let (uf, vf) = (u as f64, v as f64);
            let nearest = visible
                .iter()
                .filter_map(|(r, p)| plane_depth(p, uf, vf, k).map(|z| (*r, z)))
                .fold(None, |best: Option<(Role, f64)>, (r, z)| match best {
                    Some((_, bz)) if bz <= z => best,
                    _ => Some((r, z)),
                });
            let role = match nearest {
                Some((r, _)) => r,
                None if config.contains(Role::WallMiddle) => Role::WallMiddle,
                None => {
                    let ray = k.ray(uf, vf).normalize();
                    visible
                        .iter()
                        .map(|(r, p)| (*r, p.normal().dot(&ray)))
                        .fold((visible[0].0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b })
                        .0
                }
            };
            out.set_at(v * k.width + u, Some(role));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutResult {
    pub roles: RoleMap,
    pub configuration: LayoutConfiguration,
    /// Pixels where the layout agrees with the winner-takes-all segmentation.
    pub score: usize,
}

/// Agreement count between a projected layout and per-pixel plane labels.
/// Non-role planes and non-planar pixels never agree.
pub fn layout_score(layout: &RoleMap, labels: &crate::LabelMap, roles: &RoleAssignment) -> usize {
    (0..labels.len())
        .filter(|&i| match (labels.at(i), layout.at(i)) {
            (Some(p), Some(r)) => roles.role_of(p) == Some(r),
            _ => false,
        })
        .count()
}

/// Scores every catalog configuration whose roles all have planes and keeps
/// the best; ties go to the configuration with fewer visible roles.
pub fn estimate_layout(
    planes: &[Plane],
    roles: &RoleAssignment,
    masks: &ProbMaskStack,
    k: &CameraIntrinsics,
) -> Result<LayoutResult> {
    same_size(masks.size(), (k.width, k.height), "masks and intrinsics")?;
    if masks.channels() != planes.len() + 1 {
        return Err(Error::DimensionMismatch(format!(
            "{} mask channels for {} planes",
            masks.channels(),
            planes.len()
        )));
    }
    roles.validate(planes.len())?;
    let labels = masks_to_labels(masks);
    let mut best: Option<LayoutResult> = None;
    for config in catalog() {
        if config.roles().iter().any(|r| roles.plane(*r).is_none()) {
            continue;
        }
        let layout = project_layout(planes, roles, config, k)?;
        let score = layout_score(&layout, &labels, roles);
        if best.as_ref().is_none_or(|b| score > b.score) {
            best = Some(LayoutResult { roles: layout, configuration: config, score });
        }
    }
    best.ok_or_else(|| Error::InvalidConfig("no catalog configuration has planes for all its roles".into()))
}

/// Fraction of pixels whose roles differ.
pub fn layout_pixel_error(pred: &RoleMap, gt: &RoleMap) -> Result<f64> {
    same_size(pred.size(), gt.size(), "layout maps")?;
    if pred.roles.is_empty() {
        return Ok(0.0);
    }
    let diff = pred.roles.iter().zip(&gt.roles).filter(|(a, b)| a != b).count();
    Ok(diff as f64 / pred.roles.len() as f64)
}

/// Heuristic role proposal from camera-frame plane normals, assuming the
/// camera's `+y` axis roughly points down.
///
/// Floor: normal within 30 degrees of `+y`; ceiling: within 30 degrees of `-y`;
/// walls: normals within 30 degrees of horizontal, binned by heading into
/// left (< -45 degrees), middle and right (> 45 degrees). The nearest plane
/// wins each role.
pub fn propose_roles(planes: &[Plane]) -> RoleAssignment {
    let cos30 = 30f64.to_radians().cos();
    let sin30 = 30f64.to_radians().sin();
    let mut best: [Option<(usize, f64)>; 5] = [None; 5];
    for (i, p) in planes.iter().enumerate() {
        let (n, d) = p.decode();
        let role = if n.y >= cos30 {
            Some(Role::Floor)
        } else if -n.y >= cos30 {
            Some(Role::Ceiling)
        } else if n.y.abs() <= sin30 {
            let heading = n.x.atan2(n.z).to_degrees();
            Some(if heading < -45.0 {
                Role::WallLeft
            } else if heading > 45.0 {
                Role::WallRight
            } else {
                Role::WallMiddle
            })
        } else {
            None
        };
        if let Some(r) = role {
            let slot = &mut best[r.index()];
            if slot.is_none_or(|(_, bd)| d < bd) {
                *slot = Some((i, d));
            }
        }
    }
    RoleAssignment { planes: best.map(|b| b.map(|(i, _)| i)) }
}
