//! Synthetic abdomen-like phantoms with known object masks.
//!
//! A subject is a boxy superellipsoid body (skin shell around soft tissue)
//! holding ellipsoidal organs. Each subject draws a global similarity
//! jitter plus per-organ center and size jitter; draws that violate
//! disjointness or principal-axis separation are rejected and redrawn.

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config::DEFAULT_SEED;
use crate::error::{Error, Result};
use crate::pose::{pc_from_all_objects, rotation_from_euler_xyz, EulerXyz, PcSystem};
use crate::scalar::Real;
use crate::volume::{BinaryMask, Grid, Scene, Volume};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodySpec {
    /// Body center in mm; `None` centers it in the volume.
    #[serde(default)]
    pub center: Option<[f64; 3]>,
    pub semi_axes: [f64; 3],
    /// Superellipsoid exponent; 2 is an ellipsoid, larger is boxier.
    pub exponent: f64,
    pub skin_thickness: f64,
    pub skin_label: String,
    pub skin_intensity: f64,
    pub tissue_intensity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipsoidSpec {
    pub label: String,
    /// Offset from the body center, mm.
    pub center: [f64; 3],
    pub semi_axes: [f64; 3],
    /// Heading, attitude, bank.
    pub euler_deg: [f64; 3],
    pub intensity: f64,
}

/// Half-widths of the uniform per-subject jitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JitterSpec {
    pub translation_mm: f64,
    pub rotation_deg: f64,
    pub scale_pct: f64,
    pub object_center_mm: f64,
    pub object_size_pct: f64,
}

impl Default for JitterSpec {
    fn default() -> Self {
        Self {
            translation_mm: 3.0,
            rotation_deg: 4.0,
            scale_pct: 3.0,
            object_center_mm: 1.5,
            object_size_pct: 5.0,
        }
    }
}

impl JitterSpec {
    pub fn none() -> Self {
        Self {
            translation_mm: 0.0,
            rotation_deg: 0.0,
            scale_pct: 0.0,
            object_center_mm: 0.0,
            object_size_pct: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomSpec {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub body: BodySpec,
    pub objects: Vec<EllipsoidSpec>,
    /// Std of additive Gaussian noise inside the body (before rounding).
    pub noise_std: f64,
    pub jitter: JitterSpec,
    /// Required empty voxels between any two objects.
    pub min_gap_voxels: usize,
    /// Required relative gap between consecutive union-shape eigenvalues.
    pub min_eigen_separation: f64,
    pub max_attempts: usize,
    pub seed: u64,
}

fn organ(label: &str, center: [f64; 3], semi_axes: [f64; 3], euler_deg: [f64; 3], intensity: f64) -> EllipsoidSpec {
    EllipsoidSpec {
        label: label.into(),
        center,
        semi_axes,
        euler_deg,
        intensity,
    }
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            dims: [80, 64, 56],
            spacing: [1.17; 3],
            body: BodySpec {
                center: None,
                semi_axes: [36.0, 27.0, 24.0],
                exponent: 4.0,
                skin_thickness: 2.5,
                skin_label: "skin".into(),
                skin_intensity: 230.0,
                tissue_intensity: 80.0,
            },
            objects: vec![
                organ("liver", [-13.0, 3.0, 2.0], [13.0, 11.0, 10.0], [0.0, 0.0, 20.0], 150.0),
                organ("lkidney", [15.0, -10.0, -6.0], [5.5, 4.5, 8.5], [0.0, 10.0, 0.0], 200.0),
                organ("rkidney", [-11.0, -14.0, -8.0], [5.5, 4.5, 8.5], [0.0, -10.0, 0.0], 175.0),
                organ("spleen", [16.0, 9.0, 5.0], [6.0, 5.0, 8.0], [0.0, 0.0, -30.0], 120.0),
            ],
            noise_std: 0.3,
            jitter: JitterSpec::default(),
            min_gap_voxels: 1,
            min_eigen_separation: 0.10,
            max_attempts: 100,
            seed: DEFAULT_SEED,
        }
    }
}

impl PhantomSpec {
    pub fn labels(&self) -> Vec<String> {
        std::iter::once(self.body.skin_label.clone())
            .chain(self.objects.iter().map(|o| o.label.clone()))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        Grid::new(self.dims, self.spacing)?;
        let b = &self.body;
        if b.semi_axes.iter().any(|&a| !(a > b.skin_thickness)) || !(b.skin_thickness > 0.0) {
            return Err(Error::param("body", "semi-axes must exceed a positive skin thickness"));
        }
        if !(b.exponent >= 1.0) {
            return Err(Error::param("body.exponent", "must be at least 1"));
        }
        if self.objects.iter().any(|o| o.semi_axes.iter().any(|&a| !(a > 0.0))) {
            return Err(Error::param("objects", "semi-axes must be positive"));
        }
        if !(self.noise_std >= 0.0) {
            return Err(Error::param("noise_std", "must be non-negative"));
        }
        let mut levels: Vec<(&str, f64)> = vec![("skin", b.skin_intensity), ("tissue", b.tissue_intensity)];
        levels.extend(self.objects.iter().map(|o| (o.label.as_str(), o.intensity)));
        if levels.iter().any(|l| !(l.1 > 0.0) || l.1 > 65535.0) {
            return Err(Error::param("intensity", "intensities must lie in (0, 65535]"));
        }
        for i in 0..levels.len() {
            for j in i + 1..levels.len() {
                if (levels[i].1 - levels[j].1).abs() < 3.0 * self.noise_std || levels[i].1 == levels[j].1 {
                    return Err(Error::param(
                        "intensity",
                        format!("`{}` and `{}` are within 3 noise std", levels[i].0, levels[j].0),
                    ));
                }
            }
        }
        let labels = self.labels();
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::param("objects", format!("duplicate label `{l}`")));
            }
        }
        if self.max_attempts == 0 {
            return Err(Error::param("max_attempts", "must be positive"));
        }
        Ok(())
    }

    fn body_center(&self) -> Vector3<f64> {
        match self.body.center {
            Some(c) => Vector3::from(c),
            None => Vector3::from_fn(|a, _| (self.dims[a] - 1) as f64 * self.spacing[a] / 2.0),
        }
    }
}

/// Global similarity a subject was drawn with: body frame to scene,
/// `p = s·R·u + center + t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectTransform {
    pub s: f64,
    pub r: Matrix3<f64>,
    pub t: Vector3<f64>,
}

#[derive(Debug, Clone)]
pub struct Phantom<T: Real> {
    pub scene: Scene<T>,
    /// Skin first, then organs in spec order.
    pub objects: Vec<(String, BinaryMask<T>)>,
    /// PC system of the union of all object masks.
    pub truth: PcSystem<T>,
    pub transform: SubjectTransform,
    pub attempts: usize,
}

struct Draw {
    transform: SubjectTransform,
    organs: Vec<(Vector3<f64>, Matrix3<f64>, Vector3<f64>)>,
}

fn uniform(rng: &mut ChaCha8Rng, half: f64) -> f64 {
    if half > 0.0 {
        rng.random_range(-half..=half)
    } else {
        0.0
    }
}

fn draw(spec: &PhantomSpec, rng: &mut ChaCha8Rng) -> Draw {
    let j = &spec.jitter;
    let t = Vector3::from_fn(|_, _| uniform(rng, j.translation_mm));
    let e = [0; 3].map(|_| uniform(rng, j.rotation_deg).to_radians());
    let r = rotation_from_euler_xyz(EulerXyz { heading: e[0], attitude: e[1], bank: e[2] });
    let s = 1.0 + uniform(rng, j.scale_pct) / 100.0;
    let organs = spec
        .objects
        .iter()
        .map(|o| {
            let c = Vector3::from(o.center) + Vector3::from_fn(|_, _| uniform(rng, j.object_center_mm));
            let a = Vector3::from_fn(|i, _| o.semi_axes[i] * (1.0 + uniform(rng, j.object_size_pct) / 100.0));
            let rot = rotation_from_euler_xyz(EulerXyz {
                heading: o.euler_deg[0].to_radians(),
                attitude: o.euler_deg[1].to_radians(),
                bank: o.euler_deg[2].to_radians(),
            });
            (c, rot, a)
        })
        .collect();
    Draw {
        transform: SubjectTransform { s, r, t },
        organs,
    }
}

/// Per-voxel label: 0 background, 1 skin, 2 tissue, 3.. organs.
fn render_labels(spec: &PhantomSpec, d: &Draw) -> Vec<u8> {
    let [nx, ny, nz] = spec.dims;
    let h = spec.spacing;
    let center = spec.body_center();
    let b = &spec.body;
    let outer = Vector3::from(b.semi_axes);
    let inner = outer.add_scalar(-b.skin_thickness);
    let e = b.exponent;
    let rt = d.transform.r.transpose();
    let inv_s = 1.0 / d.transform.s;
    let superq = |u: &Vector3<f64>, a: &Vector3<f64>| -> f64 { (0..3).map(|i| (u[i] / a[i]).abs().powf(e)).sum() };
    let mut labels = vec![0u8; nx * ny * nz];
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let p = Vector3::new(i as f64 * h[0], j as f64 * h[1], k as f64 * h[2]);
                let u = rt * (p - center - d.transform.t) * inv_s;
                if superq(&u, &outer) > 1.0 {
                    continue;
                }
                let l = i + nx * (j + ny * k);
                if superq(&u, &inner) > 1.0 {
                    labels[l] = 1;
                    continue;
                }
                labels[l] = 2;
                for (n, (c, rot, a)) in d.organs.iter().enumerate() {
                    let v = rot.transpose() * (u - c);
                    if (v.x / a.x).powi(2) + (v.y / a.y).powi(2) + (v.z / a.z).powi(2) <= 1.0 {
                        labels[l] = 3 + n as u8;
                        break;
                    }
                }
            }
        }
    }
    labels
}

/// Whether objects (every label but background and tissue) keep `gap`
/// empty voxels between each other and stay off the volume border.
fn separated(labels: &[u8], dims: [usize; 3], gap: usize) -> bool {
    let [nx, ny, nz] = dims;
    let g = gap as i64;
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let a = labels[i + nx * (j + ny * k)];
                if a == 0 || a == 2 {
                    continue;
                }
                if i == 0 || j == 0 || k == 0 || i + 1 == nx || j + 1 == ny || k + 1 == nz {
                    return false;
                }
                for dk in -g..=g {
                    for dj in -g..=g {
                        for di in -g..=g {
                            let (x, y, z) = (i as i64 + di, j as i64 + dj, k as i64 + dk);
                            if x < 0 || y < 0 || z < 0 || x >= nx as i64 || y >= ny as i64 || z >= nz as i64 {
                                continue;
                            }
                            let b = labels[x as usize + nx * (y as usize + ny * z as usize)];
                            if b != 0 && b != 2 && b != a {
                                return false;
                            }
                        }
                    }
                }
            }
        }
    }
    true
}

fn eigen_separated<T: Real>(pc: &PcSystem<T>, min: f64) -> bool {
    let l = pc.eigenvalues.map(|v| v.as_f64());
    l[0] > 0.0 && (l[0] - l[1]) >= min * l[0] && (l[1] - l[2]) >= min * l[1]
}

/// Subject `subject` of the ensemble described by `spec`. Deterministic in
/// `(spec.seed, subject)`.
pub fn generate_phantom<T: Real>(spec: &PhantomSpec, subject: u64) -> Result<Phantom<T>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(subject);
    let grid: Grid<T> = Grid::new(spec.dims, spec.spacing.map(T::lit))?;
    let n_obj = 1 + spec.objects.len();
    for attempt in 1..=spec.max_attempts {
        let d = draw(spec, &mut rng);
        let labels = render_labels(spec, &d);
        if !separated(&labels, spec.dims, spec.min_gap_voxels) {
            continue;
        }
        let code = |n: usize| if n == 0 { 1u8 } else { 2 + n as u8 };
        let names = spec.labels();
        let mut objects = Vec::with_capacity(n_obj);
        for (n, name) in names.iter().enumerate() {
            let c = code(n);
            let mask = Volume::new(grid.clone(), labels.iter().map(|&l| l == c).collect())?;
            objects.push((name.clone(), mask));
        }
        if objects.iter().any(|(_, m)| m.count() < 8) {
            continue;
        }
        let truth = match pc_from_all_objects(objects.iter().map(|(_, m)| m)) {
            Ok(pc) if eigen_separated(&pc, spec.min_eigen_separation) => pc,
            _ => continue,
        };
        let noise = if spec.noise_std > 0.0 {
            Some(Normal::new(0.0, spec.noise_std).map_err(|e| Error::param("noise_std", e.to_string()))?)
        } else {
            None
        };
        let level = |l: u8| -> f64 {
            match l {
                0 => 0.0,
                1 => spec.body.skin_intensity,
                2 => spec.body.tissue_intensity,
                n => spec.objects[(n - 3) as usize].intensity,
            }
        };
        let data: Vec<T> = labels
            .iter()
            .map(|&l| {
                let mut v = level(l);
                if l != 0 {
                    if let Some(nd) = &noise {
                        v += nd.sample(&mut rng);
                    }
                    v = v.round().max(1.0);
                }
                T::lit(v)
            })
            .collect();
        let scene = Scene::scene(grid.clone(), data)?;
        return Ok(Phantom {
            scene,
            objects,
            truth,
            transform: d.transform,
            attempts: attempt,
        });
    }
    Err(Error::PhantomUnsatisfiable {
        attempts: spec.max_attempts,
    })
}

/// Analytic volume of an ellipsoid, mm³.
pub fn ellipsoid_volume(semi_axes: [f64; 3]) -> f64 {
    4.0 / 3.0 * std::f64::consts::PI * semi_axes[0] * semi_axes[1] * semi_axes[2]
}
