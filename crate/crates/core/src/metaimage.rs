//! MetaImage (`.mhd` header + raw payload) reader and writer.
//!
//! Only the uncompressed, single-channel, 3D subset is supported. Payloads
//! are written little-endian; big-endian payloads are accepted on read.
//! Scenes are stored as `MET_USHORT`, masks as `MET_UCHAR`, weighted
//! b-scale scenes as `MET_FLOAT`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::volume::{BScaleScene, BinaryMask, Grid, Scene, Volume, WbsScene};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementType {
    UChar,
    UShort,
    Float,
}

impl ElementType {
    pub fn tag(self) -> &'static str {
        match self {
            ElementType::UChar => "MET_UCHAR",
            ElementType::UShort => "MET_USHORT",
            ElementType::Float => "MET_FLOAT",
        }
    }

    pub fn size(self) -> usize {
        match self {
            ElementType::UChar => 1,
            ElementType::UShort => 2,
            ElementType::Float => 4,
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "MET_UCHAR" => Some(ElementType::UChar),
            "MET_USHORT" => Some(ElementType::UShort),
            "MET_FLOAT" => Some(ElementType::Float),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub element_type: ElementType,
    /// Payload file name, relative to the header's directory.
    pub data_file: String,
    /// Additional `key = value` fields preserved in order.
    pub extra: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    U8(Vec<u8>),
    U16(Vec<u16>),
    F32(Vec<f32>),
}

impl Payload {
    pub fn len(&self) -> usize {
        match self {
            Payload::U8(v) => v.len(),
            Payload::U16(v) => v.len(),
            Payload::F32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn element_type(&self) -> ElementType {
        match self {
            Payload::U8(_) => ElementType::UChar,
            Payload::U16(_) => ElementType::UShort,
            Payload::F32(_) => ElementType::Float,
        }
    }

    fn to_f64(&self) -> Vec<f64> {
        match self {
            Payload::U8(v) => v.iter().map(|&x| x as f64).collect(),
            Payload::U16(v) => v.iter().map(|&x| x as f64).collect(),
            Payload::F32(v) => v.iter().map(|&x| x as f64).collect(),
        }
    }

    fn to_le_bytes(&self) -> Vec<u8> {
        match self {
            Payload::U8(v) => v.clone(),
            Payload::U16(v) => v.iter().flat_map(|x| x.to_le_bytes()).collect(),
            Payload::F32(v) => v.iter().flat_map(|x| x.to_le_bytes()).collect(),
        }
    }
}

/// Header and payload exactly as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RawVolume {
    pub header: Header,
    pub payload: Payload,
}

fn header_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Header {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn parse_triple<V: std::str::FromStr>(path: &Path, key: &str, value: &str) -> Result<[V; 3]> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(header_err(path, format!("{key} needs 3 values, got `{value}`")));
    }
    let mut out = Vec::with_capacity(3);
    for p in parts {
        out.push(
            p.parse::<V>()
                .map_err(|_| header_err(path, format!("{key}: cannot parse `{p}`")))?,
        );
    }
    out.try_into()
        .map_err(|_| header_err(path, format!("{key}: wrong arity")))
}

fn parse_bool(s: &str) -> bool {
    matches!(s.to_ascii_lowercase().as_str(), "true" | "1")
}

pub fn parse_header(path: &Path, text: &str) -> Result<(Header, bool)> {
    let mut ndims = None;
    let mut dims = None;
    let mut spacing = None;
    let mut element_type = None;
    let mut data_file = None;
    let mut big_endian = false;
    let mut extra = Vec::new();

    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| header_err(path, format!("line {}: expected `key = value`", lineno + 1)))?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "NDims" => {
                ndims = Some(
                    value
                        .parse::<usize>()
                        .map_err(|_| header_err(path, "NDims is not an integer"))?,
                )
            }
            "DimSize" => dims = Some(parse_triple::<usize>(path, key, value)?),
            "ElementSpacing" | "ElementSize" => {
                spacing = Some(parse_triple::<f64>(path, key, value)?)
            }
            "ElementType" => {
                element_type = Some(
                    ElementType::parse(value)
                        .ok_or_else(|| header_err(path, format!("unsupported ElementType {value}")))?,
                )
            }
            "ElementDataFile" => data_file = Some(value.to_string()),
            "BinaryDataByteOrderMSB" | "ElementByteOrderMSB" => big_endian = parse_bool(value),
            "CompressedData" if parse_bool(value) => {
                return Err(header_err(path, "compressed payloads are not supported"))
            }
            "ElementNumberOfChannels" if value != "1" => {
                return Err(header_err(path, "multi-channel volumes are not supported"))
            }
            "ObjectType" | "BinaryData" | "CompressedData" | "ElementNumberOfChannels" => {}
            _ => extra.push((key.to_string(), value.to_string())),
        }
    }

    match ndims {
        Some(3) => {}
        Some(n) => return Err(header_err(path, format!("NDims must be 3, got {n}"))),
        None => return Err(header_err(path, "missing NDims")),
    }
    let dims = dims.ok_or_else(|| header_err(path, "missing DimSize"))?;
    let element_type = element_type.ok_or_else(|| header_err(path, "missing ElementType"))?;
    let data_file = data_file.ok_or_else(|| header_err(path, "missing ElementDataFile"))?;
    if data_file == "LOCAL" {
        return Err(header_err(path, "inline (LOCAL) payloads are not supported"));
    }
    Ok((
        Header {
            dims,
            spacing: spacing.unwrap_or([1.0; 3]),
            element_type,
            data_file,
            extra,
        },
        big_endian,
    ))
}

pub fn format_header(h: &Header) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "ObjectType = Image");
    let _ = writeln!(s, "NDims = 3");
    let _ = writeln!(s, "BinaryData = True");
    let _ = writeln!(s, "BinaryDataByteOrderMSB = False");
    let _ = writeln!(s, "CompressedData = False");
    let _ = writeln!(s, "DimSize = {} {} {}", h.dims[0], h.dims[1], h.dims[2]);
    let _ = writeln!(
        s,
        "ElementSpacing = {} {} {}",
        h.spacing[0], h.spacing[1], h.spacing[2]
    );
    for (k, v) in &h.extra {
        let _ = writeln!(s, "{k} = {v}");
    }
    let _ = writeln!(s, "ElementType = {}", h.element_type.tag());
    let _ = writeln!(s, "ElementDataFile = {}", h.data_file);
    s
}

fn payload_path(header_path: &Path, data_file: &str) -> PathBuf {
    match header_path.parent() {
        Some(dir) => dir.join(data_file),
        None => PathBuf::from(data_file),
    }
}

pub fn read_raw(path: impl AsRef<Path>) -> Result<RawVolume> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (header, big_endian) = parse_header(path, &text)?;
    let data_path = payload_path(path, &header.data_file);
    let bytes = fs::read(&data_path).map_err(|e| Error::io(&data_path, e))?;
    let expected = header.dims.iter().product::<usize>();
    let size = header.element_type.size();
    if bytes.len() != expected * size {
        return Err(Error::LengthMismatch {
            expected,
            found: bytes.len() / size,
        });
    }
    let payload = match header.element_type {
        ElementType::UChar => Payload::U8(bytes),
        ElementType::UShort => Payload::U16(
            bytes
                .chunks_exact(2)
                .map(|c| {
                    let b = [c[0], c[1]];
                    if big_endian {
                        u16::from_be_bytes(b)
                    } else {
                        u16::from_le_bytes(b)
                    }
                })
                .collect(),
        ),
        ElementType::Float => Payload::F32(
            bytes
                .chunks_exact(4)
                .map(|c| {
                    let b = [c[0], c[1], c[2], c[3]];
                    if big_endian {
                        f32::from_be_bytes(b)
                    } else {
                        f32::from_le_bytes(b)
                    }
                })
                .collect(),
        ),
    };
    Ok(RawVolume { header, payload })
}

/// Writes header and payload. The payload file name is derived from the
/// header path (`name.mhd` → `name.raw`) and recorded in the header.
pub fn write_raw(path: impl AsRef<Path>, volume: &RawVolume) -> Result<()> {
    let path = path.as_ref();
    let expected = volume.header.dims.iter().product::<usize>();
    if volume.payload.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            found: volume.payload.len(),
        });
    }
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| header_err(path, "header path has no file name"))?;
    let data_file = format!("{stem}.raw");
    let mut header = volume.header.clone();
    header.data_file = data_file.clone();
    header.element_type = volume.payload.element_type();
    fs::write(path, format_header(&header)).map_err(|e| Error::io(path, e))?;
    let data_path = payload_path(path, &data_file);
    fs::write(&data_path, volume.payload.to_le_bytes()).map_err(|e| Error::io(&data_path, e))?;
    Ok(())
}

fn grid_of<T: Real>(h: &Header) -> Result<Grid<T>> {
    Grid::new(h.dims, h.spacing.map(T::lit))
}

fn header_for<T: Real>(grid: &Grid<T>, element_type: ElementType, extra: Vec<(String, String)>) -> Header {
    Header {
        dims: grid.dims(),
        spacing: grid.spacing().map(Real::as_f64),
        element_type,
        data_file: String::new(),
        extra,
    }
}

/// Loads a scene from any supported element type.
pub fn load_volume<T: Real>(path: impl AsRef<Path>) -> Result<Scene<T>> {
    let raw = read_raw(path)?;
    let grid = grid_of(&raw.header)?;
    Scene::scene(grid, raw.payload.to_f64().into_iter().map(T::lit).collect())
}

/// Saves a scene as `MET_USHORT`. Intensities are rounded to the nearest
/// integer; values above 65535 are rejected.
pub fn save_volume<T: Real>(scene: &Scene<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut out = Vec::with_capacity(scene.data().len());
    for (index, &v) in scene.data().iter().enumerate() {
        let r = v.as_f64().round();
        if !(0.0..=u16::MAX as f64).contains(&r) {
            return Err(Error::param(
                "scene",
                format!("intensity {r} at voxel {index} does not fit MET_USHORT"),
            ));
        }
        out.push(r as u16);
    }
    write_raw(
        path,
        &RawVolume {
            header: header_for(scene.grid(), ElementType::UShort, Vec::new()),
            payload: Payload::U16(out),
        },
    )
}

/// Loads a mask; any non-zero element is foreground.
pub fn load_mask<T: Real>(path: impl AsRef<Path>) -> Result<BinaryMask<T>> {
    let raw = read_raw(path)?;
    let grid = grid_of(&raw.header)?;
    let data = raw.payload.to_f64().into_iter().map(|v| v != 0.0).collect();
    Volume::new(grid, data)
}

pub fn save_mask<T: Real>(mask: &BinaryMask<T>, path: impl AsRef<Path>) -> Result<()> {
    write_raw(
        path,
        &RawVolume {
            header: header_for(mask.grid(), ElementType::UChar, Vec::new()),
            payload: Payload::U8(mask.data().iter().map(|&b| b as u8).collect()),
        },
    )
}

/// Saves per-voxel radii (`MET_UCHAR` when every radius fits, else `MET_USHORT`).
pub fn save_bscale<T: Real>(
    radii: &BScaleScene<T>,
    path: impl AsRef<Path>,
    extra: Vec<(String, String)>,
) -> Result<()> {
    let payload = if radii.data().iter().all(|&r| r <= u8::MAX as u16) {
        Payload::U8(radii.data().iter().map(|&r| r as u8).collect())
    } else {
        Payload::U16(radii.data().to_vec())
    };
    write_raw(
        path,
        &RawVolume {
            header: header_for(radii.grid(), payload.element_type(), extra),
            payload,
        },
    )
}

pub fn load_bscale<T: Real>(path: impl AsRef<Path>) -> Result<BScaleScene<T>> {
    let raw = read_raw(path)?;
    let grid = grid_of(&raw.header)?;
    let data = match raw.payload {
        Payload::U8(v) => v.into_iter().map(u16::from).collect(),
        Payload::U16(v) => v,
        Payload::F32(_) => {
            return Err(Error::Model("b-scale radii cannot be MET_FLOAT".into()));
        }
    };
    Volume::new(grid, data)
}

/// Saves a weighted b-scale scene as `MET_FLOAT`.
pub fn save_wbs<T: Real>(
    wbs: &WbsScene<T>,
    path: impl AsRef<Path>,
    extra: Vec<(String, String)>,
) -> Result<()> {
    write_raw(
        path,
        &RawVolume {
            header: header_for(wbs.grid(), ElementType::Float, extra),
            payload: Payload::F32(wbs.data().iter().map(|&v| v.as_f64() as f32).collect()),
        },
    )
}

pub fn load_wbs<T: Real>(path: impl AsRef<Path>) -> Result<WbsScene<T>> {
    load_volume(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_text(path: &Path, text: &str) {
        fs::write(path, text).unwrap();
    }

    #[test]
    fn zero_volume_loads() {
        let dir = tempfile::tempdir().unwrap();
        let hdr = dir.path().join("z.mhd");
        write_text(
            &hdr,
            "NDims = 3\nDimSize = 2 2 2\nElementSpacing = 1 1 1\nElementType = MET_USHORT\nElementDataFile = z.raw\n",
        );
        fs::write(dir.path().join("z.raw"), [0u8; 16]).unwrap();
        let s: Scene<f64> = load_volume(&hdr).unwrap();
        assert_eq!(s.data(), &[0.0; 8]);
        assert_eq!(s.spacing(), [1.0; 3]);
    }

    #[test]
    fn length_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let hdr = dir.path().join("m.mhd");
        write_text(
            &hdr,
            "NDims = 3\nDimSize = 4 4 4\nElementSpacing = 1 1 1\nElementType = MET_USHORT\nElementDataFile = m.raw\n",
        );
        fs::write(dir.path().join("m.raw"), vec![0u8; 63 * 2]).unwrap();
        let err = load_volume::<f64>(&hdr).unwrap_err();
        assert!(matches!(err, Error::LengthMismatch { expected: 64, found: 63 }));
    }

    #[test]
    fn malformed_headers_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let hdr = dir.path().join("bad.mhd");
        for text in [
            "NDims = 2\nDimSize = 2 2 2\nElementType = MET_USHORT\nElementDataFile = bad.raw\n",
            "NDims = 3\nDimSize = 2 2\nElementType = MET_USHORT\nElementDataFile = bad.raw\n",
            "NDims = 3\nDimSize = 2 2 2\nElementType = MET_DOUBLE\nElementDataFile = bad.raw\n",
            "NDims = 3\nDimSize = 2 2 2\nElementType = MET_USHORT\n",
            "garbage line\n",
        ] {
            write_text(&hdr, text);
            assert!(matches!(load_volume::<f64>(&hdr), Err(Error::Header { .. })), "{text}");
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_volume::<f64>("/nonexistent/dir/x.mhd").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn unwritable_directory_is_io_error() {
        let g = Grid::new([2, 2, 2], [1.0f64; 3]).unwrap();
        let s = Scene::scene(g, vec![0.0; 8]).unwrap();
        let err = save_volume(&s, "/nonexistent/dir/x.mhd").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn zero_scene_writes_zero_payload() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new([3, 2, 2], [1.0f64, 2.0, 0.5]).unwrap();
        let s = Scene::scene(g, vec![0.0; 12]).unwrap();
        let hdr = dir.path().join("zeros.mhd");
        save_volume(&s, &hdr).unwrap();
        let bytes = fs::read(dir.path().join("zeros.raw")).unwrap();
        assert_eq!(bytes.len(), 24);
        assert!(bytes.iter().all(|&b| b == 0));
    }

    #[test]
    fn big_endian_payload_is_read() {
        let dir = tempfile::tempdir().unwrap();
        let hdr = dir.path().join("be.mhd");
        write_text(
            &hdr,
            "NDims = 3\nDimSize = 1 1 2\nBinaryDataByteOrderMSB = True\nElementType = MET_USHORT\nElementDataFile = be.raw\n",
        );
        fs::write(dir.path().join("be.raw"), [0x01, 0x02, 0x00, 0x07]).unwrap();
        let s: Scene<f64> = load_volume(&hdr).unwrap();
        assert_eq!(s.data(), &[258.0, 7.0]);
    }

    #[test]
    fn wbs_and_mask_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new([2, 2, 1], [1.5f64, 1.5, 3.0]).unwrap();
        let w = Volume::new(g.clone(), vec![0.0, 12.5, 1e3, 7.25]).unwrap();
        let p = dir.path().join("w.mhd");
        save_wbs(&w, &p, vec![("BScaleKMax".into(), "26".into())]).unwrap();
        let back: WbsScene<f64> = load_wbs(&p).unwrap();
        assert_eq!(back, w);
        let raw = read_raw(&p).unwrap();
        assert_eq!(raw.header.extra, vec![("BScaleKMax".to_string(), "26".to_string())]);

        let m = Volume::new(g, vec![true, false, false, true]).unwrap();
        let p = dir.path().join("m.mhd");
        save_mask(&m, &p).unwrap();
        assert_eq!(load_mask::<f64>(&p).unwrap(), m);
    }
}
