use std::io::Write;

use nalgebra::Quaternion;

use super::{GaussianCloud, ShRest};
use crate::{Error, Result, Vec3};

/// Log-space floor for stored scales; anything below is clamped to `exp(MIN_LOG_SCALE)`.
pub const MIN_LOG_SCALE: f64 = -20.0;

/// Activated opacities are kept this far inside (0, 1).
const OPACITY_MARGIN: f64 = 1e-12;

const REQUIRED: [&str; 14] = [
    "x", "y", "z", "opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3",
    "f_dc_0", "f_dc_1", "f_dc_2",
];

#[derive(Clone, Copy, Debug, Default)]
pub struct LoadOptions {
    /// Values in the file are already activated (probabilities, linear scales, unit quaternions).
    pub activated: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Encoding {
    Ascii,
    BinaryLe,
    BinaryBe,
}

#[derive(Clone, Copy, Debug)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }
}

#[derive(Clone, Debug)]
enum PropertyKind {
    Scalar(Scalar),
    List { count: Scalar, item: Scalar },
}

#[derive(Clone, Debug)]
struct Property {
    name: String,
    kind: PropertyKind,
}

#[derive(Clone, Debug)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

struct Header {
    encoding: Encoding,
    elements: Vec<Element>,
    body_offset: usize,
}

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    const END: &[u8] = b"end_header";
    let end = bytes
        .windows(END.len())
        .position(|w| w == END)
        .ok_or_else(|| format_err("missing end_header"))?;
    let mut body_offset = end + END.len();
    // header terminator is "\n" or "\r\n"
    if bytes.get(body_offset) == Some(&b'\r') {
        body_offset += 1;
    }
    if bytes.get(body_offset) == Some(&b'\n') {
        body_offset += 1;
    }
    let text = std::str::from_utf8(&bytes[..end]).map_err(|_| format_err("header is not UTF-8"))?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("ply") {
        return Err(format_err("missing ply magic"));
    }

    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    for line in lines {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            [] | ["comment", ..] | ["obj_info", ..] => {}
            ["format", fmt, _version] => {
                encoding = Some(match *fmt {
                    "ascii" => Encoding::Ascii,
                    "binary_little_endian" => Encoding::BinaryLe,
                    "binary_big_endian" => Encoding::BinaryBe,
                    other => return Err(format_err(format!("unknown format {other}"))),
                });
            }
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count.parse().map_err(|_| format_err(format!("bad element count {count}")))?,
                properties: Vec::new(),
            }),
            ["property", "list", count, item, name] => {
                let element = elements.last_mut().ok_or_else(|| format_err("property before element"))?;
                let count = Scalar::parse(count).ok_or_else(|| format_err(format!("bad type {count}")))?;
                let item = Scalar::parse(item).ok_or_else(|| format_err(format!("bad type {item}")))?;
                element.properties.push(Property {
                    name: name.to_string(),
                    kind: PropertyKind::List { count, item },
                });
            }
            ["property", ty, name] => {
                let element = elements.last_mut().ok_or_else(|| format_err("property before element"))?;
                let ty = Scalar::parse(ty).ok_or_else(|| format_err(format!("bad type {ty}")))?;
                element.properties.push(Property {
                    name: name.to_string(),
                    kind: PropertyKind::Scalar(ty),
                });
            }
            _ => return Err(format_err(format!("unrecognized header line `{line}`"))),
        }
    }
    Ok(Header {
        encoding: encoding.ok_or_else(|| format_err("missing format line"))?,
        elements,
        body_offset,
    })
}

/// Sequential reader over the PLY body.
enum Body<'a> {
    Binary { bytes: &'a [u8], pos: usize, big_endian: bool },
    Ascii { tokens: std::str::SplitAsciiWhitespace<'a> },
}

impl<'a> Body<'a> {
    fn read(&mut self, ty: Scalar) -> Result<f64> {
        match self {
            Body::Binary { bytes, pos, big_endian } => {
                let n = ty.size();
                let raw = bytes
                    .get(*pos..*pos + n)
                    .ok_or_else(|| format_err("unexpected end of data"))?;
                *pos += n;
                let mut buf = [0u8; 8];
                buf[..n].copy_from_slice(raw);
                if *big_endian {
                    buf[..n].reverse();
                }
                Ok(match ty {
                    Scalar::I8 => buf[0] as i8 as f64,
                    Scalar::U8 => buf[0] as f64,
                    Scalar::I16 => i16::from_le_bytes([buf[0], buf[1]]) as f64,
                    Scalar::U16 => u16::from_le_bytes([buf[0], buf[1]]) as f64,
                    Scalar::I32 => i32::from_le_bytes(buf[..4].try_into().unwrap()) as f64,
                    Scalar::U32 => u32::from_le_bytes(buf[..4].try_into().unwrap()) as f64,
                    Scalar::F32 => f32::from_le_bytes(buf[..4].try_into().unwrap()) as f64,
                    Scalar::F64 => f64::from_le_bytes(buf),
                })
            }
            Body::Ascii { tokens } => {
                let tok = tokens.next().ok_or_else(|| format_err("unexpected end of data"))?;
                // "nan"/"inf" parse successfully and are rejected later with an index
                tok.parse::<f64>().map_err(|_| format_err(format!("bad number `{tok}`")))
            }
        }
    }

    fn skip_element(&mut self, element: &Element) -> Result<()> {
        for _ in 0..element.count {
            for p in &element.properties {
                match p.kind {
                    PropertyKind::Scalar(ty) => {
                        self.read(ty)?;
                    }
                    PropertyKind::List { count, item } => {
                        let len = self.read(count)? as usize;
                        for _ in 0..len {
                            self.read(item)?;
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Parses a 3DGS PLY buffer into a cloud.
///
/// By default stored values are activated: opacity through a sigmoid, scales
/// through `exp` and quaternions normalized. Properties `f_rest_*` are kept
/// verbatim.
pub fn load_ply(bytes: &[u8], opts: LoadOptions) -> Result<GaussianCloud> {
    let header = parse_header(bytes)?;
    let vertex_pos = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| format_err("missing vertex element"))?;
    let vertex = &header.elements[vertex_pos];

    let column = |name: &str| -> Result<usize> {
        vertex
            .properties
            .iter()
            .position(|p| p.name == name)
            .ok_or_else(|| format_err(format!("missing required property `{name}`")))
    };
    let required: Vec<usize> = REQUIRED.iter().map(|n| column(n)).collect::<Result<_>>()?;
    if let Some(p) = vertex
        .properties
        .iter()
        .find(|p| matches!(p.kind, PropertyKind::List { .. }))
    {
        return Err(format_err(format!("unsupported list property `{}` on vertex", p.name)));
    }

    let mut rest_columns: Vec<(usize, usize)> = vertex
        .properties
        .iter()
        .enumerate()
        .filter_map(|(col, p)| {
            p.name
                .strip_prefix("f_rest_")
                .and_then(|s| s.parse::<usize>().ok())
                .map(|k| (k, col))
        })
        .collect();
    rest_columns.sort_unstable();
    if rest_columns.iter().enumerate().any(|(i, &(k, _))| i != k) {
        return Err(format_err("f_rest_* properties are not numbered contiguously from 0"));
    }

    let n = vertex.count;
    if n == 0 {
        return Err(Error::EmptyCloud);
    }

    let mut body = match header.encoding {
        Encoding::Ascii => Body::Ascii {
            tokens: std::str::from_utf8(&bytes[header.body_offset..])
                .map_err(|_| format_err("ascii body is not UTF-8"))?
                .split_ascii_whitespace(),
        },
        enc => Body::Binary {
            bytes,
            pos: header.body_offset,
            big_endian: enc == Encoding::BinaryBe,
        },
    };
    for element in &header.elements[..vertex_pos] {
        body.skip_element(element)?;
    }

    let mut centers = Vec::with_capacity(n);
    let mut opacities = Vec::with_capacity(n);
    let mut scales = Vec::with_capacity(n);
    let mut rotations = Vec::with_capacity(n);
    let mut colors = Vec::with_capacity(n);
    let mut rest = Vec::with_capacity(n * rest_columns.len());
    let mut row = vec![0.0f64; vertex.properties.len()];

    for index in 0..n {
        for (slot, p) in row.iter_mut().zip(&vertex.properties) {
            if let PropertyKind::Scalar(ty) = p.kind {
                *slot = body.read(ty)?;
            }
        }
        let v = |k: usize| row[required[k]];
        for (k, name) in REQUIRED.iter().enumerate() {
            if !v(k).is_finite() {
                return Err(Error::Validation { field: field_of(name), index });
            }
        }
        centers.push(Vec3::new(v(0), v(1), v(2)));
        let q = Quaternion::new(v(7), v(8), v(9), v(10));
        let s = Vec3::new(v(4), v(5), v(6));
        if opts.activated {
            opacities.push(v(3));
            scales.push(s);
            rotations.push(q);
        } else {
            opacities.push(sigmoid(v(3)).clamp(OPACITY_MARGIN, 1.0 - OPACITY_MARGIN));
            scales.push(s.map(|x| x.max(MIN_LOG_SCALE).exp()));
            let norm = q.norm();
            if norm == 0.0 {
                return Err(Error::Validation { field: "rotation", index });
            }
            rotations.push(q / norm);
        }
        colors.push(Vec3::new(v(11), v(12), v(13)));
        rest.extend(rest_columns.iter().map(|&(_, col)| row[col] as f32));
    }

    let colors_rest = (!rest_columns.is_empty()).then_some(ShRest {
        stride: rest_columns.len(),
        values: rest,
    });
    GaussianCloud::new(centers, opacities, scales, rotations, colors, colors_rest)
}

fn field_of(name: &str) -> &'static str {
    match name {
        "x" | "y" | "z" => "center",
        "opacity" => "opacity",
        n if n.starts_with("scale") => "scale",
        n if n.starts_with("rot") => "rotation",
        _ => "color",
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Serializes a cloud as binary little-endian 3DGS PLY.
///
/// Property order: `x y z nx ny nz f_dc_0..2 [f_rest_*] opacity scale_0..2 rot_0..3`,
/// normals written as zeros.
pub fn save_ply(cloud: &GaussianCloud, opts: LoadOptions) -> Vec<u8> {
    let rest_stride = cloud.colors_rest().map_or(0, |r| r.stride);
    let mut out = Vec::with_capacity(256 + cloud.len() * 4 * (17 + rest_stride));
    let mut header = String::from("ply\nformat binary_little_endian 1.0\n");
    header += &format!("element vertex {}\n", cloud.len());
    for name in ["x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"] {
        header += &format!("property float {name}\n");
    }
    for k in 0..rest_stride {
        header += &format!("property float f_rest_{k}\n");
    }
    for name in ["opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"] {
        header += &format!("property float {name}\n");
    }
    header += "end_header\n";
    out.extend_from_slice(header.as_bytes());

    let mut put = |x: f64| out.write_all(&(x as f32).to_le_bytes()).unwrap();
    for i in 0..cloud.len() {
        let c = cloud.centers()[i];
        let s = cloud.scales()[i];
        let q = cloud.rotations()[i];
        let dc = cloud.colors_dc()[i];
        c.iter().for_each(|&x| put(x));
        (0..3).for_each(|_| put(0.0));
        dc.iter().for_each(|&x| put(x));
        if let Some(rest) = cloud.colors_rest() {
            rest.row(i).iter().for_each(|&x| put(x as f64));
        }
        if opts.activated {
            put(cloud.opacities()[i]);
            s.iter().for_each(|&x| put(x));
        } else {
            put(logit(cloud.opacities()[i]));
            s.iter().for_each(|&x| put(x.ln()));
        }
        [q.w, q.i, q.j, q.k].into_iter().for_each(&mut put);
    }
    out
}
