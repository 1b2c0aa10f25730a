//! Dataset JSON, report JSON, and OBJ/CSV exports.
//!
//! Every real number is written with 17 significant digits so that a save/load cycle is
//! bit-exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use immerse_core::ambient::{MultiproductSpec, SpaceFormFactor};
use immerse_core::dataset::{Chart, FactorFields, GeometricDataset};
use immerse_core::error::{AmbientError, DatasetError};
use immerse_core::immersion::ImmersionField;
use immerse_core::linalg::Mat;
use serde::{Deserialize, Serialize};
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Stream(#[from] io::Error),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema: field `{field}`: {detail}")]
    Schema { field: String, detail: String },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Ambient(#[from] AmbientError),
}

impl IoError {
    fn schema(field: impl Into<String>, detail: impl Into<String>) -> Self {
        IoError::Schema {
            field: field.into(),
            detail: detail.into(),
        }
    }

    fn file(path: &Path, source: io::Error) -> Self {
        IoError::File {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// `x` in scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Delegates layout to `F` and writes floats at full precision.
struct FullPrecision<F>(F);

macro_rules! delegate {
    ($($name:ident),*) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
            self.0.$name(w)
        })*
    };
    (first: $($name:ident),*) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
            self.0.$name(w, first)
        })*
    };
}

impl<F: Formatter> Formatter for FullPrecision<F> {
    delegate!(begin_array, end_array, end_array_value, begin_object, end_object, end_object_key, begin_object_value, end_object_value);
    delegate!(first: begin_array_value, begin_object_key);

    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(w, "{value:.16e}")
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

fn serialize_with<T: Serialize, F: Formatter>(value: &T, formatter: F) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision(formatter));
    value.serialize(&mut ser).expect("serializing to memory cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Compact JSON with full-precision floats.
pub fn to_json_compact<T: Serialize>(value: &T) -> String {
    serialize_with(value, CompactFormatter)
}

/// Indented JSON with full-precision floats.
pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    serialize_with(value, PrettyFormatter::new())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FactorHeader {
    dim: usize,
    curvature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChartHeader {
    nu: usize,
    nv: usize,
    hu: f64,
    hv: f64,
    periodic_u: bool,
    periodic_v: bool,
    #[serde(default)]
    u0: f64,
    #[serde(default)]
    v0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    version: u32,
    factors: Vec<FactorHeader>,
    chart: ChartHeader,
    base_dim: usize,
    bundle_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    header: Header,
    payload: BTreeMap<String, Vec<f64>>,
}

fn flatten<'a>(mats: impl IntoIterator<Item = &'a Mat>) -> Vec<f64> {
    let mut out = Vec::new();
    for m in mats {
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                out.push(m[(r, c)]);
            }
        }
    }
    out
}

fn unflatten(field: &str, data: &[f64], count: usize, rows: usize, cols: usize) -> Result<Vec<Mat>, IoError> {
    let per = rows * cols;
    if data.len() != count * per {
        return Err(IoError::schema(
            field,
            format!("expected {} entries ({count} x {rows}x{cols}), found {}", count * per, data.len()),
        ));
    }
    if per == 0 {
        return Ok(vec![Mat::zeros(rows, cols); count]);
    }
    Ok(data.chunks(per).map(|c| Mat::from_row_slice(rows, cols, c)).collect())
}

fn document(ds: &GeometricDataset) -> Document {
    let c = &ds.chart;
    let header = Header {
        version: FORMAT_VERSION,
        factors: ds
            .spec
            .factors()
            .iter()
            .map(|f| FactorHeader {
                dim: f.dim,
                curvature: f.curvature,
            })
            .collect(),
        chart: ChartHeader {
            nu: c.nu,
            nv: c.nv,
            hu: c.hu,
            hv: c.hv,
            periodic_u: c.periodic_u,
            periodic_v: c.periodic_v,
            u0: c.u0,
            v0: c.v0,
        },
        base_dim: ds.base_dim,
        bundle_rank: ds.bundle_rank,
    };
    let mut payload = BTreeMap::new();
    payload.insert("g".to_string(), flatten(&ds.g));
    payload.insert("B".to_string(), flatten(ds.b.iter().flatten()));
    payload.insert("e_connection_u".to_string(), flatten(&ds.e_connection[0]));
    payload.insert("e_connection_v".to_string(), flatten(&ds.e_connection[1]));
    for (i, fac) in ds.factors.iter().enumerate() {
        payload.insert(format!("f_{}", i + 1), flatten(&fac.f));
        payload.insert(format!("h_{}", i + 1), flatten(&fac.h));
        payload.insert(format!("t_{}", i + 1), flatten(&fac.t));
    }
    Document { header, payload }
}

/// Serializes a dataset to the JSON document format.
pub fn dataset_to_json(ds: &GeometricDataset) -> String {
    to_json_compact(&document(ds))
}

/// Parses and validates a dataset document.
pub fn dataset_from_json(text: &str) -> Result<GeometricDataset, IoError> {
    let mut doc: Document = serde_json::from_str(text)?;
    let h = &doc.header;
    if h.version != FORMAT_VERSION {
        return Err(IoError::schema(
            "version",
            format!("unsupported version {} (expected {FORMAT_VERSION})", h.version),
        ));
    }
    let factors = h.factors.iter().map(|f| SpaceFormFactor::new(f.dim, f.curvature)).collect();
    let spec = MultiproductSpec::new(factors)?;
    let ch = &h.chart;
    let chart = Chart::new(ch.nu, ch.nv, ch.hu, ch.hv)?
        .with_origin(ch.u0, ch.v0)
        .with_periodic(ch.periodic_u, ch.periodic_v);
    let (n, d, nodes) = (h.base_dim, h.bundle_rank, chart.num_nodes());

    let mut take = |name: &str, rows: usize, cols: usize, count: usize| -> Result<Vec<Mat>, IoError> {
        let data = doc
            .payload
            .remove(name)
            .ok_or_else(|| IoError::schema(name, "missing"))?;
        unflatten(name, &data, count, rows, cols)
    };
    let g = take("g", n, n, nodes)?;
    let b_flat = take("B", n, n, nodes * d)?;
    let b = if d == 0 {
        vec![Vec::new(); nodes]
    } else {
        b_flat.chunks(d).map(|c| c.to_vec()).collect()
    };
    let e_connection = [take("e_connection_u", d, d, nodes)?, take("e_connection_v", d, d, nodes)?];
    let mut fields = Vec::with_capacity(spec.len());
    for i in 1..=spec.len() {
        fields.push(FactorFields {
            f: take(&format!("f_{i}"), n, n, nodes)?,
            h: take(&format!("h_{i}"), d, n, nodes)?,
            t: take(&format!("t_{i}"), d, d, nodes)?,
        });
    }
    if let Some(extra) = doc.payload.keys().next() {
        return Err(IoError::schema(extra.clone(), "unknown payload field"));
    }
    Ok(GeometricDataset::new(spec, chart, n, d, g, b, e_connection, fields)?)
}

pub fn load_dataset_reader(mut reader: impl Read) -> Result<GeometricDataset, IoError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    dataset_from_json(&text)
}

pub fn load_dataset(path: &Path) -> Result<GeometricDataset, IoError> {
    let text = fs::read_to_string(path).map_err(|e| IoError::file(path, e))?;
    dataset_from_json(&text)
}

pub fn save_dataset(ds: &GeometricDataset, path: &Path) -> Result<(), IoError> {
    write_text(path, &dataset_to_json(ds))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| IoError::file(parent, e))?;
    }
    fs::write(path, text).map_err(|e| IoError::file(path, e))
}

/// One row per node: indices, chart coordinates, then the flattened ambient point.
pub fn immersion_csv(im: &ImmersionField) -> String {
    let dim = im.spec.ambient_dim();
    let mut out = String::from("iu,iv,u,v");
    for k in 0..dim {
        write!(out, ",x{k}").unwrap();
    }
    out.push('\n');
    for (node, p) in im.points.iter().enumerate() {
        let (iu, iv) = im.chart.indices(node);
        let (u, v) = im.chart.coords(iu, iv);
        write!(out, "{iu},{iv},{},{}", fmt_f64(u), fmt_f64(v)).unwrap();
        for x in p.to_flat() {
            write!(out, ",{}", fmt_f64(x)).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Named coordinate selections with at most three entries each: the whole point when the
/// ambient space is at most three-dimensional, otherwise one per factor block that fits.
pub fn obj_projections(spec: &MultiproductSpec) -> Vec<(String, Vec<usize>)> {
    if spec.ambient_dim() <= 3 {
        return vec![(String::new(), (0..spec.ambient_dim()).collect())];
    }
    let mut out = Vec::new();
    let mut offset = 0;
    for (i, dim) in spec.ambient_dims().into_iter().enumerate() {
        if dim <= 3 {
            out.push((format!("factor{}", i + 1), (offset..offset + dim).collect()));
        }
        offset += dim;
    }
    out
}

/// Triangulated grid mesh of the selected coordinates, padded with zeros to three.
pub fn immersion_obj(im: &ImmersionField, coords: &[usize]) -> String {
    let c = &im.chart;
    let mut out = String::new();
    writeln!(out, "# {} x {} grid", c.nu, c.nv).unwrap();
    for p in &im.points {
        let flat = p.to_flat();
        out.push('v');
        for k in 0..3 {
            let x = coords.get(k).map_or(0.0, |&j| flat[j]);
            write!(out, " {}", fmt_f64(x)).unwrap();
        }
        out.push('\n');
    }
    for iv in 0..c.nv - 1 {
        for iu in 0..c.nu - 1 {
            let a = c.node(iu, iv) + 1;
            let b = c.node(iu + 1, iv) + 1;
            let cc = c.node(iu + 1, iv + 1) + 1;
            let d = c.node(iu, iv + 1) + 1;
            writeln!(out, "f {a} {b} {cc}").unwrap();
            writeln!(out, "f {a} {cc} {d}").unwrap();
        }
    }
    out
}

/// Comma-separated rows under a header line.
pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
