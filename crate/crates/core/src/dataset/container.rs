//! Binary container for datasets, models, and maps.
//!
//! Layout: magic `EGPC`, format version (u32 LE), a kind tag (u8), the
//! kind-specific payload, and a trailing FNV-1a 64-bit checksum over all
//! preceding bytes. Scalars are little-endian; real arrays are 64-bit IEEE;
//! matrices are stored column-major. Files are written to a sibling
//! temporary path and renamed into place.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estimation::{JointPcaModel, MassWeightConfig, ParameterMap};
use crate::geometry::{GeometryClassSpec, GeometrySample, ParameterVector, PointCloud};
use crate::pca::{Fnv1a, PcaModel};

use super::{build_dataset_unchecked, Dataset};

const MAGIC: [u8; 4] = *b"EGPC";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kind {
    Dataset = 1,
    PcaModel = 2,
    ParameterMap = 3,
    JointPcaModel = 4,
}

impl Kind {
    fn from_u8(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Kind::Dataset),
            2 => Ok(Kind::PcaModel),
            3 => Ok(Kind::ParameterMap),
            4 => Ok(Kind::JointPcaModel),
            other => Err(Error::Format(format!("unknown container kind {other}"))),
        }
    }
}

pub(crate) struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    pub(crate) fn new(kind: Kind) -> Self {
        let mut buf = Vec::new();
        buf.extend_from_slice(&MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.push(kind as u8);
        Self { buf }
    }

    pub(crate) fn put_u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub(crate) fn put_u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub(crate) fn put_f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub(crate) fn put_str(&mut self, s: &str) {
        self.put_u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }

    pub(crate) fn put_f64_iter(&mut self, count: usize, values: impl Iterator<Item = f64>) {
        self.put_u64(count as u64);
        for v in values {
            self.put_f64(v);
        }
    }

    pub(crate) fn put_vector(&mut self, v: &DVector<f64>) {
        self.put_f64_iter(v.len(), v.iter().copied());
    }

    pub(crate) fn put_matrix(&mut self, m: &DMatrix<f64>) {
        self.put_u64(m.nrows() as u64);
        self.put_u64(m.ncols() as u64);
        for v in m.iter() {
            self.put_f64(*v);
        }
    }

    fn finish(mut self) -> Vec<u8> {
        let mut hash = Fnv1a::new();
        hash.write(&self.buf);
        self.buf.extend_from_slice(&hash.finish().to_le_bytes());
        self.buf
    }
}

pub(crate) fn finish_container(writer: ByteWriter, path: &Path) -> Result<()> {
    write_atomic(path, &writer.finish())
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp_name = path.as_os_str().to_owned();
    tmp_name.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp_name);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub(crate) struct ByteReader {
    data: Vec<u8>,
    pos: usize,
}

impl ByteReader {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.data.len() {
            return Err(Error::Format("container payload ends unexpectedly".into()));
        }
        let slice = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    pub(crate) fn get_u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn get_u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn get_f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn get_str(&mut self) -> Result<String> {
        let len = self.get_u32()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| Error::Format("container string is not valid UTF-8".into()))
    }

    pub(crate) fn get_f64_vec(&mut self) -> Result<Vec<f64>> {
        let count = self.get_u64()? as usize;
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push(self.get_f64()?);
        }
        Ok(out)
    }

    pub(crate) fn get_vector(&mut self) -> Result<DVector<f64>> {
        Ok(DVector::from_vec(self.get_f64_vec()?))
    }

    pub(crate) fn get_matrix(&mut self) -> Result<DMatrix<f64>> {
        let rows = self.get_u64()? as usize;
        let cols = self.get_u64()? as usize;
        let mut data = Vec::with_capacity(rows.saturating_mul(cols));
        for _ in 0..rows * cols {
            data.push(self.get_f64()?);
        }
        Ok(DMatrix::from_vec(rows, cols, data))
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.data.len() {
            return Err(Error::Format("container has trailing bytes".into()));
        }
        Ok(())
    }
}

/// Reads and authenticates a container file, returning a payload reader.
pub(crate) fn open_container(path: &Path, expected: Kind) -> Result<ByteReader> {
    let data = std::fs::read(path)?;
    if data.len() < MAGIC.len() || data[..MAGIC.len()] != MAGIC {
        return Err(Error::Format("not an EGPC container (bad magic)".into()));
    }
    if data.len() < 8 {
        return Err(Error::ChecksumMismatch);
    }
    let version = u32::from_le_bytes(data[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    if data.len() < 9 + 8 {
        return Err(Error::ChecksumMismatch);
    }
    let body_len = data.len() - 8;
    let stored = u64::from_le_bytes(data[body_len..].try_into().unwrap());
    let mut hash = Fnv1a::new();
    hash.write(&data[..body_len]);
    if hash.finish() != stored {
        return Err(Error::ChecksumMismatch);
    }
    let kind = Kind::from_u8(data[8])?;
    if kind != expected {
        return Err(Error::Format(format!(
            "container holds a {kind:?}, expected {expected:?}"
        )));
    }
    let mut reader = ByteReader { data, pos: 9 };
    reader.data.truncate(body_len);
    Ok(reader)
}

impl Dataset {
    /// Persists the dataset; `load(save(ds))` is bit-exact.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let spec = self.spec();
        let mut w = ByteWriter::new(Kind::Dataset);
        w.put_str(spec.name());
        w.put_u32(spec.k() as u32);
        w.put_u32(spec.n_points() as u32);
        w.put_u64(self.len() as u64);
        w.put_u64(self.seed());
        for &(lo, hi) in spec.ranges() {
            w.put_f64(lo);
            w.put_f64(hi);
        }
        for name in spec.param_names() {
            w.put_str(name);
        }
        w.put_u32(spec.fixed_constants().len() as u32);
        for (name, value) in spec.fixed_constants() {
            w.put_str(name);
            w.put_f64(*value);
        }
        for sample in self.samples() {
            for v in sample.params.values() {
                w.put_f64(*v);
            }
        }
        for sample in self.samples() {
            for point in sample.cloud.points() {
                w.put_f64(point[0]);
                w.put_f64(point[1]);
                w.put_f64(point[2]);
            }
        }
        finish_container(w, path.as_ref())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = open_container(path.as_ref(), Kind::Dataset)?;
        let name = r.get_str()?;
        let k = r.get_u32()? as usize;
        let n = r.get_u32()? as usize;
        let m = r.get_u64()? as usize;
        let seed = r.get_u64()?;
        let mut ranges = Vec::with_capacity(k);
        for _ in 0..k {
            let lo = r.get_f64()?;
            let hi = r.get_f64()?;
            ranges.push((lo, hi));
        }
        let mut param_names = Vec::with_capacity(k);
        for _ in 0..k {
            param_names.push(r.get_str()?);
        }
        let n_constants = r.get_u32()? as usize;
        let mut fixed_constants = Vec::with_capacity(n_constants);
        for _ in 0..n_constants {
            let cname = r.get_str()?;
            let value = r.get_f64()?;
            fixed_constants.push((cname, value));
        }
        let spec = GeometryClassSpec::new(name, param_names, ranges, n, fixed_constants)?;

        let mut all_params = Vec::with_capacity(m);
        for _ in 0..m {
            let mut values = Vec::with_capacity(k);
            for _ in 0..k {
                values.push(r.get_f64()?);
            }
            all_params.push(ParameterVector::new(values));
        }
        let mut samples = Vec::with_capacity(m);
        for params in all_params {
            let mut points = Vec::with_capacity(n);
            for _ in 0..n {
                points.push([r.get_f64()?, r.get_f64()?, r.get_f64()?]);
            }
            samples.push(GeometrySample {
                cloud: PointCloud::new(points)?,
                params,
            });
        }
        r.finish()?;
        build_dataset_unchecked(spec, samples, seed)
    }
}

impl PcaModel {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = ByteWriter::new(Kind::PcaModel);
        w.put_u64(self.l() as u64);
        w.put_u64(self.q() as u64);
        w.put_u64(self.m() as u64);
        w.put_vector(self.mean());
        w.put_vector(self.eigenvalues());
        w.put_matrix(self.eigenvectors());
        finish_container(w, path.as_ref())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = open_container(path.as_ref(), Kind::PcaModel)?;
        let l = r.get_u64()? as usize;
        let q = r.get_u64()? as usize;
        let m = r.get_u64()? as usize;
        let mean = r.get_vector()?;
        let eigenvalues = r.get_vector()?;
        let eigenvectors = r.get_matrix()?;
        r.finish()?;
        if mean.len() != l || eigenvalues.len() != q {
            return Err(Error::Format("model header disagrees with payload shapes".into()));
        }
        PcaModel::from_parts(mean, eigenvalues, eigenvectors, m)
    }
}

impl ParameterMap {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = ByteWriter::new(Kind::ParameterMap);
        w.put_u32(self.k() as u32);
        w.put_u32(self.r() as u32);
        w.put_u64(self.model_ref());
        w.put_vector(self.param_mean());
        w.put_matrix(self.h());
        finish_container(w, path.as_ref())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = open_container(path.as_ref(), Kind::ParameterMap)?;
        let k = r.get_u32()? as usize;
        let r_components = r.get_u32()? as usize;
        let model_ref = r.get_u64()?;
        let param_mean = r.get_vector()?;
        let h = r.get_matrix()?;
        r.finish()?;
        if param_mean.len() != k {
            return Err(Error::Format("map header disagrees with payload shapes".into()));
        }
        ParameterMap::from_parts(h, param_mean, r_components, model_ref)
    }
}

impl JointPcaModel {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = ByteWriter::new(Kind::JointPcaModel);
        w.put_u64(self.l() as u64);
        w.put_u64(self.k() as u64);
        w.put_u64(self.q() as u64);
        w.put_u64(self.m() as u64);
        let config = self.config();
        w.put_f64_iter(config.n_points(), config.masses().iter().copied());
        w.put_f64_iter(config.n_points(), config.weights().iter().copied());
        w.put_vector(self.eigenvalues());
        w.put_matrix(self.v());
        w.put_matrix(self.h());
        w.put_vector(self.mean_x());
        w.put_vector(self.mean_p());
        finish_container(w, path.as_ref())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = open_container(path.as_ref(), Kind::JointPcaModel)?;
        let l = r.get_u64()? as usize;
        let k = r.get_u64()? as usize;
        let q = r.get_u64()? as usize;
        let m = r.get_u64()? as usize;
        let masses = r.get_f64_vec()?;
        let weights = r.get_f64_vec()?;
        let eigenvalues = r.get_vector()?;
        let v = r.get_matrix()?;
        let h = r.get_matrix()?;
        let mean_x = r.get_vector()?;
        let mean_p = r.get_vector()?;
        r.finish()?;
        if mean_x.len() != l || mean_p.len() != k || eigenvalues.len() != q {
            return Err(Error::Format("joint model header disagrees with payload shapes".into()));
        }
        let config = MassWeightConfig::new(masses, weights)?;
        JointPcaModel::from_parts(eigenvalues, v, h, config, mean_x, mean_p, m)
    }
}
