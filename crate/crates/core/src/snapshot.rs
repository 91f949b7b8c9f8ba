//! Binary field snapshots.
//!
//! One JSON header line `{n, N, L, representation, components, map}`
//! followed by little-endian `f64` blocks, one per component, in row-major
//! axis order. Spectral blocks interleave real and imaginary parts. A map
//! snapshot stores the displacement `ψ` of `φ = id + ψ`.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ScalarField, Spectrum, VectorField, VectorSpectrum};
use crate::grid::{Grid, GridSpec};
use crate::lagrangian::DiffeoMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Physical,
    Spectral,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub n: usize,
    #[serde(rename = "N")]
    pub points: usize,
    #[serde(rename = "L")]
    pub length: f64,
    pub representation: Representation,
    pub components: usize,
    #[serde(default)]
    pub map: bool,
}

impl SnapshotHeader {
    fn for_grid(grid: &Grid, representation: Representation, components: usize, map: bool) -> Self {
        let spec = grid.spec();
        SnapshotHeader {
            n: spec.n,
            points: spec.points,
            length: spec.length,
            representation,
            components,
            map,
        }
    }

    fn block_len(&self, grid: &Grid) -> usize {
        match self.representation {
            Representation::Physical => grid.len(),
            Representation::Spectral => 2 * grid.len(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    pub grid: Grid,
    /// One block per component.
    pub blocks: Vec<Vec<f64>>,
}

impl Snapshot {
    pub fn vector_field(&self) -> Result<VectorField> {
        if self.header.representation != Representation::Physical {
            return Err(Error::Format("expected a physical snapshot".into()));
        }
        let comps = self
            .blocks
            .iter()
            .map(|b| ScalarField::from_values(&self.grid, b.clone()))
            .collect::<Result<Vec<_>>>()?;
        VectorField::from_components(comps)
    }

    pub fn vector_spectrum(&self) -> Result<VectorSpectrum> {
        if self.header.representation != Representation::Spectral {
            return Err(Error::Format("expected a spectral snapshot".into()));
        }
        let comps = self
            .blocks
            .iter()
            .map(|b| {
                let coeffs = b.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
                Spectrum::from_coeffs(&self.grid, coeffs)
            })
            .collect::<Result<Vec<_>>>()?;
        VectorSpectrum::from_components(comps)
    }

    pub fn diffeo_map(&self) -> Result<DiffeoMap> {
        if !self.header.map {
            return Err(Error::Format("snapshot is not a map".into()));
        }
        Ok(DiffeoMap::from_displacement(self.vector_field()?))
    }
}

fn write_header<W: Write>(out: &mut W, header: &SnapshotHeader) -> Result<()> {
    let line = serde_json::to_string(header).map_err(|e| Error::Format(e.to_string()))?;
    out.write_all(line.as_bytes())?;
    out.write_all(b"\n")?;
    Ok(())
}

fn write_block<W: Write>(out: &mut W, values: impl Iterator<Item = f64>) -> Result<()> {
    for v in values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_vector_field<W: Write>(mut out: W, u: &VectorField) -> Result<()> {
    write_physical(&mut out, u, false)
}

pub fn write_diffeo_map<W: Write>(mut out: W, phi: &DiffeoMap) -> Result<()> {
    write_physical(&mut out, phi.displacement(), true)
}

fn write_physical<W: Write>(out: &mut W, u: &VectorField, map: bool) -> Result<()> {
    let header = SnapshotHeader::for_grid(u.grid(), Representation::Physical, u.components().len(), map);
    write_header(out, &header)?;
    for c in u.components() {
        write_block(out, c.values().iter().copied())?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_vector_spectrum<W: Write>(mut out: W, u: &VectorSpectrum) -> Result<()> {
    let header = SnapshotHeader::for_grid(u.grid(), Representation::Spectral, u.components().len(), false);
    write_header(&mut out, &header)?;
    for c in u.components() {
        write_block(&mut out, c.coeffs().iter().flat_map(|z| [z.re, z.im]))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_snapshot<R: Read>(input: R) -> Result<Snapshot> {
    let mut input = BufReader::new(input);
    let mut line = String::new();
    input.read_line(&mut line)?;
    let header: SnapshotHeader =
        serde_json::from_str(line.trim_end()).map_err(|e| Error::Format(format!("header: {e}")))?;
    let grid = Grid::new(GridSpec::new(header.n, header.points, header.length)?)?;
    let len = header.block_len(&grid);
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * len * header.components {
        return Err(Error::Format(format!(
            "expected {} data bytes, found {}",
            8 * len * header.components,
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    let blocks = values.chunks(len.max(1)).map(<[f64]>::to_vec).collect();
    Ok(Snapshot { header, grid, blocks })
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        write(&mut buf)?;
        buf.flush()?;
    }
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Snapshot> {
    read_snapshot(fs::File::open(path)?)
}
