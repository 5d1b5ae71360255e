//! Binary SVD-PHAT model files.
//!
//! All values little-endian:
//!
//! | field        | type            |
//! |--------------|-----------------|
//! | magic        | `b"SVDPHAT\0"`  |
//! | version      | u32 (= 1)       |
//! | Q, K, P, N   | u64 each        |
//! | δ            | f64             |
//! | fs, c        | f64 each        |
//! | grid level   | u32             |
//! | name length  | u32             |
//! | array name   | UTF-8 bytes     |
//! | V            | `P(N/2+1) x K` complex, row-major, re then im (f64) |
//! | D            | `Q x K` complex, row-major, re then im (f64)        |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use multiloc_core::{Complex64, DoaGrid, SvdPhatModel};

use crate::{Error, Result};

pub const MAGIC: [u8; 8] = *b"SVDPHAT\0";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelHeader {
    pub num_directions: usize,
    pub rank: usize,
    pub num_pairs: usize,
    pub frame_size: usize,
    pub delta: f64,
    pub fs: f64,
    pub c: f64,
    pub grid_level: u32,
    pub array_name: String,
}

pub fn write_model(
    writer: &mut impl Write,
    model: &SvdPhatModel,
    array_name: &str,
    fs: f64,
    c: f64,
) -> std::io::Result<()> {
    writer.write_all(&MAGIC)?;
    writer.write_all(&VERSION.to_le_bytes())?;
    for dim in [
        model.num_directions(),
        model.rank(),
        model.num_pairs(),
        model.frame_size(),
    ] {
        writer.write_all(&(dim as u64).to_le_bytes())?;
    }
    for v in [model.delta(), fs, c] {
        writer.write_all(&v.to_le_bytes())?;
    }
    writer.write_all(&model.grid_level().to_le_bytes())?;
    writer.write_all(&(array_name.len() as u32).to_le_bytes())?;
    writer.write_all(array_name.as_bytes())?;
    for z in model.basis().iter().chain(model.dictionary()) {
        writer.write_all(&z.re.to_le_bytes())?;
        writer.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn save(path: &Path, model: &SvdPhatModel, array_name: &str, fs: f64, c: f64) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    write_model(&mut writer, model, array_name, fs, c)
        .and_then(|_| writer.flush())
        .map_err(|e| Error::io(path, e))
}

struct Cursor<R> {
    inner: R,
}

impl<R: Read> Cursor<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| Error::Data(format!("truncated model file: {e}")))?;
        Ok(buf)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn u64(&mut self) -> Result<usize> {
        usize::try_from(u64::from_le_bytes(self.bytes()?))
            .map_err(|_| Error::Data("model dimension overflows usize".into()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }

    fn complex(&mut self, count: usize) -> Result<Vec<Complex64>> {
        (0..count)
            .map(|_| Ok(Complex64::new(self.f64()?, self.f64()?)))
            .collect()
    }
}

pub fn read_header(reader: &mut impl Read) -> Result<ModelHeader> {
    let mut cur = Cursor { inner: reader };
    if cur.bytes::<8>()? != MAGIC {
        return Err(Error::Data("not an SVD-PHAT model file".into()));
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(Error::Data(format!("unsupported model version {version}")));
    }
    let (num_directions, rank, num_pairs, frame_size) =
        (cur.u64()?, cur.u64()?, cur.u64()?, cur.u64()?);
    let (delta, fs, c) = (cur.f64()?, cur.f64()?, cur.f64()?);
    let grid_level = cur.u32()?;
    let name_len = cur.u32()? as usize;
    let mut name = vec![0u8; name_len];
    cur.inner
        .read_exact(&mut name)
        .map_err(|e| Error::Data(format!("truncated model file: {e}")))?;
    let array_name =
        String::from_utf8(name).map_err(|_| Error::Data("array name is not UTF-8".into()))?;
    Ok(ModelHeader {
        num_directions,
        rank,
        num_pairs,
        frame_size,
        delta,
        fs,
        c,
        grid_level,
        array_name,
    })
}

/// Reads a model, rebuilding its icosphere grid from the stored level.
pub fn read_model(reader: &mut impl Read) -> Result<(ModelHeader, SvdPhatModel)> {
    let header = read_header(reader)?;
    let grid = DoaGrid::icosphere(header.grid_level)?;
    if grid.len() != header.num_directions {
        return Err(Error::Data(format!(
            "model has {} directions but grid level {} has {}",
            header.num_directions,
            header.grid_level,
            grid.len()
        )));
    }
    if header.frame_size == 0 || header.frame_size % 2 != 0 {
        return Err(Error::Data("model frame size must be even".into()));
    }
    let cols = header.num_pairs * (header.frame_size / 2 + 1);
    let mut cur = Cursor { inner: reader };
    let basis = cur.complex(cols * header.rank)?;
    let dictionary = cur.complex(header.num_directions * header.rank)?;
    if cur
        .inner
        .read(&mut [0u8; 1])
        .map_err(|e| Error::Data(e.to_string()))?
        != 0
    {
        return Err(Error::Data("trailing bytes after model data".into()));
    }
    let model = SvdPhatModel::from_parts(
        grid.directions().to_vec(),
        header.grid_level,
        header.num_pairs,
        header.frame_size,
        header.delta,
        header.rank,
        basis,
        dictionary,
    )?;
    Ok((header, model))
}

pub fn load(path: &Path) -> Result<(ModelHeader, SvdPhatModel)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_model(&mut BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use multiloc_core::{MicArray, TdoaTable};

    fn model() -> SvdPhatModel {
        let grid = DoaGrid::icosphere(1).unwrap();
        let tdoa = TdoaTable::new(&MicArray::planar7(), &grid, 16000.0, 340.0).unwrap();
        SvdPhatModel::build(&grid, &tdoa, 64, 1e-3).unwrap()
    }

    #[test]
    fn round_trip_preserves_factors() {
        let model = model();
        let mut bytes = Vec::new();
        write_model(&mut bytes, &model, "planar7", 16000.0, 340.0).unwrap();
        let (header, back) = read_model(&mut bytes.as_slice()).unwrap();
        assert_eq!(header.array_name, "planar7");
        assert_eq!(header.rank, model.rank());
        assert_eq!(header.num_pairs, 21);
        assert_eq!(back.basis(), model.basis());
        assert_eq!(back.dictionary(), model.dictionary());

        let mut again = Vec::new();
        write_model(&mut again, &back, "planar7", 16000.0, 340.0).unwrap();
        assert_eq!(bytes, again);
    }

    #[test]
    fn header_layout() {
        let model = model();
        let mut bytes = Vec::new();
        write_model(&mut bytes, &model, "ab", 16000.0, 340.0).unwrap();
        assert_eq!(&bytes[..8], b"SVDPHAT\0");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[12..20].try_into().unwrap()), 42);
        let header_len = 8 + 4 + 4 * 8 + 3 * 8 + 4 + 4 + 2;
        let body = (21 * 33 + 42) * model.rank() * 16;
        assert_eq!(bytes.len(), header_len + body);
    }

    #[test]
    fn corrupt_files_are_data_errors() {
        let model = model();
        let mut bytes = Vec::new();
        write_model(&mut bytes, &model, "x", 16000.0, 340.0).unwrap();
        let truncated = &bytes[..bytes.len() - 5];
        assert!(matches!(
            read_model(&mut &truncated[..]),
            Err(Error::Data(_))
        ));
        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            read_model(&mut bad_magic.as_slice()),
            Err(Error::Data(_))
        ));
        bytes.push(0);
        assert!(matches!(
            read_model(&mut bytes.as_slice()),
            Err(Error::Data(_))
        ));
    }
}
