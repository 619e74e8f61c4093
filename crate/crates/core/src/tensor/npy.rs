//! Minimal NPY reader/writer.
//!
//! Supports version 1.0 (and reading 2.0/3.0) headers with little-endian
//! `f4`/`f8` payloads in C order. Everything else is rejected.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{ArrayD, IxDyn};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub(crate) const MAGIC: &[u8; 6] = b"\x93NUMPY";

/// An array whose element type is only known after reading the header.
#[derive(Debug, Clone, PartialEq)]
pub enum NpyArray {
    F32(ArrayD<f32>),
    F64(ArrayD<f64>),
}

impl NpyArray {
    pub fn shape(&self) -> &[usize] {
        match self {
            NpyArray::F32(a) => a.shape(),
            NpyArray::F64(a) => a.shape(),
        }
    }

    /// Converts to the requested scalar type (exact when the types match).
    pub fn into_real<F: Real>(self) -> ArrayD<F> {
        match self {
            NpyArray::F32(a) => a.mapv(|v| v.cast()),
            NpyArray::F64(a) => a.mapv(|v| v.cast()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dtype {
    F4,
    F8,
}

#[derive(Debug)]
struct Header {
    dtype: Dtype,
    shape: Vec<usize>,
}

pub fn read_npy(path: impl AsRef<Path>) -> Result<NpyArray> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    read_npy_from(&mut reader).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn read_npy_from<R: Read>(reader: &mut R) -> Result<NpyArray> {
    let header = read_header(reader)?;
    let len = header
        .shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Format("shape overflows".into()))?;
    let shape = IxDyn(&header.shape);
    Ok(match header.dtype {
        Dtype::F4 => NpyArray::F32(read_payload::<f32, _>(reader, len, shape)?),
        Dtype::F8 => NpyArray::F64(read_payload::<f64, _>(reader, len, shape)?),
    })
}

fn read_payload<F: Real, R: Read>(reader: &mut R, len: usize, shape: IxDyn) -> Result<ArrayD<F>> {
    let nbytes = len * F::WIDTH;
    let mut bytes = Vec::new();
    reader
        .take(nbytes as u64)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::Format(format!("payload read failed: {e}")))?;
    if bytes.len() != nbytes {
        return Err(Error::Format(format!(
            "truncated payload: expected {nbytes} bytes, found {}",
            bytes.len()
        )));
    }
    let data: Vec<F> = bytes.chunks_exact(F::WIDTH).map(F::from_le_slice).collect();
    ArrayD::from_shape_vec(shape, data).map_err(|e| Error::Format(e.to_string()))
}

fn read_header<R: Read>(reader: &mut R) -> Result<Header> {
    let mut preamble = [0u8; 8];
    reader
        .read_exact(&mut preamble)
        .map_err(|_| Error::Format("file too short for NPY preamble".into()))?;
    if &preamble[..6] != MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    let major = preamble[6];
    let header_len = match major {
        1 => {
            let mut b = [0u8; 2];
            reader
                .read_exact(&mut b)
                .map_err(|_| Error::Format("truncated header length".into()))?;
            u16::from_le_bytes(b) as usize
        }
        2 | 3 => {
            let mut b = [0u8; 4];
            reader
                .read_exact(&mut b)
                .map_err(|_| Error::Format("truncated header length".into()))?;
            u32::from_le_bytes(b) as usize
        }
        v => return Err(Error::Format(format!("unsupported NPY version {v}"))),
    };
    let mut raw = vec![0u8; header_len];
    reader
        .read_exact(&mut raw)
        .map_err(|_| Error::Format("truncated header".into()))?;
    let text = std::str::from_utf8(&raw).map_err(|_| Error::Format("header is not UTF-8".into()))?;
    parse_header_dict(text)
}

/// Parses the Python dict literal, e.g.
/// `{'descr': '<f4', 'fortran_order': False, 'shape': (2, 3), }`.
fn parse_header_dict(text: &str) -> Result<Header> {
    let body = text.trim().trim_end_matches('\n').trim();
    let body = body
        .strip_prefix('{')
        .and_then(|b| b.trim_end().strip_suffix('}'))
        .ok_or_else(|| Error::Format(format!("header is not a dict: {text:?}")))?;

    let descr = dict_value(body, "descr")?;
    let descr = descr.trim().trim_matches(|c| c == '\'' || c == '"');
    let dtype = match descr {
        "<f4" | "f4" | "float32" => Dtype::F4,
        "<f8" | "f8" | "float64" => Dtype::F8,
        "|f4" | "=f4" if cfg!(target_endian = "little") => Dtype::F4,
        "|f8" | "=f8" if cfg!(target_endian = "little") => Dtype::F8,
        other => return Err(Error::UnsupportedDtype(other.to_string())),
    };

    match dict_value(body, "fortran_order")?.trim() {
        "False" => {}
        "True" => return Err(Error::Format("fortran_order arrays are not supported".into())),
        other => return Err(Error::Format(format!("bad fortran_order value {other:?}"))),
    }

    let shape_src = dict_value(body, "shape")?;
    let inner = shape_src
        .trim()
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| Error::Format(format!("bad shape {shape_src:?}")))?;
    let shape = inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.trim_end_matches('L')
                .parse::<usize>()
                .map_err(|_| Error::Format(format!("bad shape entry {s:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Header { dtype, shape })
}

/// Returns the raw source of the value stored under `key`.
fn dict_value<'a>(body: &'a str, key: &str) -> Result<&'a str> {
    let quoted = [format!("'{key}'"), format!("\"{key}\"")];
    let start = quoted
        .iter()
        .find_map(|q| body.find(q.as_str()).map(|i| i + q.len()))
        .ok_or_else(|| Error::Format(format!("header missing key `{key}`")))?;
    let rest = body[start..].trim_start();
    let rest = rest
        .strip_prefix(':')
        .ok_or_else(|| Error::Format(format!("missing ':' after `{key}`")))?;
    // A value ends at the first top-level comma.
    let mut depth = 0i32;
    for (i, ch) in rest.char_indices() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 => return Ok(&rest[..i]),
            _ => {}
        }
    }
    Ok(rest)
}

pub fn write_npy<F: Real>(path: impl AsRef<Path>, shape: &[usize], data: &[F]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    write_npy_to(&mut writer, shape, data)
        .and_then(|_| writer.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_npy_to<F: Real, W: Write>(writer: &mut W, shape: &[usize], data: &[F]) -> std::io::Result<()> {
    let expected: usize = shape.iter().product();
    assert_eq!(expected, data.len(), "shape does not match data length");
    let shape_src = match shape {
        [d] => format!("({d},)"),
        dims => format!(
            "({})",
            dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", ")
        ),
    };
    let mut dict = format!(
        "{{'descr': '{}', 'fortran_order': False, 'shape': {}, }}",
        F::DESCR,
        shape_src
    );
    // Pad so that the payload starts on a 64-byte boundary, newline-terminated.
    let unpadded = MAGIC.len() + 2 + 2 + dict.len() + 1;
    let pad = (64 - unpadded % 64) % 64;
    dict.extend(std::iter::repeat_n(' ', pad));
    dict.push('\n');

    writer.write_all(MAGIC)?;
    writer.write_all(&[1, 0])?;
    writer.write_all(&(dict.len() as u16).to_le_bytes())?;
    writer.write_all(dict.as_bytes())?;

    let mut buf = Vec::with_capacity(F::WIDTH * 8192);
    for chunk in data.chunks(8192) {
        buf.clear();
        for &v in chunk {
            v.extend_le(&mut buf);
        }
        writer.write_all(&buf)?;
    }
    Ok(())
}

/// Writes any standard-or-not layout array in C order.
pub fn write_array_nd<F: Real>(path: impl AsRef<Path>, array: &ArrayD<F>) -> Result<()> {
    match array.as_slice() {
        Some(slice) => write_npy(path, array.shape(), slice),
        None => {
            let owned: Vec<F> = array.iter().copied().collect();
            write_npy(path, array.shape(), &owned)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn encode<F: Real>(shape: &[usize], data: &[F]) -> Vec<u8> {
        let mut out = Vec::new();
        write_npy_to(&mut out, shape, data).unwrap();
        out
    }

    #[test]
    fn header_is_aligned() {
        let bytes = encode(&[2, 3], &[0.0f32; 6]);
        assert_eq!((bytes.len() - 24) % 64, 0);
        assert_eq!(bytes[bytes.len() - 25], b'\n');
    }

    #[test]
    fn reads_zero_tensor() {
        let bytes = encode(&[2, 1, 1, 3], &[0.0f64; 6]);
        let arr = read_npy_from(&mut Cursor::new(bytes)).unwrap();
        assert_eq!(arr.shape(), &[2, 1, 1, 3]);
        match arr {
            NpyArray::F64(a) => assert!(a.iter().all(|&v| v == 0.0)),
            _ => panic!("wrong dtype"),
        }
    }

    #[test]
    fn truncated_payload_is_format_error() {
        let mut bytes = encode(&[4, 4], &[1.0f32; 16]);
        bytes.truncate(bytes.len() - 3);
        let err = read_npy_from(&mut Cursor::new(bytes)).unwrap_err();
        assert!(matches!(err, Error::Format(_)), "{err}");
    }

    #[test]
    fn rejects_integer_dtype() {
        let mut bytes = encode(&[2], &[1.0f32; 2]);
        let pos = bytes.windows(3).position(|w| w == b"<f4").unwrap();
        bytes[pos..pos + 3].copy_from_slice(b"<i4");
        let err = read_npy_from(&mut Cursor::new(bytes)).unwrap_err();
        assert!(matches!(err, Error::UnsupportedDtype(ref d) if d == "<i4"));
    }

    #[test]
    fn rejects_fortran_order_and_bad_magic() {
        let text = "{'descr': '<f8', 'fortran_order': True, 'shape': (2, 2), }";
        assert!(matches!(parse_header_dict(text), Err(Error::Format(_))));
        let err = read_npy_from(&mut Cursor::new(b"NOTNUMPYxxxxxxxx".to_vec())).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
    }

    #[test]
    fn parses_numpy_style_headers() {
        let h = parse_header_dict("{'descr': '<f4', 'fortran_order': False, 'shape': (5,), }    \n").unwrap();
        assert_eq!(h.shape, vec![5]);
        assert_eq!(h.dtype, Dtype::F4);
        let h = parse_header_dict("{'shape': (), 'fortran_order': False, 'descr': '<f8'}").unwrap();
        assert!(h.shape.is_empty());
        assert_eq!(h.dtype, Dtype::F8);
    }
}
