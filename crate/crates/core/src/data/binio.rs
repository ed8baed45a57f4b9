use std::io::{self, Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

const MAX_STRING: u32 = 1 << 20;

pub(crate) fn write_string<W: Write>(w: &mut W, s: &str) -> io::Result<()> {
    w.write_u32::<LittleEndian>(s.len() as u32)?;
    w.write_all(s.as_bytes())
}

pub(crate) fn read_string<R: Read>(r: &mut R) -> io::Result<String> {
    let n = r.read_u32::<LittleEndian>()?;
    if n > MAX_STRING {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("string length {n}")));
    }
    let mut buf = vec![0u8; n as usize];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

pub(crate) fn write_f32s<W: Write>(w: &mut W, data: &[f64]) -> io::Result<()> {
    for &v in data {
        w.write_f32::<LittleEndian>(v as f32)?;
    }
    Ok(())
}

pub(crate) fn read_f32s<R: Read>(r: &mut R, n: usize) -> io::Result<Vec<f64>> {
    let mut buf = vec![0f32; n];
    r.read_f32_into::<LittleEndian>(&mut buf)?;
    Ok(buf.into_iter().map(f64::from).collect())
}
