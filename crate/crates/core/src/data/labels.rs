//! Per-image semantic label grids and their binary sidecar format.
//!
//! Layout (little-endian): `b"GZLB"`, `u32` version, `u32` id length, id
//! bytes, `u32` H, `u32` W, `H·W` `u16` class ids row-major, `u32` class
//! count, then per class `u16` id, `u32` name length, name bytes.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::binio::{read_string, write_string};
use crate::error::{Error, Result};
use crate::model::Scanpath;

const MAGIC: &[u8; 4] = b"GZLB";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct LabelGrid {
    pub image_id: String,
    pub height: usize,
    pub width: usize,
    pub labels: Vec<u16>,
    pub class_names: BTreeMap<u16, String>,
}

/// Labels for each fixation plus how many fixations fell outside the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelLookup {
    pub labels: Vec<String>,
    pub clamped: usize,
}

impl LabelGrid {
    pub fn new(
        image_id: impl Into<String>,
        height: usize,
        width: usize,
        labels: Vec<u16>,
        class_names: BTreeMap<u16, String>,
    ) -> Result<Self> {
        if height == 0 || width == 0 || labels.len() != height * width {
            return Err(Error::format(
                "label grid",
                format!("{height}×{width} grid with {} labels", labels.len()),
            ));
        }
        Ok(Self {
            image_id: image_id.into(),
            height,
            width,
            labels,
            class_names,
        })
    }

    pub fn label_at(&self, row: usize, col: usize) -> u16 {
        self.labels[row * self.width + col]
    }

    pub fn class_name(&self, id: u16) -> String {
        self.class_names.get(&id).cloned().unwrap_or_else(|| format!("class_{id}"))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::format("label file", format!("{e}"));
        w.write_all(MAGIC).map_err(io)?;
        w.write_u32::<LittleEndian>(VERSION).map_err(io)?;
        write_string(&mut w, &self.image_id).map_err(io)?;
        w.write_u32::<LittleEndian>(self.height as u32).map_err(io)?;
        w.write_u32::<LittleEndian>(self.width as u32).map_err(io)?;
        for &l in &self.labels {
            w.write_u16::<LittleEndian>(l).map_err(io)?;
        }
        w.write_u32::<LittleEndian>(self.class_names.len() as u32).map_err(io)?;
        for (&id, name) in &self.class_names {
            w.write_u16::<LittleEndian>(id).map_err(io)?;
            write_string(&mut w, name).map_err(io)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let io = |e| Error::format("label file", format!("{e}"));
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != MAGIC {
            return Err(Error::format("label file", "bad magic"));
        }
        let version = r.read_u32::<LittleEndian>().map_err(io)?;
        if version != VERSION {
            return Err(Error::format("label file", format!("unsupported version {version}")));
        }
        let image_id = read_string(&mut r).map_err(io)?;
        let height = r.read_u32::<LittleEndian>().map_err(io)? as usize;
        let width = r.read_u32::<LittleEndian>().map_err(io)? as usize;
        let mut labels = vec![0u16; height * width];
        r.read_u16_into::<LittleEndian>(&mut labels).map_err(io)?;
        let n = r.read_u32::<LittleEndian>().map_err(io)?;
        let mut class_names = BTreeMap::new();
        for _ in 0..n {
            let id = r.read_u16::<LittleEndian>().map_err(io)?;
            class_names.insert(id, read_string(&mut r).map_err(io)?);
        }
        Self::new(image_id, height, width, labels, class_names)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

/// Loads every `*.gzlb` file in `dir`, keyed by the image id stored inside.
pub fn load_label_dir(dir: &Path) -> Result<BTreeMap<String, LabelGrid>> {
    let mut out = BTreeMap::new();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "gzlb"))
        .collect();
    paths.sort();
    for p in paths {
        let grid = LabelGrid::load(&p)?;
        out.insert(grid.image_id.clone(), grid);
    }
    Ok(out)
}

/// One label per fixation from the pixel that contains it (coordinates are
/// floored). Scanpath coordinates are rescaled when the grid resolution
/// differs from the scanpath frame; fixations outside the grid are clamped
/// to the border and counted.
pub fn fixations_to_labels(s: &Scanpath, grid: &LabelGrid) -> LabelLookup {
    let sx = grid.width as f64 / s.width;
    let sy = grid.height as f64 / s.height;
    let mut clamped = 0;
    let labels = s
        .fixations
        .iter()
        .map(|f| {
            let (col, c1) = to_index(f.x * sx, grid.width);
            let (row, c2) = to_index(f.y * sy, grid.height);
            if c1 || c2 {
                clamped += 1;
            }
            grid.class_name(grid.label_at(row, col))
        })
        .collect();
    LabelLookup { labels, clamped }
}

fn to_index(v: f64, n: usize) -> (usize, bool) {
    let f = v.floor();
    if f < 0.0 {
        (0, true)
    } else if f >= n as f64 {
        // A fixation exactly on the far edge belongs to the last pixel.
        (n - 1, v > n as f64)
    } else {
        (f as usize, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Fixation;

    fn grid() -> LabelGrid {
        // left half "counter" (1), right half "cup" (2)
        let labels = (0..4 * 6).map(|i| if i % 6 < 3 { 1 } else { 2 }).collect();
        let names = [(1, "counter".to_string()), (2, "cup".to_string())].into_iter().collect();
        LabelGrid::new("img", 4, 6, labels, names).unwrap()
    }

    fn path(points: &[(f64, f64)]) -> Scanpath {
        Scanpath {
            image_id: "img".into(),
            task: "cup".into(),
            subject: "1".into(),
            width: 6.0,
            height: 4.0,
            fixations: points.iter().map(|&(x, y)| Fixation { x, y, t: 100.0 }).collect(),
        }
    }

    #[test]
    fn lookups_follow_containing_pixel() {
        let g = grid();
        let out = fixations_to_labels(&path(&[(0.5, 0.5), (1.2, 3.9)]), &g);
        assert_eq!(out.labels, vec!["counter", "counter"]);
        // x = 3.0 sits on the boundary; floor puts it in column 3 ("cup").
        let out = fixations_to_labels(&path(&[(3.0, 1.0), (2.999, 1.0)]), &g);
        assert_eq!(out.labels, vec!["cup", "counter"]);
        assert_eq!(out.clamped, 0);
    }

    #[test]
    fn outside_points_are_clamped_and_counted() {
        let out = fixations_to_labels(&path(&[(-1.0, 2.0), (9.0, 2.0), (6.0, 4.0)]), &grid());
        assert_eq!(out.labels, vec!["counter", "cup", "cup"]);
        assert_eq!(out.clamped, 2);
    }

    #[test]
    fn single_class_grid() {
        let names = [(0, "wall".to_string())].into_iter().collect();
        let g = LabelGrid::new("img", 4, 6, vec![0; 24], names).unwrap();
        let out = fixations_to_labels(&path(&[(0.0, 0.0), (5.0, 3.0), (2.5, 1.5)]), &g);
        assert!(out.labels.iter().all(|l| l == "wall"));
    }

    #[test]
    fn binary_round_trip() {
        let g = grid();
        let mut buf = Vec::new();
        g.write_to(&mut buf).unwrap();
        assert_eq!(LabelGrid::read_from(buf.as_slice()).unwrap(), g);
        buf[0] = b'X';
        assert!(LabelGrid::read_from(buf.as_slice()).is_err());
    }
}
