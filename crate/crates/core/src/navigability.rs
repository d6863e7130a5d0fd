//! Segmentation labels to navigability image and visual horizon.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::FrameBPoint;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub id: u8,
    pub name: String,
    pub navigable: bool,
}

/// Split of segmentation classes into navigable and non-navigable groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassMap {
    pub entries: Vec<ClassEntry>,
}

impl ClassMap {
    pub fn new(entries: Vec<ClassEntry>) -> Result<Self> {
        let map = Self { entries };
        map.validate()?;
        Ok(map)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = [false; 256];
        for e in &self.entries {
            if std::mem::replace(&mut seen[e.id as usize], true) {
                return Err(Error::Config(format!("duplicate class id {}", e.id)));
            }
        }
        if !self.entries.iter().any(|e| e.navigable) {
            return Err(Error::Config("class map has no navigable class".into()));
        }
        if self.entries.iter().all(|e| e.navigable) {
            return Err(Error::Config("class map has no non-navigable class".into()));
        }
        Ok(())
    }

    pub fn lookup_table(&self) -> [Option<bool>; 256] {
        let mut table = [None; 256];
        for e in &self.entries {
            table[e.id as usize] = Some(e.navigable);
        }
        table
    }

    pub fn is_navigable(&self, id: u8) -> Option<bool> {
        self.entries.iter().find(|e| e.id == id).map(|e| e.navigable)
    }

    pub fn id_of(&self, name: &str) -> Option<u8> {
        self.entries.iter().find(|e| e.name == name).map(|e| e.id)
    }

    /// Same classes with the navigable set replaced by `navigable`.
    pub fn with_navigable(&self, navigable: &[&str]) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .map(|e| ClassEntry {
                navigable: navigable.contains(&e.name.as_str()),
                ..e.clone()
            })
            .collect();
        Self::new(entries)
    }
}

/// Per-pixel class labels, row-major, row 0 at the top.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentedImage {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u8>,
}

impl SegmentedImage {
    pub fn new(width: usize, height: usize, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                got: (labels.len(), 1),
                context: "label buffer length".into(),
            });
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn filled(width: usize, height: usize, id: u8) -> Self {
        Self {
            width,
            height,
            labels: vec![id; width * height],
        }
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.labels[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, id: u8) {
        self.labels[row * self.width + col] = id;
    }
}

/// `0` = navigable, `1` = non-navigable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<u8>,
}

impl BinaryImage {
    pub fn filled(width: usize, height: usize, bit: u8) -> Self {
        Self {
            width,
            height,
            bits: vec![bit; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<u8>) -> Result<Self> {
        if bits.len() != width * height || bits.iter().any(|&b| b > 1) {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                got: (bits.len(), 1),
                context: "binary image must hold w*h values in {0, 1}".into(),
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    /// Parses rows of `0`/`1` characters, top row first.
    pub fn from_rows(rows: &[&str]) -> Self {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        let bits = rows
            .iter()
            .flat_map(|r| r.bytes().map(|b| u8::from(b == b'1')))
            .collect();
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.bits[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, bit: u8) {
        self.bits[row * self.width + col] = bit;
    }

    pub fn is_navigable(&self, row: usize, col: usize) -> bool {
        self.get(row, col) == 0
    }

    pub fn navigable_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 0).count()
    }
}

pub fn binarize(seg: &SegmentedImage, omega: &ClassMap) -> Result<BinaryImage> {
    let table = omega.lookup_table();
    let mut bits = Vec::with_capacity(seg.labels.len());
    for (i, &id) in seg.labels.iter().enumerate() {
        match table[id as usize] {
            Some(nav) => bits.push(u8::from(!nav)),
            None => {
                return Err(Error::UnknownClass {
                    id,
                    row: i / seg.width,
                    col: i % seg.width,
                })
            }
        }
    }
    Ok(BinaryImage {
        width: seg.width,
        height: seg.height,
        bits,
    })
}

/// Bottom-row column the flood fill starts from: `p^s` itself when
/// navigable, otherwise the closest navigable bottom pixel (left wins ties).
fn reachability_seed(bin: &BinaryImage) -> Option<usize> {
    let row = bin.height.checked_sub(1)?;
    let center = bin.width / 2;
    (0..=center.max(bin.width - 1 - center))
        .flat_map(|d| [center.checked_sub(d), Some(center + d)])
        .flatten()
        .find(|&c| c < bin.width && bin.is_navigable(row, c))
}

/// Keeps only the 4-connected navigable component containing `p^s`.
pub fn retain_reachable(bin: &BinaryImage) -> BinaryImage {
    let (w, h) = (bin.width, bin.height);
    let mut out = BinaryImage::filled(w, h, 1);
    let Some(seed_col) = reachability_seed(bin) else {
        return out;
    };
    let seed = (h - 1) * w + seed_col;
    out.bits[seed] = 0;
    let mut stack = vec![seed];
    while let Some(i) = stack.pop() {
        let (r, c) = (i / w, i % w);
        let mut visit = |j: usize| {
            if bin.bits[j] == 0 && out.bits[j] == 1 {
                out.bits[j] = 0;
                stack.push(j);
            }
        };
        if r > 0 {
            visit(i - w);
        }
        if r + 1 < h {
            visit(i + w);
        }
        if c > 0 {
            visit(i - 1);
        }
        if c + 1 < w {
            visit(i + 1);
        }
    }
    out
}

/// Per-column visual horizon. `None` marks a column whose base pixel is
/// non-navigable; such a column reads as height 0 and is entirely blocked.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisualHorizon {
    pub psi: Vec<Option<usize>>,
}

impl VisualHorizon {
    pub fn width(&self) -> usize {
        self.psi.len()
    }

    pub fn height_at(&self, col: usize) -> usize {
        self.psi[col].unwrap_or(0)
    }

    pub fn is_open(&self, col: usize) -> bool {
        self.psi[col].is_some()
    }

    pub fn open_count(&self) -> usize {
        self.psi.iter().filter(|p| p.is_some()).count()
    }

    /// Horizon pixel of an open column, in frame B.
    pub fn pixel(&self, col: usize) -> Option<FrameBPoint> {
        let half = (self.width() / 2) as i32;
        self.psi[col].map(|x| FrameBPoint::new(x as i32, col as i32 - half))
    }

    /// Horizon pixels of all open columns in ascending column order.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, FrameBPoint)> + '_ {
        (0..self.width()).filter_map(|c| self.pixel(c).map(|p| (c, p)))
    }
}

/// Length of the navigable run rising from the base of each column, minus one.
pub fn extract_horizon(bin: &BinaryImage) -> VisualHorizon {
    let (w, h) = (bin.width, bin.height);
    let psi = (0..w)
        .map(|c| {
            let run = (0..h)
                .rev()
                .take_while(|&r| bin.is_navigable(r, c))
                .count();
            run.checked_sub(1)
        })
        .collect();
    VisualHorizon { psi }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NavigabilityImage {
    pub width: usize,
    pub height: usize,
    pub bits: BinaryImage,
    pub horizon: VisualHorizon,
}

impl NavigabilityImage {
    /// Navigable iff the pixel is at or below the horizon of an open column.
    pub fn from_horizon(width: usize, height: usize, horizon: VisualHorizon) -> Self {
        let mut bits = BinaryImage::filled(width, height, 1);
        for (c, psi) in horizon.psi.iter().enumerate() {
            if let Some(top) = psi {
                for x in 0..=*top {
                    bits.set(height - 1 - x, c, 0);
                }
            }
        }
        Self {
            width,
            height,
            bits,
            horizon,
        }
    }

    pub fn is_navigable(&self, row: usize, col: usize) -> bool {
        self.bits.is_navigable(row, col)
    }

    pub fn is_navigable_b(&self, p: FrameBPoint) -> bool {
        let col = p.y + (self.width / 2) as i32;
        if p.x < 0 || col < 0 || col as usize >= self.width {
            return false;
        }
        match self.horizon.psi[col as usize] {
            Some(top) => (p.x as usize) <= top,
            None => false,
        }
    }
}

/// Reachability plus the occlusion rule. The two steps are repeated until
/// the navigable set stops shrinking, because hiding pixels above a blocked
/// column can disconnect regions that were linked only through them.
pub fn build_navigability_image(bin: &BinaryImage) -> NavigabilityImage {
    let mut current = bin.clone();
    loop {
        let reachable = retain_reachable(&current);
        let horizon = extract_horizon(&reachable);
        let nav = NavigabilityImage::from_horizon(bin.width, bin.height, horizon);
        if nav.bits == current {
            return nav;
        }
        current = nav.bits;
    }
}
