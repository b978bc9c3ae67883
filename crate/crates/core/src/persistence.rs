//! Persistence diagrams of pixel filtrations in dimensions 0 and 1, and the
//! persistent homology module itself (bases plus inclusion-induced maps).
//!
//! Two independent routes produce diagrams:
//!
//! * [`reduction_diagrams`] runs the standard left-to-right column reduction
//!   over Z2 on the filtered boundary matrix (with clearing).
//! * [`union_find_diagram`] handles dimension 0 by merging 8-connected pixel
//!   components under the elder rule.
//!
//! [`persistence_diagram`] uses the union-find route for `q = 0` and the
//! reduction for `q = 1`.
//!
//! [`PersistentHomology`] answers element-level questions (is this class born
//! at `i`, when does it die) directly from the induced maps, independent of
//! any pairing algorithm.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use crate::cubical::{complex_of, homology_basis, induced_map, Cell, HomologyBasis};
use crate::error::{Error, Result};
use crate::imageio::{BinaryImage, ImageFiltration};
use crate::z2::{Reducer, Z2Matrix, Z2Vector};

/// Death level of a bar. `Infinite` sorts after every finite level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Death {
    At(usize),
    Infinite,
}

impl fmt::Display for Death {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Death::At(d) => write!(f, "{d}"),
            Death::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Death {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "inf" {
            return Ok(Death::Infinite);
        }
        s.parse()
            .map(Death::At)
            .map_err(|_| Error::Parse(format!("bad death value {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bar {
    pub q: usize,
    pub birth: usize,
    pub death: Death,
}

impl Bar {
    pub fn new(q: usize, birth: usize, death: Death) -> Self {
        debug_assert!(birth >= 1);
        debug_assert!(match death {
            Death::At(d) => birth < d,
            Death::Infinite => true,
        });
        Self { q, birth, death }
    }

    pub fn alive_at(&self, level: usize) -> bool {
        self.birth <= level
            && match self.death {
                Death::At(d) => level < d,
                Death::Infinite => true,
            }
    }
}

/// Multiset of bars in one homology dimension, kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PersistenceDiagram {
    q: usize,
    bars: Vec<Bar>,
}

impl PersistenceDiagram {
    pub fn new(q: usize, mut bars: Vec<Bar>) -> Self {
        assert!(bars.iter().all(|b| b.q == q), "bar dimension differs from diagram dimension");
        bars.sort();
        Self { q, bars }
    }

    /// Convenience for fixtures: `(birth, None)` means an infinite bar.
    pub fn from_pairs(q: usize, pairs: &[(usize, Option<usize>)]) -> Self {
        let bars = pairs
            .iter()
            .map(|&(b, d)| Bar::new(q, b, d.map_or(Death::Infinite, Death::At)))
            .collect();
        Self::new(q, bars)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn bars(&self) -> &[Bar] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn alive_at(&self, level: usize) -> usize {
        self.bars.iter().filter(|b| b.alive_at(level)).count()
    }
}

/// Multiplicity of the bar `(birth, death)`.
pub fn bars_with(diagram: &PersistenceDiagram, birth: usize, death: Death) -> usize {
    diagram
        .bars
        .iter()
        .filter(|b| b.birth == birth && b.death == death)
        .count()
}

/// One bar per line, `q birth death`, sorted by `(q, birth, death)`.
pub fn format_diagrams(diagrams: &[PersistenceDiagram]) -> String {
    let mut bars: Vec<Bar> = diagrams.iter().flat_map(|d| d.bars.iter().copied()).collect();
    bars.sort();
    let mut s = String::new();
    for b in bars {
        let _ = writeln!(s, "{} {} {}", b.q, b.birth, b.death);
    }
    s
}

/// Inverse of [`format_diagrams`]; blank lines and `#` comments are skipped.
pub fn parse_diagrams(text: &str) -> Result<Vec<PersistenceDiagram>> {
    let mut by_q: HashMap<usize, Vec<Bar>> = HashMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [q, b, d] = fields[..] else {
            return Err(Error::Parse(format!("line {}: expected `q birth death`", n + 1)));
        };
        let bad = |what: &str| Error::Parse(format!("line {}: bad {what}", n + 1));
        let q: usize = q.parse().map_err(|_| bad("dimension"))?;
        let birth: usize = b.parse().map_err(|_| bad("birth"))?;
        let death: Death = d.parse()?;
        if birth == 0 || matches!(death, Death::At(d) if d <= birth) {
            return Err(bad("interval"));
        }
        by_q.entry(q).or_default().push(Bar { q, birth, death });
    }
    let mut qs: Vec<usize> = by_q.keys().copied().collect();
    qs.sort();
    Ok(qs
        .into_iter()
        .map(|q| PersistenceDiagram::new(q, by_q.remove(&q).unwrap()))
        .collect())
}

/// Diagram of `filt` in dimension `q` (0 or 1).
pub fn persistence_diagram(filt: &ImageFiltration, q: usize) -> PersistenceDiagram {
    match q {
        0 => union_find_diagram(filt),
        1 => {
            let [_, d1] = reduction_diagrams(filt);
            d1
        }
        _ => panic!("only dimensions 0 and 1 are supported, got {q}"),
    }
}

struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut node: usize) -> usize {
        let mut root = node;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[node] != root {
            let next = self.parent[node];
            self.parent[node] = root;
            node = next;
        }
        root
    }

    /// Link two distinct roots; returns the new root.
    fn link(&mut self, a: usize, b: usize) -> usize {
        let (big, small) = if self.size[a] >= self.size[b] { (a, b) } else { (b, a) };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        big
    }
}

/// Dimension-0 diagram by union-find over 8-connected pixels.
///
/// A component is identified by `(birth level, oldest pixel)`; at a merge the
/// component with the smaller key survives, so equal births are resolved by
/// the row-major-first pixel.
pub fn union_find_diagram(filt: &ImageFiltration) -> PersistenceDiagram {
    let (w, h) = filt.dims();
    let entry = filt.entry_levels();
    let mut by_level: Vec<Vec<usize>> = vec![Vec::new(); filt.len() + 1];
    for (idx, e) in entry.iter().enumerate() {
        if let Some(l) = e {
            by_level[*l].push(idx);
        }
    }
    let mut ds = DisjointSet::new(w * h);
    // (birth, pixel index) of the component owning each root
    let mut key: Vec<(usize, usize)> = (0..w * h).map(|i| (usize::MAX, i)).collect();
    let mut bars = Vec::new();
    for (level, pixels) in by_level.iter().enumerate().skip(1) {
        for &p in pixels {
            key[p] = (level, p);
        }
        for &p in pixels {
            let (x, y) = (p % w, p / w);
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let n = ny * w + nx;
                    if n == p || !entry[n].is_some_and(|l| l <= level) {
                        continue;
                    }
                    let (ra, rb) = (ds.find(p), ds.find(n));
                    if ra == rb {
                        continue;
                    }
                    let (elder, younger) = if key[ra] <= key[rb] { (key[ra], key[rb]) } else { (key[rb], key[ra]) };
                    if younger.0 < level {
                        bars.push(Bar::new(0, younger.0, Death::At(level)));
                    }
                    let root = ds.link(ra, rb);
                    key[root] = elder;
                }
            }
        }
    }
    for idx in 0..w * h {
        if entry[idx].is_some() && ds.find(idx) == idx {
            bars.push(Bar::new(0, key[idx].0, Death::Infinite));
        }
    }
    PersistenceDiagram::new(0, bars)
}

/// Filtered cell list: every cell of the last level's complex with the
/// first level it appears at, sorted by `(level, dim, cell order)`.
fn filtered_cells(filt: &ImageFiltration) -> Vec<(usize, Cell)> {
    let (w, _) = filt.dims();
    let entry = filt.entry_levels();
    let top = complex_of(filt.level(filt.len()).black_pixels());
    let mut level: HashMap<Cell, usize> = HashMap::new();
    for sq in top.cells(2) {
        let l = entry[sq.y * w + sq.x].expect("square of a black pixel");
        for e in sq.boundary() {
            for v in e.boundary() {
                level.entry(v).and_modify(|m| *m = (*m).min(l)).or_insert(l);
            }
            level.entry(e).and_modify(|m| *m = (*m).min(l)).or_insert(l);
        }
        level.insert(*sq, l);
    }
    let mut cells: Vec<(usize, Cell)> = level.into_iter().map(|(c, l)| (l, c)).collect();
    cells.sort_by_key(|&(l, c)| (l, c.dim(), c));
    cells
}

fn xor_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Diagrams in dimensions 0 and 1 by boundary-matrix reduction.
pub fn reduction_diagrams(filt: &ImageFiltration) -> [PersistenceDiagram; 2] {
    let cells = filtered_cells(filt);
    let position: HashMap<Cell, usize> = cells.iter().enumerate().map(|(i, &(_, c))| (c, i)).collect();
    let n = cells.len();
    let mut columns: Vec<Vec<usize>> = cells
        .iter()
        .map(|(_, c)| {
            let mut b: Vec<usize> = c.boundary().iter().map(|f| position[f]).collect();
            b.sort_unstable();
            b
        })
        .collect();
    let mut pivot_owner: Vec<Option<usize>> = vec![None; n];
    let mut cleared = vec![false; n];
    let mut paired = vec![false; n];
    let mut bars: [Vec<Bar>; 2] = [Vec::new(), Vec::new()];

    // top dimension first so that positive columns can be cleared
    for dim in [2usize, 1] {
        for j in 0..n {
            if cells[j].1.dim() != dim || cleared[j] {
                continue;
            }
            let mut col = std::mem::take(&mut columns[j]);
            while let Some(&low) = col.last() {
                match pivot_owner[low] {
                    Some(k) => col = xor_sorted(&col, &columns[k]),
                    None => break,
                }
            }
            if let Some(&low) = col.last() {
                pivot_owner[low] = Some(j);
                cleared[low] = true;
                paired[low] = true;
                paired[j] = true;
                let (birth, death) = (cells[low].0, cells[j].0);
                if birth < death {
                    bars[dim - 1].push(Bar::new(dim - 1, birth, Death::At(death)));
                }
            }
            columns[j] = col;
        }
    }
    for (i, &(level, c)) in cells.iter().enumerate() {
        if !paired[i] && c.dim() <= 1 {
            bars[c.dim()].push(Bar::new(c.dim(), level, Death::Infinite));
        }
    }
    let [b0, b1] = bars;
    [PersistenceDiagram::new(0, b0), PersistenceDiagram::new(1, b1)]
}

/// `H_q(X_0) -> H_q(X_1) -> ... -> H_q(X_n)` with every composite map.
///
/// Level 0 is the empty space. Classes are coordinate vectors in the
/// deterministic bases of [`homology_basis`].
#[derive(Debug)]
pub struct PersistentHomology {
    q: usize,
    bases: Vec<HomologyBasis>,
    // maps[i][j - i] = ρ_{i,j}
    maps: Vec<Vec<Z2Matrix>>,
    images: Vec<Vec<OnceLock<Reducer>>>,
}

impl PersistentHomology {
    pub fn new(filt: &ImageFiltration, q: usize) -> Result<Self> {
        Self::from_levels(filt.levels(), q)
    }

    /// Nested images given as levels `1..=n`.
    pub fn from_levels(levels: &[BinaryImage], q: usize) -> Result<Self> {
        assert!(q <= 1, "only dimensions 0 and 1 are supported");
        let mut bases = vec![HomologyBasis::empty(q)];
        for img in levels {
            bases.push(homology_basis(Arc::new(complex_of(img.black_pixels())), q));
        }
        let n = bases.len();
        let mut steps = Vec::with_capacity(n.saturating_sub(1));
        for i in 0..n - 1 {
            steps.push(induced_map(&bases[i], &bases[i + 1])?.matrix);
        }
        let mut maps = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = vec![Z2Matrix::identity(bases[i].dim())];
            for j in i + 1..n {
                let next = steps[j - 1].mul(row.last().unwrap());
                row.push(next);
            }
            maps.push(row);
        }
        let images = (0..n).map(|i| (i..n).map(|_| OnceLock::new()).collect()).collect();
        Ok(Self { q, bases, maps, images })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Number of non-empty levels `n`.
    pub fn len(&self) -> usize {
        self.bases.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn basis(&self, level: usize) -> &HomologyBasis {
        &self.bases[level]
    }

    pub fn dim(&self, level: usize) -> usize {
        self.bases[level].dim()
    }

    fn check_level(&self, level: usize) -> Result<()> {
        if level > self.len() {
            return Err(Error::LevelOutOfRange {
                level,
                min: 0,
                max: self.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_class(&self, level: usize, class: &Z2Vector) -> Result<()> {
        self.check_level(level)?;
        if class.len() != self.dim(level) {
            return Err(Error::ClassDimension {
                level,
                expected: self.dim(level),
                found: class.len(),
            });
        }
        Ok(())
    }

    /// `ρ_{i,j}` for `i <= j`.
    pub fn map(&self, i: usize, j: usize) -> Result<&Z2Matrix> {
        self.check_level(j)?;
        if i > j {
            return Err(Error::LevelOutOfRange { level: i, min: 0, max: j });
        }
        Ok(&self.maps[i][j - i])
    }

    pub fn push(&self, i: usize, j: usize, class: &Z2Vector) -> Result<Z2Vector> {
        self.check_class(i, class)?;
        Ok(self.map(i, j)?.mul_vec(class))
    }

    /// Whether `class` (at level `j`) lies in `im ρ_{i,j}`.
    pub fn in_image(&self, i: usize, j: usize, class: &Z2Vector) -> Result<bool> {
        self.check_class(j, class)?;
        let m = self.map(i, j)?;
        Ok(self.images[i][j - i].get_or_init(|| m.column_space()).contains(class))
    }

    /// `class ∉ im ρ_{i-1,i}`. The zero class is never born.
    pub fn born_at(&self, i: usize, class: &Z2Vector) -> Result<bool> {
        if i == 0 {
            return Err(Error::LevelOutOfRange { level: 0, min: 1, max: self.len() });
        }
        Ok(!self.in_image(i - 1, i, class)?)
    }

    /// Barcode of an individual class born at `i`: the first `d > i` with
    /// `ρ_{i,d}(class) ∈ im ρ_{i-1,d}`. `None` if the class is not born at `i`.
    pub fn element_death(&self, i: usize, class: &Z2Vector) -> Result<Option<Death>> {
        if !self.born_at(i, class)? {
            return Ok(None);
        }
        for d in i + 1..=self.len() {
            let pushed = self.push(i, d, class)?;
            if self.in_image(i - 1, d, &pushed)? {
                return Ok(Some(Death::At(d)));
            }
        }
        Ok(Some(Death::Infinite))
    }

    /// Number of bars `(b, d)` from the rank function alone:
    /// `r(b,d-1) - r(b,d) - r(b-1,d-1) + r(b-1,d)`, `r(i,j) = rank ρ_{i,j}`.
    pub fn rank_multiplicity(&self, birth: usize, death: Death) -> usize {
        assert!(birth >= 1 && birth <= self.len());
        let r = |i: usize, j: usize| self.maps[i][j - i].rank() as i64;
        let n = self.len();
        let m = match death {
            Death::At(d) => {
                assert!(d > birth && d <= n);
                r(birth, d - 1) - r(birth, d) - r(birth - 1, d - 1) + r(birth - 1, d)
            }
            Death::Infinite => r(birth, n) - r(birth - 1, n),
        };
        usize::try_from(m).expect("rank multiplicities are non-negative")
    }
}
