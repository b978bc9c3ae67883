//! Short filtrations of window patches, local branch numbers and heat maps.
//!
//! For a patch `(X1, X2)` of a black-pixel set `X`, the two short filtrations
//! are `G1 = [∅, X1, X1 ∪ X2, X]` and `G2 = [∅, X2, X1 ∪ X2, X]`. The local
//! branch number `b0(X1; X2)` is the number of `(2, 3)` bars in the
//! dimension-0 diagram of `G1`.
//!
//! A `(2, 3)` bar is any class born at level 2 that dies at level 3. That
//! includes two outer components which merge with each other in `X` without
//! touching `X1`; this is what the diagram counts, and for window patches the
//! outer piece is usually a single component anyway.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imageio::{build_filtration, closure_contact, extract_patch, BinaryImage, ImageFiltration, Patch, Window};
use crate::persistence::{bars_with, persistence_diagram, union_find_diagram, Death, PersistenceDiagram, PersistentHomology};
use crate::sheaf::CoincidenceSections;
use crate::z2::Z2Vector;

/// `∅ ⊆ Y1 ⊆ Y2 ⊆ Y3`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShortFiltration {
    filtration: ImageFiltration,
}

impl ShortFiltration {
    pub fn new(y1: BinaryImage, y2: BinaryImage, y3: BinaryImage) -> Result<Self> {
        Ok(Self {
            filtration: build_filtration(vec![y1, y2, y3])?,
        })
    }

    /// Levels `1..=3`.
    pub fn level(&self, i: usize) -> &BinaryImage {
        self.filtration.level(i)
    }

    pub fn filtration(&self) -> &ImageFiltration {
        &self.filtration
    }

    pub fn diagram(&self, q: usize) -> PersistenceDiagram {
        persistence_diagram(&self.filtration, q)
    }

    pub fn homology(&self, q: usize) -> Result<PersistentHomology> {
        PersistentHomology::new(&self.filtration, q)
    }
}

/// `(G1, G2)` for a patch of `full`.
pub fn short_filtrations(patch: &Patch, full: &BinaryImage) -> Result<(ShortFiltration, ShortFiltration)> {
    let (x1, x2) = (patch.inner(), patch.outer());
    if x1.dims() != full.dims() {
        return Err(Error::PatchMismatch(format!(
            "patch is {}x{}, image is {}x{}",
            x1.width(),
            x1.height(),
            full.width(),
            full.height()
        )));
    }
    if !x1.is_subset_of(full) || !x2.is_subset_of(full) {
        return Err(Error::PatchMismatch("patch pixels are not black in the image".into()));
    }
    let union = x1.union(x2)?;
    let g1 = ShortFiltration::new(x1.clone(), union.clone(), full.clone())?;
    let g2 = ShortFiltration::new(x2.clone(), union, full.clone())?;
    Ok((g1, g2))
}

/// `b0(X1; X2)`: the number of `(2, 3)` bars in the dimension-0 diagram of `G1`.
pub fn local_branch_number(patch: &Patch, full: &BinaryImage) -> Result<usize> {
    let (g1, _) = short_filtrations(patch, full)?;
    Ok(bars_with(&union_find_diagram(g1.filtration()), 2, Death::At(3)))
}

/// Outcome of one clause check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    pub name: &'static str,
    pub passed: bool,
    /// Description of the first counterexample, if any.
    pub witness: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClauseReport {
    pub q: usize,
    pub clauses: Vec<Clause>,
}

impl ClauseReport {
    pub fn all_passed(&self) -> bool {
        self.clauses.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ClauseReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.clauses {
            write!(f, "q={} {} {}", self.q, c.name, if c.passed { "pass" } else { "FAIL" })?;
            if let Some(w) = &c.witness {
                write!(f, " ({w})")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Stalks up to this dimension are enumerated exhaustively.
const EXHAUSTIVE_DIM: usize = 12;

/// Every vector when `dim` is small, otherwise units and pairwise sums.
fn test_vectors(dim: usize) -> Vec<Z2Vector> {
    if dim <= EXHAUSTIVE_DIM {
        return (0..1u64 << dim).map(|m| Z2Vector::from_mask(dim, m)).collect();
    }
    let mut out = vec![Z2Vector::zeros(dim)];
    for a in 0..dim {
        out.push(Z2Vector::unit(dim, a));
        for b in a + 1..dim {
            out.push(Z2Vector::from_indices(dim, [a, b]));
        }
    }
    out
}

/// Verify the patch clauses in dimension `q`:
///
/// * `split`: `ω1 + ω2 : H(X1) ⊕ H(X2) -> H(X1 ∪ X2)` is an isomorphism;
/// * `a`: `G1` has no birth-2 bar iff `H(X2) = 0`;
/// * `b`: `ω2(t) != 0` iff it is born at 2 in `G1`;
/// * `c`: for nonzero `t ∈ H(X2)`, some `(s, t)` is a section of
///   `H(X1) -> H(X) <- H(X2)` iff `ω2(t)` has element barcode `(2, 3)` in `G1`;
/// * `count`: the number of `(2, 3)` bars of `G1` equals the dimension of the
///   classes `t` that extend to a section.
///
/// Each side is computed independently: homology bases and induced maps,
/// the section space of the cospan sheaf, and the persistence diagram.
pub fn patch_clauses(patch: &Patch, full: &BinaryImage, q: usize) -> Result<ClauseReport> {
    if let Some((a, b)) = closure_contact(patch.inner(), patch.outer()) {
        return Err(Error::HypothesisViolation { a, b });
    }
    let (g1, g2) = short_filtrations(patch, full)?;
    let ph1 = g1.homology(q)?;
    let ph2 = g2.homology(q)?;
    let omega1 = ph1.map(1, 2)?;
    let omega2 = ph2.map(1, 2)?;
    let (d1, d2, d12) = (ph1.dim(1), ph2.dim(1), ph1.dim(2));
    let diagram = g1.diagram(q);
    let mut clauses = Vec::new();

    let split_rank = omega1.hstack(omega2).rank();
    clauses.push(Clause {
        name: "split",
        passed: d1 + d2 == d12 && split_rank == d12,
        witness: (split_rank != d12 || d1 + d2 != d12)
            .then(|| format!("dim H(X1)={d1} dim H(X2)={d2} dim H(X1∪X2)={d12} rank={split_rank}")),
    });

    let birth2 = diagram.bars().iter().filter(|b| b.birth == 2).count();
    clauses.push(Clause {
        name: "a",
        passed: (birth2 == 0) == (d2 == 0),
        witness: ((birth2 == 0) != (d2 == 0)).then(|| format!("{birth2} birth-2 bars, dim H(X2)={d2}")),
    });

    let vectors = test_vectors(d2);
    let mut b_witness = None;
    for t in &vectors {
        let s2 = omega2.mul_vec(t);
        let born = ph1.born_at(2, &s2)?;
        if !s2.is_zero() != born {
            b_witness = Some(format!("t={t:?} ω2(t)={s2:?} born_at_2={born}"));
            break;
        }
    }
    clauses.push(Clause {
        name: "b",
        passed: b_witness.is_none(),
        witness: b_witness,
    });

    let cospan = CoincidenceSections::from_maps(ph1.map(1, 3)?, ph2.map(1, 3)?, ["H(X1)", "H(X2)", "H(X)"])?;
    let extendable = cospan.right_projection();
    let mut c_witness = None;
    for t in vectors.iter().filter(|t| !t.is_zero()) {
        let section = extendable.contains(t);
        let s2 = omega2.mul_vec(t);
        let bar23 = ph1.element_death(2, &s2)? == Some(Death::At(3));
        if section != bar23 {
            c_witness = Some(format!("t={t:?} section={section} bar(2,3)={bar23}"));
            break;
        }
    }
    clauses.push(Clause {
        name: "c",
        passed: c_witness.is_none(),
        witness: c_witness,
    });

    let bars = bars_with(&diagram, 2, Death::At(3));
    clauses.push(Clause {
        name: "count",
        passed: bars == extendable.rank(),
        witness: (bars != extendable.rank())
            .then(|| format!("{bars} bars (2,3), {} extendable classes", extendable.rank())),
    });

    Ok(ClauseReport { q, clauses })
}

/// How consecutive windows of one size are spaced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Stride {
    /// Step equal to the window size.
    #[default]
    Tile,
    Step(usize),
}

impl Stride {
    pub fn step(self, size: usize) -> usize {
        match self {
            Stride::Tile => size,
            Stride::Step(n) => n,
        }
    }
}

impl FromStr for Stride {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "tile" {
            return Ok(Stride::Tile);
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Stride::Step(n)),
            _ => Err(Error::Parse(format!("stride must be 'tile' or a positive integer, got '{s}'"))),
        }
    }
}

impl fmt::Display for Stride {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stride::Tile => f.write_str("tile"),
            Stride::Step(n) => write!(f, "{n}"),
        }
    }
}

/// Start offsets `0, s, 2s, ...`, ending with the first window that reaches
/// the far edge or the last start inside the image.
fn starts(extent: usize, size: usize, step: usize) -> Vec<usize> {
    let mut out = vec![0];
    let mut at = 0;
    while at + size < extent && at + step < extent {
        at += step;
        out.push(at);
    }
    out
}

/// Windows of one size covering a `width`x`height` image, clipped at the edges,
/// in row-major order of their top-left corners.
pub fn window_grid(width: usize, height: usize, size: usize, stride: Stride) -> Vec<Window> {
    let step = stride.step(size);
    assert!(size > 0 && step > 0);
    let xs = starts(width, size, step);
    starts(height, size, step)
        .into_iter()
        .flat_map(|y| xs.iter().map(move |&x| Window::clipped(x, y, size, width, height)))
        .collect()
}

/// One window's local branch number.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowValue {
    pub size: usize,
    pub window: Window,
    pub value: usize,
    /// Black pixels left in the window after trimming.
    pub inner_black: usize,
}

/// Local branch numbers of every window, sizes in the order given.
pub fn branch_windows(image: &BinaryImage, sizes: &[usize], stride: Stride) -> Result<Vec<WindowValue>> {
    validate_scan(sizes, stride)?;
    let jobs: Vec<(usize, Window)> = sizes
        .iter()
        .flat_map(|&size| {
            window_grid(image.width(), image.height(), size, stride)
                .into_iter()
                .map(move |w| (size, w))
        })
        .collect();
    jobs.into_par_iter()
        .map(|(size, window)| {
            let patch = extract_patch(image, window)?;
            let inner_black = patch.inner().black_count();
            let value = if inner_black == 0 {
                0
            } else {
                local_branch_number(&patch, image)?
            };
            Ok(WindowValue {
                size,
                window,
                value,
                inner_black,
            })
        })
        .collect()
}

fn validate_scan(sizes: &[usize], stride: Stride) -> Result<()> {
    if sizes.is_empty() {
        return Err(Error::Invalid("no window sizes".into()));
    }
    if sizes.contains(&0) {
        return Err(Error::Invalid("window sizes must be positive".into()));
    }
    if stride == Stride::Step(0) {
        return Err(Error::Invalid("stride must be positive".into()));
    }
    Ok(())
}

/// Per-pixel sums of window branch numbers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeatMap {
    width: usize,
    height: usize,
    values: Vec<u64>,
    mask: Vec<bool>,
}

impl HeatMap {
    pub fn zeros(image: &BinaryImage) -> Self {
        let (width, height) = image.dims();
        let mask = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| image.is_black(x, y))
            .collect();
        Self {
            width,
            height,
            values: vec![0; width * height],
            mask,
        }
    }

    /// Paint each window's value onto every pixel of the window.
    pub fn from_windows(image: &BinaryImage, windows: &[WindowValue]) -> Self {
        let mut map = Self::zeros(image);
        for wv in windows {
            for (x, y) in wv.window.pixels() {
                map.values[y * map.width + x] += wv.value as u64;
            }
        }
        map
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> u64 {
        self.values[y * self.width + x]
    }

    /// Row-major values.
    pub fn values(&self) -> &[u64] {
        &self.values
    }

    /// Row-major black-pixel flags of the source image.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn max(&self) -> u64 {
        self.values.iter().copied().max().unwrap_or(0)
    }

    /// Pixel-wise sum with a map of the same size.
    pub fn add(&mut self, other: &HeatMap) {
        assert_eq!((self.width, self.height), (other.width, other.height));
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
    }

    fn grid_csv<T: fmt::Display>(&self, cell: impl Fn(usize) -> T) -> String {
        let mut s = String::with_capacity(self.values.len() * 3);
        for y in 0..self.height {
            let row: Vec<String> = (0..self.width).map(|x| cell(y * self.width + x).to_string()).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    pub fn to_csv(&self) -> String {
        self.grid_csv(|i| self.values[i])
    }

    /// `1` for black pixels, `0` otherwise.
    pub fn mask_csv(&self) -> String {
        self.grid_csv(|i| u8::from(self.mask[i]))
    }

    /// Values scaled so the maximum maps to 255.
    pub fn normalized(&self) -> Vec<u8> {
        let max = self.max();
        self.values
            .iter()
            .map(|&v| (v * 255).checked_div(max).unwrap_or(0) as u8)
            .collect()
    }
}

/// Multi-scale heat map: the sum over sizes of the single-scale maps.
pub fn heat_map(image: &BinaryImage, sizes: &[usize], stride: Stride) -> Result<HeatMap> {
    Ok(HeatMap::from_windows(image, &branch_windows(image, sizes, stride)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    fn img(rows: &[&str]) -> BinaryImage {
        BinaryImage::from_ascii_art(rows).unwrap()
    }

    #[test]
    fn empty_inner_piece() {
        let full = img(&["#..", "...", "..."]);
        let empty = BinaryImage::new(3, 3).unwrap();
        let patch = Patch::new(empty.clone(), full.clone()).unwrap();
        let (g1, _) = short_filtrations(&patch, &full).unwrap();
        assert_eq!(g1.level(1), &empty);
        assert_eq!(g1.level(2), &full);
        assert_eq!(local_branch_number(&patch, &full).unwrap(), 0);
    }

    #[test]
    fn covering_patch_repeats_top_level() {
        let full = img(&["#.#"]);
        let patch = Patch::new(img(&["#.."]), img(&["..#"])).unwrap();
        let (g1, g2) = short_filtrations(&patch, &full).unwrap();
        assert_eq!(g1.level(2), g1.level(3));
        assert_eq!(g2.level(1), &img(&["..#"]));
        assert_eq!(local_branch_number(&patch, &full).unwrap(), 0);
    }

    #[test]
    fn mismatched_patch() {
        let patch = Patch::new(img(&["#...#"]), img(&["....."])).unwrap();
        assert!(matches!(
            short_filtrations(&patch, &img(&["#...."])),
            Err(Error::PatchMismatch(_))
        ));
        assert!(matches!(short_filtrations(&patch, &img(&["#"])), Err(Error::PatchMismatch(_))));
    }

    #[test]
    fn two_arm_branch_numbers() {
        let (full, window) = fixtures::two_arms();
        let patch = extract_patch(&full, window).unwrap();
        let (g1, g2) = short_filtrations(&patch, &full).unwrap();
        assert_eq!(
            union_find_diagram(g1.filtration()),
            PersistenceDiagram::from_pairs(0, &[(1, None), (2, Some(3)), (2, Some(3))])
        );
        assert_eq!(
            union_find_diagram(g2.filtration()),
            PersistenceDiagram::from_pairs(0, &[(1, None), (1, Some(3)), (2, Some(3))])
        );
        assert_eq!(local_branch_number(&patch, &full).unwrap(), 2);
        assert_eq!(local_branch_number(&patch.swapped(), &full).unwrap(), 1);
        for q in 0..=1 {
            assert!(patch_clauses(&patch, &full, q).unwrap().all_passed());
        }
    }

    #[test]
    fn circle_and_disk_diagrams_differ() {
        let ring = img(&["###", "#.#", "###"]);
        let center = img(&["...", ".#.", "..."]);
        let disk = img(&["###", "###", "###"]);
        let g1 = ShortFiltration::new(ring, disk.clone(), disk.clone()).unwrap();
        let g2 = ShortFiltration::new(center, disk.clone(), disk).unwrap();
        assert_eq!(g1.diagram(1), PersistenceDiagram::from_pairs(1, &[(1, Some(2))]));
        assert!(g2.diagram(1).is_empty());
    }

    #[test]
    fn separated_pieces_without_window() {
        assert!(Patch::new(img(&["#."]), img(&[".#"])).is_err());
        let full = img(&["#..#"]);
        let patch = Patch::new(img(&["#..."]), img(&["...#"])).unwrap();
        assert_eq!(local_branch_number(&patch, &full).unwrap(), 0);
        assert!(patch_clauses(&patch, &full, 0).unwrap().all_passed());
    }

    #[test]
    fn empty_outer_piece_passes_clause_a() {
        let full = img(&[".....", ".###.", "....."]);
        let patch = extract_patch(&full, Window::new(0, 0, 4, 2).unwrap()).unwrap();
        assert!(patch.outer().is_empty());
        let report = patch_clauses(&patch, &full, 0).unwrap();
        assert!(report.get("a").unwrap().passed);
        assert!(report.all_passed(), "{report}");
    }

    #[test]
    fn asterisk_tiling() {
        let star = fixtures::asterisk(9);
        let windows = branch_windows(&star, &[3], Stride::Tile).unwrap();
        let values: Vec<usize> = windows.iter().map(|w| w.value).collect();
        assert_eq!(values, vec![1, 1, 1, 1, 8, 1, 1, 1, 1]);
        let map = heat_map(&star, &[3], Stride::Tile).unwrap();
        assert_eq!(map.get(4, 4), 8);
        assert_eq!(map.get(0, 8), 1);
    }

    #[test]
    fn white_image_gives_zero_map() {
        let white = BinaryImage::new(12, 7).unwrap();
        let map = heat_map(&white, &[3, 5], Stride::Tile).unwrap();
        assert!(map.values().iter().all(|&v| v == 0));
        assert!(map.normalized().iter().all(|&v| v == 0));
    }

    #[test]
    fn window_grids() {
        let g = window_grid(100, 100, 30, Stride::Tile);
        assert_eq!(g.len(), 16);
        assert_eq!(g.last().unwrap(), &Window::new(90, 90, 99, 99).unwrap());
        assert_eq!(window_grid(9, 9, 3, Stride::Tile).len(), 9);
        let overlapping = window_grid(10, 4, 4, Stride::Step(2));
        let xs: Vec<usize> = overlapping.iter().filter(|w| w.y0 == 0).map(|w| w.x0).collect();
        assert_eq!(xs, vec![0, 2, 4, 6]);
        assert_eq!(window_grid(2, 2, 5, Stride::Tile), vec![Window::new(0, 0, 1, 1).unwrap()]);
    }

    #[test]
    fn stride_parsing() {
        assert_eq!("tile".parse::<Stride>().unwrap(), Stride::Tile);
        assert_eq!("4".parse::<Stride>().unwrap(), Stride::Step(4));
        assert!("0".parse::<Stride>().is_err());
        assert!("x".parse::<Stride>().is_err());
        assert!(heat_map(&fixtures::asterisk(9), &[0], Stride::Tile).is_err());
    }

    fn arb_image(max: usize) -> impl Strategy<Value = BinaryImage> {
        (3..=max, 3..=max)
            .prop_flat_map(|(w, h)| (Just(w), Just(h), proptest::collection::vec(proptest::bool::weighted(0.45), w * h)))
            .prop_map(|(w, h, bits)| {
                BinaryImage::from_pixels(w, h, (0..w * h).filter(|&i| bits[i]).map(|i| (i % w, i / w))).unwrap()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn translation_invariance(image in arb_image(8), dx in 0usize..4, dy in 0usize..4, wx in 0usize..6, wy in 0usize..6, size in 3usize..7) {
            let (w, h) = image.dims();
            let window = Window::clipped(wx.min(w - 1), wy.min(h - 1), size, w, h);
            let moved = image.translated(dx, dy, w + 4, h + 4).unwrap();
            let shifted = Window::new(window.x0 + dx, window.y0 + dy, window.x1 + dx, window.y1 + dy).unwrap();
            let a = local_branch_number(&extract_patch(&image, window).unwrap(), &image).unwrap();
            let b = local_branch_number(&extract_patch(&moved, shifted).unwrap(), &moved).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn multi_scale_is_sum_of_scales(image in arb_image(14), step in 1usize..5, overlap in any::<bool>()) {
            let stride = if overlap { Stride::Step(step) } else { Stride::Tile };
            let sizes = [3, 4, 6];
            let total = heat_map(&image, &sizes, stride).unwrap();
            let mut sum = HeatMap::zeros(&image);
            for s in sizes {
                sum.add(&heat_map(&image, &[s], stride).unwrap());
            }
            prop_assert_eq!(total, sum);
        }

        #[test]
        fn patch_clauses_hold(image in arb_image(9), wx in 0usize..6, wy in 0usize..6, size in 3usize..8) {
            let (w, h) = image.dims();
            let window = Window::clipped(wx.min(w - 1), wy.min(h - 1), size, w, h);
            let patch = extract_patch(&image, window).unwrap();
            for q in 0..=1 {
                let report = patch_clauses(&patch, &image, q).unwrap();
                prop_assert!(report.all_passed(), "{}", report);
                let swapped = patch_clauses(&patch.swapped(), &image, q).unwrap();
                prop_assert!(swapped.all_passed(), "{}", swapped);
            }
        }
    }
}
