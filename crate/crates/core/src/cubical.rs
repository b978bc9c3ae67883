//! Cubical complexes generated by closed unit pixel squares, and their Z2
//! homology in dimensions 0 and 1.
//!
//! Pixel `(x, y)` is the closed square `[x, x+1] x [y, y+1]`. Squares of
//! diagonally adjacent pixels share a corner vertex, so black pixels connect
//! under 8-adjacency. Many image libraries default to 4-adjacency; this one
//! does not.
//!
//! Everything here is exact and deterministic: cells are indexed per
//! dimension in `(y, x, axis)` order and homology bases are chosen greedily in
//! that order, so the same pixel set always yields the same matrices.

use std::collections::{BTreeSet, HashMap};
use std::fmt::{self, Write as _};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::imageio::{BinaryImage, Pixel};
use crate::z2::{Insertion, Reducer, Z2Matrix, Z2Vector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CellKind {
    Vertex,
    /// Edge from `(x, y)` to `(x+1, y)`.
    HorizontalEdge,
    /// Edge from `(x, y)` to `(x, y+1)`.
    VerticalEdge,
    Square,
}

impl CellKind {
    pub fn dim(self) -> usize {
        match self {
            CellKind::Vertex => 0,
            CellKind::HorizontalEdge | CellKind::VerticalEdge => 1,
            CellKind::Square => 2,
        }
    }
}

/// An elementary cube keyed by its lower-left corner. Field order gives the
/// `(y, x, dim, axis)` ordering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub y: usize,
    pub x: usize,
    pub kind: CellKind,
}

impl Cell {
    pub fn vertex(x: usize, y: usize) -> Self {
        Self { y, x, kind: CellKind::Vertex }
    }

    pub fn square(x: usize, y: usize) -> Self {
        Self { y, x, kind: CellKind::Square }
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    /// Codimension-one faces.
    pub fn boundary(&self) -> Vec<Cell> {
        let (x, y) = (self.x, self.y);
        let c = |kind, x, y| Cell { y, x, kind };
        match self.kind {
            CellKind::Vertex => vec![],
            CellKind::HorizontalEdge => vec![Cell::vertex(x, y), Cell::vertex(x + 1, y)],
            CellKind::VerticalEdge => vec![Cell::vertex(x, y), Cell::vertex(x, y + 1)],
            CellKind::Square => vec![
                c(CellKind::HorizontalEdge, x, y),
                c(CellKind::HorizontalEdge, x, y + 1),
                c(CellKind::VerticalEdge, x, y),
                c(CellKind::VerticalEdge, x + 1, y),
            ],
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.kind {
            CellKind::Vertex => "vertex",
            CellKind::HorizontalEdge => "hedge",
            CellKind::VerticalEdge => "vedge",
            CellKind::Square => "square",
        };
        write!(f, "{tag} {} {}", self.x, self.y)
    }
}

/// The downward closure of a set of pixel squares.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CubicalComplex {
    cells: [Vec<Cell>; 3],
    index: HashMap<Cell, usize>,
}

pub fn complex_of(pixels: impl IntoIterator<Item = Pixel>) -> CubicalComplex {
    let mut sets: [BTreeSet<Cell>; 3] = Default::default();
    for (x, y) in pixels {
        let sq = Cell::square(x, y);
        for e in sq.boundary() {
            for v in e.boundary() {
                sets[0].insert(v);
            }
            sets[1].insert(e);
        }
        sets[2].insert(sq);
    }
    let cells = sets.map(|s| s.into_iter().collect::<Vec<_>>());
    let mut index = HashMap::with_capacity(cells.iter().map(Vec::len).sum());
    for dim_cells in &cells {
        for (i, c) in dim_cells.iter().enumerate() {
            index.insert(*c, i);
        }
    }
    CubicalComplex { cells, index }
}

pub fn complex_of_image(image: &BinaryImage) -> CubicalComplex {
    complex_of(image.black_pixels())
}

impl CubicalComplex {
    pub fn cells(&self, dim: usize) -> &[Cell] {
        &self.cells[dim]
    }

    pub fn count(&self, dim: usize) -> usize {
        self.cells[dim].len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells[0].is_empty()
    }

    pub fn index_of(&self, cell: &Cell) -> Option<usize> {
        self.index.get(cell).copied()
    }

    pub fn contains(&self, cell: &Cell) -> bool {
        self.index.contains_key(cell)
    }

    pub fn is_subcomplex_of(&self, other: &CubicalComplex) -> bool {
        self.cells.iter().flatten().all(|c| other.contains(c))
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.count(0) as i64 - self.count(1) as i64 + self.count(2) as i64
    }

    /// Boundary of the `j`-th cell of dimension `dim`, as a chain in dimension `dim - 1`.
    pub fn boundary_column(&self, dim: usize, j: usize) -> Z2Vector {
        assert!((1..=2).contains(&dim));
        let faces = self.cells[dim][j].boundary();
        Z2Vector::from_indices(
            self.count(dim - 1),
            faces.iter().map(|f| self.index[f]),
        )
    }

    /// Dense boundary matrix `∂_dim`, shape `count(dim-1) x count(dim)`.
    pub fn boundary_matrix(&self, dim: usize) -> Z2Matrix {
        let cols: Vec<Z2Vector> = (0..self.count(dim)).map(|j| self.boundary_column(dim, j)).collect();
        Z2Matrix::from_columns(self.count(dim - 1), &cols)
    }

    /// Re-express a chain of this complex in the coordinates of a supercomplex.
    pub fn push_chain(&self, dim: usize, chain: &Z2Vector, target: &CubicalComplex) -> Result<Z2Vector> {
        let mut out = Z2Vector::zeros(target.count(dim));
        for i in chain.ones() {
            let cell = &self.cells[dim][i];
            let j = target
                .index_of(cell)
                .ok_or_else(|| Error::InclusionViolation { cell: cell.to_string() })?;
            out.flip(j);
        }
        Ok(out)
    }

    /// One cell per line: `vertex x y`, `hedge x y`, `vedge x y` or
    /// `square x y`, in dimension order then `(y, x)` order.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for c in self.cells.iter().flatten() {
            let _ = writeln!(s, "{c}");
        }
        s
    }
}

fn check_dim(q: usize) {
    assert!(q <= 1, "only homology in dimensions 0 and 1 is supported, got {q}");
}

/// Rank of `∂_dim` (zero for `dim = 0` and for `dim = 3`).
fn boundary_rank(k: &CubicalComplex, dim: usize) -> usize {
    if dim == 0 || dim > 2 {
        return 0;
    }
    let mut r = Reducer::new(k.count(dim - 1), 0);
    for j in 0..k.count(dim) {
        r.insert(k.boundary_column(dim, j), Z2Vector::zeros(0));
    }
    r.rank()
}

/// `dim ker ∂_q - rank ∂_{q+1}`, from matrix ranks alone.
pub fn betti(k: &CubicalComplex, q: usize) -> usize {
    check_dim(q);
    let cycles = k.count(q) - boundary_rank(k, q);
    cycles - boundary_rank(k, q + 1)
}

/// Cycle space basis of `∂_q`, in deterministic order.
fn cycle_basis(k: &CubicalComplex, q: usize) -> Vec<Z2Vector> {
    let n = k.count(q);
    if q == 0 {
        return (0..n).map(|i| Z2Vector::unit(n, i)).collect();
    }
    let mut r = Reducer::new(k.count(q - 1), n);
    let mut out = Vec::new();
    for j in 0..n {
        if let Insertion::Dependent(combo) = r.insert(k.boundary_column(q, j), Z2Vector::unit(n, j)) {
            out.push(combo);
        }
    }
    out
}

/// A basis of `H_q(K)` given by cycle representatives.
#[derive(Clone, Debug)]
pub struct HomologyBasis {
    q: usize,
    complex: Arc<CubicalComplex>,
    reps: Vec<Z2Vector>,
    // boundaries tagged zero, reps tagged by index: reducing a cycle to zero
    // leaves its class coordinates in the tag
    reducer: Reducer,
}

pub fn homology_basis(complex: Arc<CubicalComplex>, q: usize) -> HomologyBasis {
    check_dim(q);
    let cycles = cycle_basis(&complex, q);
    let mut reducer = Reducer::new(complex.count(q), cycles.len());
    for j in 0..complex.count(q + 1) {
        reducer.insert(complex.boundary_column(q + 1, j), Z2Vector::zeros(cycles.len()));
    }
    let mut reps = Vec::new();
    for z in cycles {
        let tag = Z2Vector::unit(reducer.tag_len(), reps.len());
        if reducer.insert(z.clone(), tag) == Insertion::Independent {
            reps.push(z);
        }
    }
    HomologyBasis {
        q,
        complex,
        reps,
        reducer,
    }
}

impl HomologyBasis {
    /// Basis of the zero space, used for the empty level of a filtration.
    pub fn empty(q: usize) -> Self {
        homology_basis(Arc::new(complex_of([])), q)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.reps.len()
    }

    pub fn complex(&self) -> &Arc<CubicalComplex> {
        &self.complex
    }

    pub fn reps(&self) -> &[Z2Vector] {
        &self.reps
    }

    /// Class coordinates of a cycle. Fails with `NotInSpan` on non-cycles.
    pub fn coordinates(&self, chain: &Z2Vector) -> Result<Z2Vector> {
        let tag = self.reducer.solve(chain).ok_or(Error::NotInSpan)?;
        Ok(tag.truncated(self.dim()))
    }

    /// A cycle representing the class with the given coordinates.
    pub fn cycle_of(&self, coords: &Z2Vector) -> Z2Vector {
        assert_eq!(coords.len(), self.dim());
        let mut out = Z2Vector::zeros(self.complex.count(self.q));
        for r in coords.ones() {
            out.xor_assign(&self.reps[r]);
        }
        out
    }
}

/// The linear map on homology induced by an inclusion of complexes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InducedMap {
    pub matrix: Z2Matrix,
}

pub fn induced_map(src: &HomologyBasis, dst: &HomologyBasis) -> Result<InducedMap> {
    if src.q != dst.q {
        return Err(Error::Invalid(format!(
            "induced map between dimensions {} and {}",
            src.q, dst.q
        )));
    }
    if let Some(cell) = src.complex.cells.iter().flatten().find(|c| !dst.complex.contains(c)) {
        return Err(Error::InclusionViolation { cell: cell.to_string() });
    }
    let mut matrix = Z2Matrix::zeros(dst.dim(), src.dim());
    for (j, rep) in src.reps.iter().enumerate() {
        let pushed = src.complex.push_chain(src.q, rep, &dst.complex)?;
        for i in dst.coordinates(&pushed)?.ones() {
            matrix.set(i, j, true);
        }
    }
    Ok(InducedMap { matrix })
}
