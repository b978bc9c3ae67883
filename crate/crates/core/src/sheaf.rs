//! Cellular sheaves of Z2 vector spaces over finite posets.
//!
//! A sheaf assigns a stalk dimension to each poset element and a restriction
//! matrix to each relation `p <= q`, composing functorially. Sections over an
//! up-closed set `U` are the families `(s_p)_{p in U}` with
//! `s_q = ρ_{p,q}(s_p)` whenever `p <= q`.
//!
//! The coincidence machinery lives here too: two homology classes from a
//! filtration coincide at level `k` exactly when their pair extends to a
//! section of the three-node cospan sheaf `H(X_i) -> H(X_k) <- H(X_j)`.
//! [`coincide`] compares pushed vectors directly; [`coincidence_as_section`]
//! goes through the section space.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::persistence::PersistentHomology;
use crate::z2::{Reducer, Z2Matrix, Z2Vector};

/// A finite partially ordered set on elements `0..len()`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinitePoset {
    labels: Vec<String>,
    leq: Vec<Vec<bool>>,
}

impl FinitePoset {
    /// Build from the full relation. Reflexivity, transitivity and
    /// antisymmetry are all checked.
    pub fn new(labels: Vec<String>, relation: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::InvalidPoset("a poset must be non-empty".into()));
        }
        let mut leq = vec![vec![false; n]; n];
        for (p, q) in relation {
            if p >= n || q >= n {
                return Err(Error::InvalidPoset(format!("relation ({p}, {q}) names a missing element")));
            }
            leq[p][q] = true;
        }
        let poset = Self { labels, leq };
        poset.validate()?;
        Ok(poset)
    }

    /// Build from generating relations by reflexive-transitive closure.
    pub fn from_covers(labels: Vec<String>, covers: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let n = labels.len();
        let mut leq = vec![vec![false; n]; n];
        for (i, row) in leq.iter_mut().enumerate() {
            row[i] = true;
        }
        for (p, q) in covers {
            if p >= n || q >= n {
                return Err(Error::InvalidPoset(format!("relation ({p}, {q}) names a missing element")));
            }
            leq[p][q] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if leq[i][k] {
                    for j in 0..n {
                        if leq[k][j] {
                            leq[i][j] = true;
                        }
                    }
                }
            }
        }
        let relation: Vec<(usize, usize)> = (0..n)
            .flat_map(|p| (0..n).map(move |q| (p, q)))
            .filter(|&(p, q)| leq[p][q])
            .collect();
        Self::new(labels, relation)
    }

    fn validate(&self) -> Result<()> {
        let n = self.len();
        for p in 0..n {
            if !self.leq[p][p] {
                return Err(Error::InvalidPoset(format!("not reflexive at {p}")));
            }
        }
        for p in 0..n {
            for q in 0..n {
                if p != q && self.leq[p][q] && self.leq[q][p] {
                    return Err(Error::InvalidPoset(format!("not antisymmetric: {p} and {q}")));
                }
                if !self.leq[p][q] {
                    continue;
                }
                for r in 0..n {
                    if self.leq[q][r] && !self.leq[p][r] {
                        return Err(Error::InvalidPoset(format!("not transitive: {p} <= {q} <= {r}")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, p: usize) -> &str {
        &self.labels[p]
    }

    pub fn leq(&self, p: usize, q: usize) -> bool {
        self.leq[p][q]
    }

    /// `p < q` with nothing strictly between.
    pub fn is_cover(&self, p: usize, q: usize) -> bool {
        p != q && self.leq[p][q] && !(0..self.len()).any(|r| r != p && r != q && self.leq[p][r] && self.leq[r][q])
    }

    pub fn covers(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        (0..n)
            .flat_map(|p| (0..n).map(move |q| (p, q)))
            .filter(|&(p, q)| self.is_cover(p, q))
            .collect()
    }

    pub fn basic_open(&self, p: usize) -> BasicOpen {
        BasicOpen {
            p,
            upset: (0..self.len()).filter(|&q| self.leq[p][q]).collect(),
        }
    }

    /// Union of the basic opens of `generators`, sorted.
    pub fn open_generated_by(&self, generators: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = (0..self.len())
            .filter(|&q| generators.iter().any(|&p| self.leq[p][q]))
            .collect();
        out.dedup();
        out
    }

    pub fn check_up_closed(&self, set: &[usize]) -> Result<()> {
        for &p in set {
            for q in 0..self.len() {
                if self.leq[p][q] && !set.contains(&q) {
                    return Err(Error::NotUpClosed { below: p, above: q });
                }
            }
        }
        Ok(())
    }

    /// Elements sorted so that `p < q` implies `p` comes first.
    fn linear_extension(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by_key(|&q| ((0..self.len()).filter(|&p| self.leq[p][q]).count(), q));
        order
    }
}

/// The up-set `U_p = { q : p <= q }`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasicOpen {
    pub p: usize,
    pub upset: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellularSheaf {
    poset: FinitePoset,
    stalk_dims: Vec<usize>,
    restrictions: BTreeMap<(usize, usize), Z2Matrix>,
}

/// Build a sheaf from restriction matrices on covering relations; composites
/// are generated and functoriality is verified.
pub fn make_sheaf(
    poset: FinitePoset,
    stalk_dims: Vec<usize>,
    covers: impl IntoIterator<Item = ((usize, usize), Z2Matrix)>,
) -> Result<CellularSheaf> {
    let n = poset.len();
    if stalk_dims.len() != n {
        return Err(Error::InvalidPoset(format!(
            "{} stalk dimensions for {n} elements",
            stalk_dims.len()
        )));
    }
    let given: HashMap<(usize, usize), Z2Matrix> = covers.into_iter().collect();
    for (&(p, q), m) in &given {
        if p >= n || q >= n || !poset.is_cover(p, q) {
            return Err(Error::NotACover { from: p, to: q });
        }
        let expected = (stalk_dims[q], stalk_dims[p]);
        if m.shape() != expected {
            return Err(Error::ShapeMismatch {
                from: p,
                to: q,
                expected,
                found: m.shape(),
            });
        }
    }
    for (p, q) in poset.covers() {
        if !given.contains_key(&(p, q)) {
            return Err(Error::MissingRestriction { from: p, to: q });
        }
    }

    let order = poset.linear_extension();
    let mut restrictions = BTreeMap::new();
    for p in 0..n {
        restrictions.insert((p, p), Z2Matrix::identity(stalk_dims[p]));
        for &r in &order {
            if r == p || !poset.leq(p, r) {
                continue;
            }
            let q = (0..n)
                .find(|&q| poset.is_cover(q, r) && poset.leq(p, q))
                .expect("p < r has a cover of r above p");
            let composite = given[&(q, r)].mul(&restrictions[&(p, q)]);
            restrictions.insert((p, r), composite);
        }
    }
    let sheaf = CellularSheaf {
        poset,
        stalk_dims,
        restrictions,
    };
    sheaf.verify()?;
    Ok(sheaf)
}

/// The three-node sheaf `A -> C <- B` with the given maps into `C`.
pub fn cospan_sheaf(left: &Z2Matrix, right: &Z2Matrix, labels: [&str; 3]) -> Result<CellularSheaf> {
    if left.rows() != right.rows() {
        return Err(Error::ShapeMismatch {
            from: 1,
            to: 2,
            expected: (left.rows(), right.cols()),
            found: right.shape(),
        });
    }
    let poset = FinitePoset::from_covers(labels.map(String::from).to_vec(), [(0, 2), (1, 2)])?;
    make_sheaf(
        poset,
        vec![left.cols(), right.cols(), left.rows()],
        [((0, 2), left.clone()), ((1, 2), right.clone())],
    )
}

impl CellularSheaf {
    pub fn poset(&self) -> &FinitePoset {
        &self.poset
    }

    pub fn stalk_dim(&self, p: usize) -> usize {
        self.stalk_dims[p]
    }

    /// `ρ_{p,q}`, defined when `p <= q`.
    pub fn restriction(&self, p: usize, q: usize) -> Option<&Z2Matrix> {
        self.restrictions.get(&(p, q))
    }

    /// Identity on the diagonal and `ρ_{q,r} ρ_{p,q} = ρ_{p,r}` for every chain.
    pub fn verify(&self) -> Result<()> {
        let n = self.poset.len();
        for p in 0..n {
            if self.restrictions[&(p, p)] != Z2Matrix::identity(self.stalk_dims[p]) {
                return Err(Error::FunctorialityViolation { p, q: p, r: p });
            }
        }
        for p in 0..n {
            for q in (0..n).filter(|&q| self.poset.leq(p, q)) {
                for r in (0..n).filter(|&r| self.poset.leq(q, r)) {
                    let lhs = self.restrictions[&(q, r)].mul(&self.restrictions[&(p, q)]);
                    if lhs != self.restrictions[&(p, r)] {
                        return Err(Error::FunctorialityViolation { p, q, r });
                    }
                }
            }
        }
        Ok(())
    }

    /// Flip one entry of `ρ_{p,q}` without re-verifying. Test hook for the
    /// functoriality checker.
    #[doc(hidden)]
    pub fn corrupt_restriction(&mut self, p: usize, q: usize, row: usize, col: usize) {
        self.restrictions
            .get_mut(&(p, q))
            .expect("restriction exists")
            .flip(row, col);
    }

    /// Stalk dimensions and every restriction matrix, as text.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for p in 0..self.poset.len() {
            let _ = writeln!(s, "element {p} {} dim {}", self.poset.label(p), self.stalk_dims[p]);
        }
        for (&(p, q), m) in &self.restrictions {
            if p == q {
                continue;
            }
            let _ = writeln!(s, "map {p} {q} {}x{}", m.rows(), m.cols());
            for i in 0..m.rows() {
                let row: String = (0..m.cols()).map(|j| if m.get(i, j) { '1' } else { '0' }).collect();
                let _ = writeln!(s, "  {row}");
            }
        }
        s
    }

    /// Whether a family of stalk vectors (one per element of `open`, in the
    /// order given) satisfies every compatibility condition.
    pub fn is_section(&self, open: &[usize], family: &[Z2Vector]) -> bool {
        assert_eq!(open.len(), family.len());
        open.iter().enumerate().all(|(a, &p)| {
            open.iter().enumerate().all(|(b, &q)| {
                p == q || !self.poset.leq(p, q) || self.restrictions[&(p, q)].mul_vec(&family[a]) == family[b]
            })
        })
    }
}

/// A basis of the compatible families over an up-closed set.
#[derive(Clone, Debug)]
pub struct SectionSpace {
    open: Vec<usize>,
    dims: Vec<usize>,
    basis: Vec<Z2Vector>,
    span: Reducer,
}

/// Sections of `sheaf` over `open`, which must be up-closed.
pub fn sections(sheaf: &CellularSheaf, open: &[usize]) -> Result<SectionSpace> {
    let mut open = open.to_vec();
    open.sort_unstable();
    open.dedup();
    sheaf.poset.check_up_closed(&open)?;
    let dims: Vec<usize> = open.iter().map(|&p| sheaf.stalk_dims[p]).collect();
    let offsets: Vec<usize> = dims
        .iter()
        .scan(0, |acc, &d| {
            let o = *acc;
            *acc += d;
            Some(o)
        })
        .collect();
    let total: usize = dims.iter().sum();

    // one block row per relation p < q: ρ_{p,q} s_p + s_q = 0
    let mut rows: Vec<Z2Vector> = Vec::new();
    for (a, &p) in open.iter().enumerate() {
        for (b, &q) in open.iter().enumerate() {
            if p == q || !sheaf.poset.leq(p, q) {
                continue;
            }
            let m = &sheaf.restrictions[&(p, q)];
            for i in 0..m.rows() {
                let mut row = Z2Vector::zeros(total);
                for j in 0..m.cols() {
                    if m.get(i, j) {
                        row.flip(offsets[a] + j);
                    }
                }
                row.flip(offsets[b] + i);
                rows.push(row);
            }
        }
    }
    let mut constraints = Z2Matrix::zeros(rows.len(), total);
    for (i, r) in rows.iter().enumerate() {
        for j in r.ones() {
            constraints.set(i, j, true);
        }
    }
    let basis = constraints.kernel();
    let mut span = Reducer::new(total, 0);
    for v in &basis {
        span.insert(v.clone(), Z2Vector::zeros(0));
    }
    Ok(SectionSpace {
        open,
        dims,
        basis,
        span,
    })
}

impl SectionSpace {
    pub fn open(&self) -> &[usize] {
        &self.open
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    fn split(&self, v: &Z2Vector) -> Vec<Z2Vector> {
        let mut out = Vec::with_capacity(self.dims.len());
        let mut offset = 0;
        for &d in &self.dims {
            out.push(v.slice(offset, d));
            offset += d;
        }
        out
    }

    /// Basis vectors, each split into one stalk vector per open element.
    pub fn basis_families(&self) -> Vec<Vec<Z2Vector>> {
        self.basis.iter().map(|v| self.split(v)).collect()
    }

    pub fn contains(&self, family: &[Z2Vector]) -> bool {
        assert_eq!(family.len(), self.open.len());
        self.span.contains(&Z2Vector::concat(family))
    }

    /// Span of the section basis restricted to the listed open elements.
    pub fn projection(&self, elements: &[usize]) -> Reducer {
        let positions: Vec<usize> = elements
            .iter()
            .map(|p| self.open.iter().position(|q| q == p).expect("element of the open set"))
            .collect();
        let dim = positions.iter().map(|&a| self.dims[a]).sum();
        let mut r = Reducer::new(dim, 0);
        for fam in self.basis_families() {
            let parts: Vec<&Z2Vector> = positions.iter().map(|&a| &fam[a]).collect();
            r.insert(Z2Vector::concat(parts), Z2Vector::zeros(0));
        }
        r
    }
}

/// `ρ_{i,k}(s_i) = ρ_{j,k}(s_j)`, with `max(i, j) <= k <= n`.
pub fn coincide(
    ph: &PersistentHomology,
    i: usize,
    s_i: &Z2Vector,
    j: usize,
    s_j: &Z2Vector,
    k: usize,
) -> Result<bool> {
    check_levels(ph, i, j, k)?;
    Ok(ph.push(i, k, s_i)? == ph.push(j, k, s_j)?)
}

fn check_levels(ph: &PersistentHomology, i: usize, j: usize, k: usize) -> Result<()> {
    if k > ph.len() {
        return Err(Error::LevelOutOfRange {
            level: k,
            min: i.max(j),
            max: ph.len(),
        });
    }
    if i.max(j) > k {
        return Err(Error::LevelOutOfRange {
            level: i.max(j),
            min: 0,
            max: k,
        });
    }
    Ok(())
}

/// Sections of the cospan `H(X_i) -> H(X_k) <- H(X_j)` over the union of the
/// basic opens of the two lower nodes.
#[derive(Clone, Debug)]
pub struct CoincidenceSections {
    pub sheaf: CellularSheaf,
    pub space: SectionSpace,
    pairs: Reducer,
}

impl CoincidenceSections {
    pub fn from_maps(left: &Z2Matrix, right: &Z2Matrix, labels: [&str; 3]) -> Result<Self> {
        let sheaf = cospan_sheaf(left, right, labels)?;
        let open = sheaf.poset.open_generated_by(&[0, 1]);
        let space = sections(&sheaf, &open)?;
        let pairs = space.projection(&[0, 1]);
        Ok(Self { sheaf, space, pairs })
    }

    /// Whether `(s_left, s_right)` extends to a section.
    pub fn contains_pair(&self, s_left: &Z2Vector, s_right: &Z2Vector) -> bool {
        assert_eq!(s_left.len(), self.sheaf.stalk_dim(0));
        assert_eq!(s_right.len(), self.sheaf.stalk_dim(1));
        self.pairs.contains(&Z2Vector::concat([s_left, s_right]))
    }

    /// Dimension of the space of pairs that extend to sections.
    pub fn pair_dim(&self) -> usize {
        self.pairs.rank()
    }

    /// Right-hand classes that pair with some left-hand class.
    pub fn right_projection(&self) -> Reducer {
        self.space.projection(&[1])
    }
}

pub fn coincidence_as_section(ph: &PersistentHomology, i: usize, j: usize, k: usize) -> Result<CoincidenceSections> {
    check_levels(ph, i, j, k)?;
    CoincidenceSections::from_maps(ph.map(i, k)?, ph.map(j, k)?, ["H(X_i)", "H(X_j)", "H(X_k)"])
}

/// The persistence module `H(X_1) -> ... -> H(X_n)` as a sheaf on the chain
/// `1 < 2 < ... < n`; element `e` is level `e + 1`.
pub fn persistence_sheaf(ph: &PersistentHomology) -> Result<CellularSheaf> {
    let n = ph.len();
    if n == 0 {
        return Err(Error::InvalidPoset("a filtration with no levels".into()));
    }
    let labels = (1..=n).map(|i| format!("H(X_{i})")).collect();
    let poset = FinitePoset::from_covers(labels, (1..n).map(|e| (e - 1, e)))?;
    let covers: Vec<((usize, usize), Z2Matrix)> = (1..n)
        .map(|e| Ok(((e - 1, e), ph.map(e, e + 1)?.clone())))
        .collect::<Result<_>>()?;
    make_sheaf(poset, (1..=n).map(|i| ph.dim(i)).collect(), covers)
}
