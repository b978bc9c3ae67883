//! Seeded randomized property suites.
//!
//! Each suite draws its inputs from a ChaCha stream keyed by the seed and the
//! suite name, so suites are reproducible individually and in any order.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::branch::{patch_clauses, ShortFiltration};
use crate::cubical::{betti, complex_of_image};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::imageio::{build_filtration, extract_patch, BinaryImage, ImageFiltration, Patch, Window};
use crate::persistence::{reduction_diagrams, union_find_diagram, Death, PersistentHomology};
use crate::sheaf::{coincide, coincidence_as_section, persistence_sheaf};
use crate::z2::Z2Vector;

/// Homology dimensions above this are resampled in the exhaustive suites.
pub const SMALL_STALK: usize = 4;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckConfig {
    pub seed: u64,
    pub filtrations: usize,
    pub small_filtrations: usize,
    pub patches: usize,
    /// Flip one composite restriction before verifying functoriality.
    pub corrupt_restriction: bool,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            filtrations: 200,
            small_filtrations: 100,
            patches: 200,
            corrupt_restriction: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub trials: usize,
    /// Individual comparisons made across all trials.
    pub checks: usize,
    pub failures: usize,
    pub first_failure: Option<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {} trials, {} checks, {} failures",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.trials,
            self.checks,
            self.failures
        )?;
        if let Some(w) = &self.first_failure {
            write!(f, " [{w}]")?;
        }
        Ok(())
    }
}

/// Failure counts for one trial.
#[derive(Default)]
struct Tally {
    checks: usize,
    failures: usize,
    first: Option<String>,
}

impl Tally {
    fn check(&mut self, ok: bool, why: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
            if self.first.is_none() {
                self.first = Some(why());
            }
        }
    }

    fn error(&mut self, e: Error) {
        self.check(false, || e.to_string());
    }
}

fn summarize(name: &'static str, tallies: Vec<Tally>) -> SuiteReport {
    let trials = tallies.len();
    let mut report = SuiteReport {
        name,
        trials,
        checks: 0,
        failures: 0,
        first_failure: None,
    };
    for (i, t) in tallies.into_iter().enumerate() {
        report.checks += t.checks;
        report.failures += t.failures;
        if report.first_failure.is_none() {
            report.first_failure = t.first.map(|w| format!("trial {i}: {w}"));
        }
    }
    report
}

fn suite_rng(seed: u64, name: &str) -> ChaCha8Rng {
    let salt = name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    ChaCha8Rng::seed_from_u64(seed ^ salt)
}

fn all_vectors(dim: usize) -> impl Iterator<Item = Z2Vector> {
    assert!(dim < 32);
    (0..1u64 << dim).map(move |m| Z2Vector::from_mask(dim, m))
}

fn random_image<R: Rng>(rng: &mut R, w: usize, h: usize, density: f64) -> BinaryImage {
    let pixels: Vec<(usize, usize)> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .filter(|_| rng.gen_bool(density))
        .collect();
    BinaryImage::from_pixels(w, h, pixels).expect("pixels in range")
}

/// Nested random levels: each pixel enters at a uniform level or never.
pub fn random_filtration<R: Rng>(rng: &mut R, max_side: usize, max_levels: usize) -> ImageFiltration {
    let w = rng.gen_range(1..=max_side);
    let h = rng.gen_range(1..=max_side);
    let n = rng.gen_range(1..=max_levels);
    let density = rng.gen_range(0.2..0.8);
    let entry: Vec<Option<usize>> = (0..w * h)
        .map(|_| rng.gen_bool(density).then(|| rng.gen_range(1..=n)))
        .collect();
    let levels = (1..=n)
        .map(|lvl| {
            let pixels = (0..w * h).filter(|&i| entry[i].is_some_and(|e| e <= lvl)).map(|i| (i % w, i / w));
            BinaryImage::from_pixels(w, h, pixels).expect("pixels in range")
        })
        .collect();
    build_filtration(levels).expect("levels are nested by construction")
}

/// A random filtration whose homology has dimension at most [`SMALL_STALK`]
/// at every level in both degrees.
pub fn small_filtration<R: Rng>(rng: &mut R) -> ImageFiltration {
    loop {
        let f = random_filtration(rng, 6, 4);
        let small = f.levels().iter().all(|img| {
            let k = complex_of_image(img);
            betti(&k, 0) <= SMALL_STALK && betti(&k, 1) <= SMALL_STALK
        });
        if small {
            return f;
        }
    }
}

/// Either a window patch or a random split: `X1` a random subset, `X2`
/// everything in `X` that does not touch `X1`.
pub fn random_patch<R: Rng>(rng: &mut R, max_side: usize) -> (Patch, BinaryImage) {
    let w = rng.gen_range(3..=max_side);
    let h = rng.gen_range(3..=max_side);
    let density = rng.gen_range(0.25..0.7);
    let image = random_image(rng, w, h, density);
    if rng.gen_bool(0.5) {
        let size = rng.gen_range(3..=w.max(h));
        let window = Window::clipped(rng.gen_range(0..w), rng.gen_range(0..h), size, w, h);
        return (extract_patch(&image, window).expect("window fits"), image);
    }
    let keep = rng.gen_range(0.1..0.6);
    let x1 = BinaryImage::from_pixels(w, h, image.black_pixels().filter(|_| rng.gen_bool(keep)).collect::<Vec<_>>())
        .expect("pixels in range");
    let x2 = BinaryImage::from_pixels(
        w,
        h,
        image
            .black_pixels()
            .filter(|&(x, y)| {
                (y.saturating_sub(1)..=y + 1).all(|ny| (x.saturating_sub(1)..=x + 1).all(|nx| !x1.is_black(nx, ny)))
            })
            .collect::<Vec<_>>(),
    )
    .expect("pixels in range");
    (Patch::new(x1, x2).expect("closures are disjoint by construction"), image)
}

/// Bars alive at each level equal the Betti numbers, and the union-find
/// diagram equals the reduction diagram in degree 0.
pub fn betti_consistency(seed: u64, trials: usize) -> SuiteReport {
    let mut rng = suite_rng(seed, "betti");
    let corpus: Vec<ImageFiltration> = (0..trials).map(|_| random_filtration(&mut rng, 8, 5)).collect();
    let tallies = corpus
        .par_iter()
        .map(|f| {
            let mut t = Tally::default();
            let [r0, r1] = reduction_diagrams(f);
            let uf = union_find_diagram(f);
            t.check(uf == r0, || format!("union-find {:?} vs reduction {:?}", uf.bars(), r0.bars()));
            for (q, pd) in [(0, &r0), (1, &r1)] {
                for i in 1..=f.len() {
                    let b = betti(&complex_of_image(f.level(i)), q);
                    t.check(pd.alive_at(i) == b, || format!("q={q} level {i}: {} bars alive, betti {b}", pd.alive_at(i)));
                }
            }
            t
        })
        .collect();
    summarize("betti-consistency", tallies)
}

fn small_corpus(seed: u64, trials: usize) -> Vec<ImageFiltration> {
    let mut rng = suite_rng(seed, "small-corpus");
    (0..trials).map(|_| small_filtration(&mut rng)).collect()
}

fn over_corpus(corpus: &[ImageFiltration], per_q: impl Fn(&PersistentHomology, &mut Tally) -> Result<()> + Sync) -> Vec<Tally> {
    corpus
        .par_iter()
        .map(|f| {
            let mut t = Tally::default();
            for q in 0..=1 {
                let outcome = PersistentHomology::new(f, q).and_then(|ph| per_q(&ph, &mut t));
                if let Err(e) = outcome {
                    t.error(e);
                }
            }
            t
        })
        .collect()
}

/// Direct coincidence agrees with membership in the section space of the
/// cospan sheaf, for every pair of classes and every `i <= j <= k`.
pub fn coincidence_sections(seed: u64, trials: usize) -> SuiteReport {
    let corpus = small_corpus(seed, trials);
    let tallies = over_corpus(&corpus, |ph, t| {
        let n = ph.len();
        for k in 1..=n {
            for i in 0..=k {
                for j in i..=k {
                    let cs = coincidence_as_section(ph, i, j, k)?;
                    for si in all_vectors(ph.dim(i)) {
                        for sj in all_vectors(ph.dim(j)) {
                            let direct = coincide(ph, i, &si, j, &sj, k)?;
                            let section = cs.contains_pair(&si, &sj);
                            t.check(direct == section, || {
                                format!("q={} i={i} j={j} k={k} s_i={si:?} s_j={sj:?}: coincide={direct} section={section}", ph.q())
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    });
    summarize("coincidence-sections", tallies)
}

/// A class born at `j` that coincides with an older class at `k` dies no
/// later than `k`.
pub fn death_bound(seed: u64, trials: usize) -> SuiteReport {
    let corpus = small_corpus(seed, trials);
    let tallies = over_corpus(&corpus, |ph, t| {
        let n = ph.len();
        for j in 1..=n {
            for sj in all_vectors(ph.dim(j)) {
                let Some(death) = ph.element_death(j, &sj)? else {
                    continue;
                };
                for i in 0..j {
                    for k in j..=n {
                        for si in all_vectors(ph.dim(i)) {
                            if coincide(ph, i, &si, j, &sj, k)? {
                                t.check(death <= Death::At(k), || {
                                    format!("q={} s_j={sj:?} born {j} dies {death}, coincides with level {i} at {k}", ph.q())
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    });
    summarize("death-bound", tallies)
}

/// A class born at `j` coincides at `k` with some class from level `i < j`
/// exactly when it has element barcode `(2, 3)` in `[X_i, X_j, X_k]`.
pub fn short_filtration_barcode(seed: u64, trials: usize) -> SuiteReport {
    let corpus = small_corpus(seed, trials);
    let tallies = corpus
        .par_iter()
        .map(|f| {
            let mut t = Tally::default();
            let (w, h) = f.dims();
            let empty = BinaryImage::new(w, h).expect("non-empty grid");
            let level = |i: usize| if i == 0 { empty.clone() } else { f.level(i).clone() };
            for q in 0..=1 {
                let mut run = || -> Result<()> {
                    let ph = PersistentHomology::new(f, q)?;
                    let n = ph.len();
                    for i in 0..n {
                        for j in i + 1..n {
                            for k in j + 1..=n {
                                let g = ShortFiltration::new(level(i), level(j), level(k))?.homology(q)?;
                                for sj in all_vectors(ph.dim(j)) {
                                    if !ph.born_at(j, &sj)? {
                                        continue;
                                    }
                                    let mut exists = false;
                                    for si in all_vectors(ph.dim(i)) {
                                        if coincide(&ph, i, &si, j, &sj, k)? {
                                            exists = true;
                                            break;
                                        }
                                    }
                                    let bar = g.element_death(2, &sj)? == Some(Death::At(3));
                                    t.check(exists == bar, || {
                                        format!("q={q} i={i} j={j} k={k} s_j={sj:?}: coinciding older class={exists} barcode (2,3)={bar}")
                                    });
                                }
                            }
                        }
                    }
                    Ok(())
                };
                if let Err(e) = run() {
                    t.error(e);
                }
            }
            t
        })
        .collect();
    summarize("short-filtration-barcode", tallies)
}

/// Patch clauses on random closure-disjoint patches, both degrees.
pub fn patch_suite(seed: u64, trials: usize) -> SuiteReport {
    let mut rng = suite_rng(seed, "patches");
    let corpus: Vec<(Patch, BinaryImage)> = (0..trials).map(|_| random_patch(&mut rng, 12)).collect();
    let tallies = corpus
        .par_iter()
        .map(|(patch, image)| {
            let mut t = Tally::default();
            for q in 0..=1 {
                match patch_clauses(patch, image, q) {
                    Ok(report) => {
                        for c in &report.clauses {
                            t.check(c.passed, || format!("q={q} clause {}: {}", c.name, c.witness.clone().unwrap_or_default()));
                        }
                    }
                    Err(e) => t.error(e),
                }
            }
            t
        })
        .collect();
    summarize("patch-clauses", tallies)
}

/// Every persistence module of the small corpus, plus the "AI" fixture, is a
/// functorial sheaf on its chain. With `corrupt` set, one composite of the
/// fixture sheaf is flipped first and the violation must be caught.
pub fn functoriality(seed: u64, trials: usize, corrupt: bool) -> SuiteReport {
    let mut corpus = vec![fixtures::ai_filtration()];
    corpus.extend(small_corpus(seed, trials));
    let mut tallies = Vec::with_capacity(corpus.len());
    for (idx, f) in corpus.iter().enumerate() {
        let mut t = Tally::default();
        for q in 0..=1 {
            let result = PersistentHomology::new(f, q).and_then(|ph| {
                let mut sheaf = persistence_sheaf(&ph)?;
                if corrupt && idx == 0 && q == 0 {
                    let last = ph.len() - 1;
                    sheaf.corrupt_restriction(0, last, 0, 0);
                }
                sheaf.verify()
            });
            match result {
                Ok(()) => t.check(true, String::new),
                Err(e) => t.error(e),
            }
        }
        tallies.push(t);
    }
    summarize("functoriality", tallies)
}

/// Every suite, in a fixed order.
pub fn run_checks(config: &CheckConfig) -> Vec<SuiteReport> {
    let seed = config.seed;
    vec![
        betti_consistency(seed, config.filtrations),
        coincidence_sections(seed, config.small_filtrations),
        death_bound(seed, config.small_filtrations),
        short_filtration_barcode(seed, config.small_filtrations),
        patch_suite(seed, config.patches),
        functoriality(seed, config.small_filtrations, config.corrupt_restriction),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic() {
        let a = random_filtration(&mut suite_rng(3, "x"), 8, 5);
        let b = random_filtration(&mut suite_rng(3, "x"), 8, 5);
        assert_eq!(a, b);
        let (p, img) = random_patch(&mut suite_rng(9, "p"), 12);
        assert!(p.inner().is_subset_of(&img) && p.outer().is_subset_of(&img));
    }

    #[test]
    fn small_corpus_respects_stalk_bound() {
        for f in small_corpus(1, 10) {
            for q in 0..=1 {
                let ph = PersistentHomology::new(&f, q).unwrap();
                assert!((1..=ph.len()).all(|i| ph.dim(i) <= SMALL_STALK));
            }
        }
    }

    #[test]
    fn quick_suites_pass() {
        let config = CheckConfig {
            seed: 11,
            filtrations: 20,
            small_filtrations: 8,
            patches: 20,
            corrupt_restriction: false,
        };
        for report in run_checks(&config) {
            assert!(report.passed(), "{report}");
            assert!(report.checks > 0, "{report}");
        }
    }

    #[test]
    fn corrupted_restriction_is_reported() {
        let report = functoriality(0, 2, true);
        assert_eq!(report.failures, 1);
        assert!(report.first_failure.unwrap().contains("functoriality"));
    }

    #[test]
    fn level_diagrams_match_persistence_diagram() {
        use crate::persistence::persistence_diagram;
        let f = fixtures::ai_filtration();
        assert_eq!(persistence_diagram(&f, 0), union_find_diagram(&f));
    }
}
