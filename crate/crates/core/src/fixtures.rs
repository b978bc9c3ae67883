//! Small hand-built images with known diagrams and branch numbers.

use crate::imageio::{build_filtration, BinaryImage, ImageFiltration, Window};

/// `n`x`n` asterisk: the middle row, middle column and both diagonals.
/// `n` should be odd.
pub fn asterisk(n: usize) -> BinaryImage {
    let c = n / 2;
    let pixels = (0..n)
        .flat_map(|y| (0..n).map(move |x| (x, y)))
        .filter(|&(x, y)| x == c || y == c || x == y || x + y == n - 1);
    BinaryImage::from_pixels(n, n, pixels).expect("pixels are in range")
}

/// Four levels spelling "AI" on a 9x7 grid.
///
/// 1. an "A" whose top bar has a gap,
/// 2. the gap closes, enclosing a hole,
/// 3. a separate "I" appears,
/// 4. a bridge joins the letters and the hole is filled.
///
/// Dimension 0 has bars `(1, inf)` and `(3, 4)`; dimension 1 has `(2, 4)`.
pub fn ai_filtration() -> ImageFiltration {
    let level = |rows: &[&str]| BinaryImage::from_ascii_art(rows).expect("fixture art");
    build_filtration(vec![
        level(&[
            "##.##....",
            "#...#....",
            "#...#....",
            "#####....",
            "#...#....",
            "#...#....",
            "#...#....",
        ]),
        level(&[
            "#####....",
            "#...#....",
            "#...#....",
            "#####....",
            "#...#....",
            "#...#....",
            "#...#....",
        ]),
        level(&[
            "#####....",
            "#...#....",
            "#...#....",
            "#####....",
            "#...#..#.",
            "#...#..#.",
            "#...#..#.",
        ]),
        level(&[
            "#####....",
            "#####....",
            "#####....",
            "#####....",
            "#...#..#.",
            "#...####.",
            "#...#..#.",
        ]),
    ])
    .expect("levels are nested")
}

/// A thick horizontal bar and a window across its middle.
///
/// Trimming the window leaves one block inside; outside it the bar splits
/// into two arms that each reach the block only through the window's
/// boundary columns.
pub fn two_arms() -> (BinaryImage, Window) {
    let image = BinaryImage::from_ascii_art(&[
        "...............",
        "###############",
        "###############",
        "###############",
        "...............",
    ])
    .expect("fixture art");
    (image, Window { x0: 5, y0: 0, x1: 9, y1: 4 })
}
