//! Binary images, their filtrations, windows and patches, plus the small set
//! of file formats the tools read and write.
//!
//! Pixel convention: a [`BinaryImage`] stores the *black* pixel set. In PBM
//! files a `1` bit is black. In CSV files a `0` entry is black and `1` is
//! white, which follows the grayscale habit of 0 meaning dark.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Pixel coordinates `(x, y)`, `x` counting columns and `y` counting rows.
pub type Pixel = (usize, usize);

/// A pixel grid with a distinguished set of black pixels.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Invalid(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        Ok(Self {
            width,
            height,
            bits: vec![false; width * height],
        })
    }

    /// Image with the given black pixels. Duplicates are harmless.
    pub fn from_pixels(
        width: usize,
        height: usize,
        black: impl IntoIterator<Item = Pixel>,
    ) -> Result<Self> {
        let mut img = Self::new(width, height)?;
        for (x, y) in black {
            if x >= width || y >= height {
                return Err(Error::Invalid(format!(
                    "pixel ({x}, {y}) outside {width}x{height} image"
                )));
            }
            img.bits[y * width + x] = true;
        }
        Ok(img)
    }

    /// Parse rows of `#` (black) and `.` (white). Handy for fixtures.
    pub fn from_ascii_art(rows: &[&str]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let mut black = Vec::new();
        for (y, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(Error::Parse(format!("row {y} has the wrong length")));
            }
            for (x, c) in row.chars().enumerate() {
                match c {
                    '#' | 'X' | '1' => black.push((x, y)),
                    '.' | ' ' | '0' => {}
                    other => return Err(Error::Parse(format!("unexpected character {other:?}"))),
                }
            }
        }
        Self::from_pixels(width, height, black)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn is_black(&self, x: usize, y: usize) -> bool {
        x < self.width && y < self.height && self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, black: bool) {
        assert!(x < self.width && y < self.height, "pixel ({x}, {y}) out of range");
        self.bits[y * self.width + x] = black;
    }

    /// Black pixels in row-major order.
    pub fn black_pixels(&self) -> impl Iterator<Item = Pixel> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i % self.width, i / self.width))
    }

    pub fn black_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn is_subset_of(&self, other: &BinaryImage) -> bool {
        self.dims() == other.dims() && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    fn check_same_dims(&self, other: &BinaryImage) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: other.dims(),
            });
        }
        Ok(())
    }

    pub fn union(&self, other: &BinaryImage) -> Result<BinaryImage> {
        self.check_same_dims(other)?;
        let bits = self.bits.iter().zip(&other.bits).map(|(&a, &b)| a || b).collect();
        Ok(BinaryImage { bits, ..*self })
    }

    pub fn difference(&self, other: &BinaryImage) -> Result<BinaryImage> {
        self.check_same_dims(other)?;
        let bits = self.bits.iter().zip(&other.bits).map(|(&a, &b)| a && !b).collect();
        Ok(BinaryImage { bits, ..*self })
    }

    pub fn intersects(&self, other: &BinaryImage) -> bool {
        self.bits.iter().zip(&other.bits).any(|(&a, &b)| a && b)
    }

    /// Same content shifted by `(dx, dy)` into a `width`x`height` canvas.
    pub fn translated(&self, dx: usize, dy: usize, width: usize, height: usize) -> Result<Self> {
        Self::from_pixels(width, height, self.black_pixels().map(|(x, y)| (x + dx, y + dy)))
    }
}

impl fmt::Debug for BinaryImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BinaryImage {}x{}", self.width, self.height)?;
        for y in 0..self.height {
            for x in 0..self.width {
                f.write_str(if self.is_black(x, y) { "#" } else { "." })?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// An 8-bit grayscale grid, used only as input to [`threshold`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    values: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, values: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Invalid("grayscale image must be non-empty".into()));
        }
        if values.len() != width * height {
            return Err(Error::Invalid(format!(
                "expected {} values for a {width}x{height} image, got {}",
                width * height,
                values.len()
            )));
        }
        Ok(Self { width, height, values })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.values[y * self.width + x]
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThresholdMode {
    /// Arithmetic mean of all pixel values, rounded toward zero.
    Mean,
    Fixed(u32),
}

impl FromStr for ThresholdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(ThresholdMode::Mean),
            _ => {
                let t = s
                    .strip_prefix("fixed:")
                    .ok_or_else(|| Error::Parse(format!("threshold must be `mean` or `fixed:<t>`, got {s:?}")))?;
                t.parse()
                    .map(ThresholdMode::Fixed)
                    .map_err(|_| Error::Parse(format!("invalid fixed threshold {t:?}")))
            }
        }
    }
}

/// A pixel is black iff its value is strictly below the threshold.
pub fn threshold(gray: &GrayImage, mode: ThresholdMode) -> BinaryImage {
    let t = match mode {
        ThresholdMode::Mean => {
            let sum: u64 = gray.values.iter().map(|&v| u64::from(v)).sum();
            (sum / gray.values.len() as u64) as u32
        }
        ThresholdMode::Fixed(t) => t,
    };
    BinaryImage {
        width: gray.width,
        height: gray.height,
        bits: gray.values.iter().map(|&v| u32::from(v) < t).collect(),
    }
}

/// Nested black-pixel sets `level 1 ⊆ level 2 ⊆ ... ⊆ level n`.
///
/// Level 0 is the implicit empty image; `level(i)` is 1-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageFiltration {
    levels: Vec<BinaryImage>,
}

impl ImageFiltration {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.levels[0].dims()
    }

    /// Level `i` for `1 <= i <= len()`.
    pub fn level(&self, i: usize) -> &BinaryImage {
        assert!(i >= 1 && i <= self.levels.len(), "filtration level {i} out of range");
        &self.levels[i - 1]
    }

    pub fn levels(&self) -> &[BinaryImage] {
        &self.levels
    }

    /// Per-pixel first level at which the pixel is black, `None` if never.
    pub fn entry_levels(&self) -> Vec<Option<usize>> {
        let (w, h) = self.dims();
        let mut out = vec![None; w * h];
        for (i, img) in self.levels.iter().enumerate().rev() {
            for (x, y) in img.black_pixels() {
                out[y * w + x] = Some(i + 1);
            }
        }
        out
    }
}

pub fn build_filtration(images: Vec<BinaryImage>) -> Result<ImageFiltration> {
    let first = images
        .first()
        .ok_or_else(|| Error::Invalid("a filtration needs at least one level".into()))?;
    for img in &images[1..] {
        first.check_same_dims(img)?;
    }
    if let Some(i) = images.windows(2).position(|w| !w[0].is_subset_of(&w[1])) {
        return Err(Error::NestednessViolation { level: i + 1 });
    }
    Ok(ImageFiltration { levels: images })
}

/// Inclusive pixel rectangle `[x0, x1] x [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Window {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Window {
    pub fn new(x0: usize, y0: usize, x1: usize, y1: usize) -> Result<Self> {
        if x0 > x1 || y0 > y1 {
            return Err(Error::Invalid(format!(
                "empty window [{x0},{x1}]x[{y0},{y1}]"
            )));
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    /// `size`x`size` window at `(x0, y0)`, clipped to a `width`x`height` image.
    pub fn clipped(x0: usize, y0: usize, size: usize, width: usize, height: usize) -> Self {
        assert!(size > 0 && x0 < width && y0 < height);
        Self {
            x0,
            y0,
            x1: (x0 + size - 1).min(width - 1),
            y1: (y0 + size - 1).min(height - 1),
        }
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        (self.x0..=self.x1).contains(&x) && (self.y0..=self.y1).contains(&y)
    }

    pub fn on_boundary(&self, x: usize, y: usize) -> bool {
        x == self.x0 || x == self.x1 || y == self.y0 || y == self.y1
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.x1 < width && self.y1 < height
    }

    pub fn pixels(&self) -> impl Iterator<Item = Pixel> + '_ {
        (self.y0..=self.y1).flat_map(move |y| (self.x0..=self.x1).map(move |x| (x, y)))
    }
}

/// A pair of black-pixel sets whose closed squares do not touch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Patch {
    x1: BinaryImage,
    x2: BinaryImage,
    window: Option<Window>,
}

impl Patch {
    /// Validating constructor for hand-built patches.
    pub fn new(x1: BinaryImage, x2: BinaryImage) -> Result<Self> {
        x1.check_same_dims(&x2)?;
        if let Some((a, b)) = closure_contact(&x1, &x2) {
            return Err(Error::HypothesisViolation { a, b });
        }
        Ok(Self { x1, x2, window: None })
    }

    /// Inner piece (trimmed window content).
    pub fn inner(&self) -> &BinaryImage {
        &self.x1
    }

    /// Outer piece (black pixels outside the window).
    pub fn outer(&self) -> &BinaryImage {
        &self.x2
    }

    pub fn window(&self) -> Option<Window> {
        self.window
    }

    /// The same patch with the roles of the two pieces exchanged.
    pub fn swapped(&self) -> Patch {
        Patch {
            x1: self.x2.clone(),
            x2: self.x1.clone(),
            window: self.window,
        }
    }
}

/// First pair of pixels, one from each set, that are equal or 8-adjacent.
///
/// Two closed unit squares intersect exactly when their pixels are equal or
/// 8-adjacent, so `None` means the closures are disjoint.
pub fn closure_contact(a: &BinaryImage, b: &BinaryImage) -> Option<(Pixel, Pixel)> {
    for (x, y) in a.black_pixels() {
        for ny in y.saturating_sub(1)..=(y + 1) {
            for nx in x.saturating_sub(1)..=(x + 1) {
                if b.is_black(nx, ny) {
                    return Some(((x, y), (nx, ny)));
                }
            }
        }
    }
    None
}

/// Split the black pixels of `image` by `window`.
///
/// The inner piece is the window's black pixels minus everything on any of
/// the window's four boundary rows/columns; the outer piece is every black
/// pixel outside the window. Boundary pixels belong to neither piece, which
/// keeps the two closures apart.
pub fn extract_patch(image: &BinaryImage, window: Window) -> Result<Patch> {
    if !window.fits(image.width, image.height) {
        return Err(Error::Invalid(format!(
            "window {window:?} exceeds {}x{} image",
            image.width, image.height
        )));
    }
    let mut x1 = BinaryImage::new(image.width, image.height)?;
    let mut x2 = BinaryImage::new(image.width, image.height)?;
    for (x, y) in image.black_pixels() {
        if !window.contains(x, y) {
            x2.set(x, y, true);
        } else if !window.on_boundary(x, y) {
            x1.set(x, y, true);
        }
    }
    debug_assert!(closure_contact(&x1, &x2).is_none());
    Ok(Patch {
        x1,
        x2,
        window: Some(window),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    /// Plain PBM (`P1`).
    PbmAscii,
    /// Raw PBM (`P4`).
    PbmBinary,
    /// Comma-separated rows of 0/1, 0 = black.
    Csv,
}

impl FromStr for ImageFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pbm-ascii" | "p1" => Ok(ImageFormat::PbmAscii),
            "pbm-binary" | "p4" => Ok(ImageFormat::PbmBinary),
            "csv" => Ok(ImageFormat::Csv),
            other => Err(Error::Parse(format!("unknown image format {other:?}"))),
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn load_image(path: impl AsRef<Path>, format: ImageFormat) -> Result<BinaryImage> {
    let bytes = read_file(path.as_ref())?;
    decode_image(&bytes, format)
}

pub fn decode_image(bytes: &[u8], format: ImageFormat) -> Result<BinaryImage> {
    match format {
        ImageFormat::PbmAscii | ImageFormat::PbmBinary => {
            let img = decode_pbm(bytes)?;
            let magic = &bytes[..2];
            let expected: &[u8] = if format == ImageFormat::PbmAscii { b"P1" } else { b"P4" };
            if magic != expected {
                return Err(Error::Parse(format!(
                    "expected {} header, found {}",
                    String::from_utf8_lossy(expected),
                    String::from_utf8_lossy(magic)
                )));
            }
            Ok(img)
        }
        ImageFormat::Csv => decode_csv(bytes),
    }
}

pub fn save_image(image: &BinaryImage, path: impl AsRef<Path>, format: ImageFormat) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_image(image, format)).map_err(|e| Error::io(path, e))
}

pub fn encode_image(image: &BinaryImage, format: ImageFormat) -> Vec<u8> {
    match format {
        ImageFormat::PbmAscii => {
            let mut s = format!("P1\n{} {}\n", image.width, image.height);
            for y in 0..image.height {
                let row: Vec<&str> = (0..image.width)
                    .map(|x| if image.is_black(x, y) { "1" } else { "0" })
                    .collect();
                s.push_str(&row.join(" "));
                s.push('\n');
            }
            s.into_bytes()
        }
        ImageFormat::PbmBinary => {
            let mut out = format!("P4\n{} {}\n", image.width, image.height).into_bytes();
            for y in 0..image.height {
                for chunk in 0..image.width.div_ceil(8) {
                    let mut byte = 0u8;
                    for bit in 0..8 {
                        let x = chunk * 8 + bit;
                        if image.is_black(x, y) {
                            byte |= 0x80 >> bit;
                        }
                    }
                    out.push(byte);
                }
            }
            out
        }
        ImageFormat::Csv => {
            let mut s = String::new();
            for y in 0..image.height {
                let row: Vec<&str> = (0..image.width)
                    .map(|x| if image.is_black(x, y) { "0" } else { "1" })
                    .collect();
                s.push_str(&row.join(","));
                s.push('\n');
            }
            s.into_bytes()
        }
    }
}

/// Cursor over a netpbm header: whitespace-separated tokens, `#` comments.
struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn skip_space(&mut self) {
        while let Some(&c) = self.bytes.get(self.pos) {
            if c == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn magic(&mut self) -> Result<&'a [u8]> {
        if self.bytes.len() < 2 {
            return Err(Error::Parse("file too short for a netpbm header".into()));
        }
        self.pos = 2;
        Ok(&self.bytes[..2])
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Parse(format!("malformed header: missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse(format!("malformed header: bad {what}")))
    }

    /// Consume the single whitespace byte that ends a raw-format header.
    fn end_of_header(&mut self) -> Result<&'a [u8]> {
        match self.bytes.get(self.pos) {
            Some(c) if c.is_ascii_whitespace() => Ok(&self.bytes[self.pos + 1..]),
            _ => Err(Error::Parse("malformed header: missing separator before raster".into())),
        }
    }
}

fn positive_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::Parse(format!("image dimensions must be positive, got {width}x{height}")));
    }
    Ok(())
}

fn decode_pbm(bytes: &[u8]) -> Result<BinaryImage> {
    let mut h = Header::new(bytes);
    let magic = h.magic()?;
    if magic != b"P1" && magic != b"P4" {
        return Err(Error::Parse("not a PBM file".into()));
    }
    let width = h.number("width")?;
    let height = h.number("height")?;
    positive_dims(width, height)?;
    let mut img = BinaryImage::new(width, height)?;
    if magic == b"P1" {
        let mut n = 0;
        h.skip_space();
        for &c in &bytes[h.pos..] {
            match c {
                b'0' | b'1' => {
                    if n >= width * height {
                        return Err(Error::Parse("dimension mismatch: too many pixels".into()));
                    }
                    img.bits[n] = c == b'1';
                    n += 1;
                }
                c if c.is_ascii_whitespace() => {}
                c => {
                    return Err(Error::Parse(format!("out-of-range PBM value {:?}", c as char)));
                }
            }
        }
        if n != width * height {
            return Err(Error::Parse(format!(
                "dimension mismatch: expected {} pixels, found {n}",
                width * height
            )));
        }
    } else {
        let raster = h.end_of_header()?;
        let row_bytes = width.div_ceil(8);
        if raster.len() < row_bytes * height {
            return Err(Error::Parse("dimension mismatch: truncated P4 raster".into()));
        }
        for y in 0..height {
            for x in 0..width {
                let byte = raster[y * row_bytes + x / 8];
                img.bits[y * width + x] = byte & (0x80 >> (x % 8)) != 0;
            }
        }
    }
    Ok(img)
}

fn csv_rows(bytes: &[u8]) -> Result<Vec<Vec<u32>>> {
    let text = std::str::from_utf8(bytes).map_err(|_| Error::Parse("CSV is not UTF-8".into()))?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::Parse(format!("line {}: bad value {:?}", lineno + 1, f.trim())))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first().map(|r: &Vec<u32>| r.len()) {
            if row.len() != first {
                return Err(Error::Parse(format!(
                    "dimension mismatch: line {} has {} values, expected {first}",
                    lineno + 1,
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("empty CSV".into()));
    }
    Ok(rows)
}

fn decode_csv(bytes: &[u8]) -> Result<BinaryImage> {
    let rows = csv_rows(bytes)?;
    let mut img = BinaryImage::new(rows[0].len(), rows.len())?;
    for (y, row) in rows.iter().enumerate() {
        for (x, &v) in row.iter().enumerate() {
            match v {
                0 => img.set(x, y, true),
                1 => {}
                _ => return Err(Error::Parse(format!("out-of-range value {v} at ({x}, {y})"))),
            }
        }
    }
    Ok(img)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GrayFormat {
    /// PGM, plain (`P2`) or raw (`P5`), maxval at most 255.
    Pgm,
    /// Comma-separated rows of 0..=255.
    Csv,
}

pub fn load_gray(path: impl AsRef<Path>, format: GrayFormat) -> Result<GrayImage> {
    let bytes = read_file(path.as_ref())?;
    decode_gray(&bytes, format)
}

pub fn decode_gray(bytes: &[u8], format: GrayFormat) -> Result<GrayImage> {
    match format {
        GrayFormat::Csv => {
            let rows = csv_rows(bytes)?;
            let (w, h) = (rows[0].len(), rows.len());
            let mut values = Vec::with_capacity(w * h);
            for v in rows.into_iter().flatten() {
                values.push(u8::try_from(v).map_err(|_| Error::Parse(format!("out-of-range gray value {v}")))?);
            }
            GrayImage::new(w, h, values)
        }
        GrayFormat::Pgm => {
            let mut h = Header::new(bytes);
            let magic = h.magic()?;
            let width = h.number("width")?;
            let height = h.number("height")?;
            let maxval = h.number("maxval")?;
            positive_dims(width, height)?;
            if maxval == 0 || maxval > 255 {
                return Err(Error::Parse(format!("unsupported PGM maxval {maxval}")));
            }
            let n = width * height;
            let values = match magic {
                b"P2" => {
                    let mut values = Vec::with_capacity(n);
                    for _ in 0..n {
                        let v = h.number("pixel value").map_err(|_| {
                            Error::Parse("dimension mismatch: too few PGM values".into())
                        })?;
                        if v > maxval {
                            return Err(Error::Parse(format!("out-of-range gray value {v}")));
                        }
                        values.push(v as u8);
                    }
                    h.skip_space();
                    if h.pos < bytes.len() {
                        return Err(Error::Parse("dimension mismatch: trailing PGM data".into()));
                    }
                    values
                }
                b"P5" => {
                    let raster = h.end_of_header()?;
                    if raster.len() < n {
                        return Err(Error::Parse("dimension mismatch: truncated P5 raster".into()));
                    }
                    raster[..n].to_vec()
                }
                _ => return Err(Error::Parse("not a PGM file".into())),
            };
            GrayImage::new(width, height, values)
        }
    }
}

/// Plain PGM (`P2`) text with maxval 255.
pub fn encode_pgm_ascii(width: usize, height: usize, values: &[u8]) -> String {
    assert_eq!(values.len(), width * height);
    let mut s = format!("P2\n{width} {height}\n255\n");
    for row in values.chunks(width) {
        let row: Vec<String> = row.iter().map(u8::to_string).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_black_pbm_pixel() {
        let img = decode_image(b"P1\n1 1\n1\n", ImageFormat::PbmAscii).unwrap();
        assert_eq!(img.dims(), (1, 1));
        assert_eq!(img.black_pixels().collect::<Vec<_>>(), vec![(0, 0)]);
    }

    #[test]
    fn all_white_pbm() {
        let img = decode_image(b"P1\n# comment\n2 2\n0 0\n0 0\n", ImageFormat::PbmAscii).unwrap();
        assert!(img.is_empty());
    }

    #[test]
    fn csv_diagonal_zeros_are_black() {
        let img = decode_image(b"0,1,1\n1,0,1\n1,1,0\n", ImageFormat::Csv).unwrap();
        assert_eq!(img.black_pixels().collect::<Vec<_>>(), vec![(0, 0), (1, 1), (2, 2)]);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(decode_image(b"P1\n2\n", ImageFormat::PbmAscii), Err(Error::Parse(_))));
        assert!(matches!(decode_image(b"P1\n2 2\n1 1 1\n", ImageFormat::PbmAscii), Err(Error::Parse(_))));
        assert!(matches!(decode_image(b"P1\n1 1\n2\n", ImageFormat::PbmAscii), Err(Error::Parse(_))));
        assert!(matches!(decode_image(b"P4\n8 2\n\x00", ImageFormat::PbmBinary), Err(Error::Parse(_))));
        assert!(matches!(decode_image(b"0,1\n1\n", ImageFormat::Csv), Err(Error::Parse(_))));
        assert!(matches!(decode_image(b"0,2\n", ImageFormat::Csv), Err(Error::Parse(_))));
        assert!(matches!(decode_image(b"P4\n1 1\n\x80", ImageFormat::PbmAscii), Err(Error::Parse(_))));
    }

    #[test]
    fn p4_bits_are_msb_first() {
        let img = decode_image(b"P4\n9 1\n\x80\x80", ImageFormat::PbmBinary).unwrap();
        assert_eq!(img.black_pixels().collect::<Vec<_>>(), vec![(0, 0), (8, 0)]);
    }

    #[test]
    fn threshold_modes() {
        let flat = GrayImage::new(2, 2, vec![100; 4]).unwrap();
        assert!(threshold(&flat, ThresholdMode::Mean).is_empty());

        let two = GrayImage::new(2, 1, vec![0, 200]).unwrap();
        let b = threshold(&two, ThresholdMode::Mean);
        assert_eq!(b.black_pixels().collect::<Vec<_>>(), vec![(0, 0)]);

        let three = GrayImage::new(3, 1, vec![10, 20, 30]).unwrap();
        let b = threshold(&three, ThresholdMode::Fixed(25));
        assert_eq!(b.black_pixels().collect::<Vec<_>>(), vec![(0, 0), (1, 0)]);

        // mean of 1 and 2 rounds down to 1
        let odd = GrayImage::new(2, 1, vec![1, 2]).unwrap();
        assert_eq!(threshold(&odd, ThresholdMode::Mean).black_pixels().collect::<Vec<_>>(), vec![]);
        assert_eq!("fixed:7".parse::<ThresholdMode>().unwrap(), ThresholdMode::Fixed(7));
        assert!("median".parse::<ThresholdMode>().is_err());
    }

    #[test]
    fn pgm_plain_and_raw() {
        let g = decode_gray(b"P2\n2 1\n255\n3 250\n", GrayFormat::Pgm).unwrap();
        assert_eq!(g.values(), &[3, 250]);
        let g = decode_gray(b"P5\n2 1\n255\n\x03\xfa", GrayFormat::Pgm).unwrap();
        assert_eq!(g.values(), &[3, 250]);
        let text = encode_pgm_ascii(2, 1, &[3, 250]);
        assert_eq!(decode_gray(text.as_bytes(), GrayFormat::Pgm).unwrap().values(), &[3, 250]);
        assert!(decode_gray(b"P2\n2 1\n255\n3\n", GrayFormat::Pgm).is_err());
        assert!(decode_gray(b"P2\n1 1\n100\n101\n", GrayFormat::Pgm).is_err());
    }

    #[test]
    fn filtration_nestedness() {
        let empty = BinaryImage::new(2, 2).unwrap();
        let one = BinaryImage::from_pixels(2, 2, [(0, 0)]).unwrap();
        assert!(build_filtration(vec![empty, one.clone()]).is_ok());
        let other = BinaryImage::from_pixels(2, 2, [(1, 1)]).unwrap();
        assert!(matches!(
            build_filtration(vec![one.clone(), other]),
            Err(Error::NestednessViolation { level: 1 })
        ));
        let wide = BinaryImage::new(3, 2).unwrap();
        assert!(matches!(
            build_filtration(vec![one, wide]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(build_filtration(vec![]).is_err());
    }

    #[test]
    fn full_window_trims_to_interior() {
        let img = BinaryImage::from_pixels(5, 5, (0..5).flat_map(|y| (0..5).map(move |x| (x, y)))).unwrap();
        let p = extract_patch(&img, Window::new(0, 0, 4, 4).unwrap()).unwrap();
        assert_eq!(p.inner().black_count(), 9);
        assert!(p.inner().black_pixels().all(|(x, y)| (1..=3).contains(&x) && (1..=3).contains(&y)));
        assert!(p.outer().is_empty());
    }

    #[test]
    fn window_without_black_pixels() {
        let img = BinaryImage::from_pixels(6, 6, [(5, 5), (4, 5)]).unwrap();
        let p = extract_patch(&img, Window::new(0, 0, 2, 2).unwrap()).unwrap();
        assert!(p.inner().is_empty());
        assert_eq!(p.outer(), &img);
        assert!(extract_patch(&img, Window::new(4, 4, 6, 6).unwrap()).is_err());
    }

    #[test]
    fn touching_patch_is_rejected() {
        let a = BinaryImage::from_pixels(4, 4, [(1, 1)]).unwrap();
        let b = BinaryImage::from_pixels(4, 4, [(2, 2)]).unwrap();
        assert!(matches!(Patch::new(a.clone(), b), Err(Error::HypothesisViolation { .. })));
        let c = BinaryImage::from_pixels(4, 4, [(3, 3)]).unwrap();
        assert!(Patch::new(a, c).is_ok());
    }

    fn arb_image() -> impl Strategy<Value = BinaryImage> {
        (1usize..14, 1usize..6).prop_flat_map(|(w, h)| {
            prop::collection::vec(any::<bool>(), w * h).prop_map(move |bits| {
                BinaryImage::from_pixels(
                    w,
                    h,
                    bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| (i % w, i / w)),
                )
                .unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn encode_then_decode_is_identity(img in arb_image()) {
            for f in [ImageFormat::PbmAscii, ImageFormat::PbmBinary, ImageFormat::Csv] {
                prop_assert_eq!(decode_image(&encode_image(&img, f), f).unwrap(), img.clone());
            }
        }

        #[test]
        fn patches_are_closure_disjoint(img in arb_image(), a in 0usize..14, b in 0usize..6, s in 1usize..8) {
            let (w, h) = img.dims();
            let win = Window::clipped(a % w, b % h, s, w, h);
            let p = extract_patch(&img, win).unwrap();
            prop_assert!(closure_contact(p.inner(), p.outer()).is_none());
            prop_assert!(!p.inner().intersects(p.outer()));
            prop_assert!(p.inner().union(p.outer()).unwrap().is_subset_of(&img));
        }
    }
}
