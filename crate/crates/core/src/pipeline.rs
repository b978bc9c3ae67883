//! End-to-end run: load an image, compute window branch numbers, write
//! artifacts.
//!
//! Artifacts, all optional through [`Emit`]:
//!
//! | file          | content                                                   |
//! |---------------|-----------------------------------------------------------|
//! | `heatmap.csv` | summed branch numbers, row-major integers                 |
//! | `heatmap.pgm` | the same map scaled to 0..=255, plain PGM                 |
//! | `mask.csv`    | 1 for black pixels, 0 otherwise                           |
//! | `report.csv`  | `size,x0,y0,x1,y1,b0` for every window with inner pixels  |
//! | `pd/*.txt`    | dimension 0 and 1 diagrams of `G1` for those windows      |

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::branch::{branch_windows, short_filtrations, HeatMap, Stride, WindowValue};
use crate::error::{Error, Result};
use crate::imageio::{
    decode_gray, decode_image, encode_pgm_ascii, extract_patch, threshold, BinaryImage, GrayFormat, ImageFormat,
    ThresholdMode,
};
use crate::persistence::{format_diagrams, reduction_diagrams};

/// Side length required by the demo profile.
pub const DEMO_SIDE: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputFormat {
    /// PBM, plain or raw, chosen by the header.
    Pbm,
    Binary(ImageFormat),
    /// Grayscale input, thresholded to black and white.
    Gray(GrayFormat),
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pbm" => Ok(InputFormat::Pbm),
            "pgm" => Ok(InputFormat::Gray(GrayFormat::Pgm)),
            "gray-csv" => Ok(InputFormat::Gray(GrayFormat::Csv)),
            other => other
                .parse::<ImageFormat>()
                .map(InputFormat::Binary)
                .map_err(|_| {
                    Error::Parse(format!(
                        "unknown input format {other:?} (expected pbm, pbm-ascii, pbm-binary, csv, pgm or gray-csv)"
                    ))
                }),
        }
    }
}

/// Which artifacts to write.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Emit {
    pub pd: bool,
    pub heatmap: bool,
    pub mask: bool,
    pub report: bool,
}

impl Default for Emit {
    fn default() -> Self {
        Self {
            pd: false,
            heatmap: true,
            mask: true,
            report: true,
        }
    }
}

impl FromStr for Emit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut e = Emit {
            pd: false,
            heatmap: false,
            mask: false,
            report: false,
        };
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match item {
                "pd" => e.pd = true,
                "heatmap" => e.heatmap = true,
                "mask" => e.mask = true,
                "report" => e.report = true,
                other => return Err(Error::Parse(format!("unknown artifact {other:?}"))),
            }
        }
        Ok(e)
    }
}

/// Comma-separated positive window sizes.
pub fn parse_sizes(s: &str) -> Result<Vec<usize>> {
    let sizes = s
        .split(',')
        .map(|t| match t.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::Parse(format!("window size must be a positive integer, got {t:?}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    if sizes.is_empty() {
        return Err(Error::Parse("no window sizes".into()));
    }
    Ok(sizes)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub input: PathBuf,
    pub format: InputFormat,
    pub threshold: ThresholdMode,
    pub windows: Vec<usize>,
    pub stride: Stride,
    pub out: PathBuf,
    pub emit: Emit,
    /// Require a 100x100 input.
    pub demo: bool,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        Self {
            input: input.into(),
            format: InputFormat::Pbm,
            threshold: ThresholdMode::Mean,
            windows: vec![10, 20, 30],
            stride: Stride::Tile,
            out: out.into(),
            emit: Emit::default(),
            demo: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub image: BinaryImage,
    pub windows: Vec<WindowValue>,
    pub heat_map: HeatMap,
    pub written: Vec<PathBuf>,
}

pub fn decode_input(bytes: &[u8], format: InputFormat, mode: ThresholdMode) -> Result<BinaryImage> {
    match format {
        InputFormat::Pbm => {
            let magic = bytes.get(..2).unwrap_or_default();
            let f = match magic {
                b"P4" => ImageFormat::PbmBinary,
                _ => ImageFormat::PbmAscii,
            };
            decode_image(bytes, f)
        }
        InputFormat::Binary(f) => decode_image(bytes, f),
        InputFormat::Gray(f) => Ok(threshold(&decode_gray(bytes, f)?, mode)),
    }
}

pub fn load_input(path: &Path, format: InputFormat, mode: ThresholdMode) -> Result<BinaryImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_input(&bytes, format, mode)
}

/// Report rows for windows whose trimmed content is non-empty.
pub fn format_report(windows: &[WindowValue]) -> String {
    let mut s = String::from("size,x0,y0,x1,y1,b0\n");
    for wv in windows.iter().filter(|w| w.inner_black > 0) {
        let w = wv.window;
        let _ = writeln!(s, "{},{},{},{},{},{}", wv.size, w.x0, w.y0, w.x1, w.y1, wv.value);
    }
    s
}

fn write(path: PathBuf, contents: &[u8], written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// Compute everything for an already-loaded image and write the artifacts.
pub fn run_image(image: BinaryImage, config: &RunConfig) -> Result<RunSummary> {
    if config.demo && image.dims() != (DEMO_SIDE, DEMO_SIDE) {
        return Err(Error::Invalid(format!(
            "demo profile expects a {DEMO_SIDE}x{DEMO_SIDE} image, got {}x{}",
            image.width(),
            image.height()
        )));
    }
    let windows = branch_windows(&image, &config.windows, config.stride)?;
    let heat_map = HeatMap::from_windows(&image, &windows);

    fs::create_dir_all(&config.out).map_err(|e| Error::io(&config.out, e))?;
    let mut written = Vec::new();
    let out = &config.out;
    if config.emit.heatmap {
        write(out.join("heatmap.csv"), heat_map.to_csv().as_bytes(), &mut written)?;
        let pgm = encode_pgm_ascii(heat_map.width(), heat_map.height(), &heat_map.normalized());
        write(out.join("heatmap.pgm"), pgm.as_bytes(), &mut written)?;
    }
    if config.emit.mask {
        write(out.join("mask.csv"), heat_map.mask_csv().as_bytes(), &mut written)?;
    }
    if config.emit.report {
        write(out.join("report.csv"), format_report(&windows).as_bytes(), &mut written)?;
    }
    if config.emit.pd {
        let dir = out.join("pd");
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for wv in windows.iter().filter(|w| w.inner_black > 0) {
            let patch = extract_patch(&image, wv.window)?;
            let (g1, _) = short_filtrations(&patch, &image)?;
            let text = format_diagrams(&reduction_diagrams(g1.filtration()));
            let name = format!("size{}_x{}_y{}.txt", wv.size, wv.window.x0, wv.window.y0);
            write(dir.join(name), text.as_bytes(), &mut written)?;
        }
    }
    Ok(RunSummary {
        image,
        windows,
        heat_map,
        written,
    })
}

pub fn run(config: &RunConfig) -> Result<RunSummary> {
    let image = load_input(&config.input, config.format, config.threshold)?;
    run_image(image, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::imageio::encode_image;

    #[test]
    fn parsing_flags() {
        assert_eq!("pbm".parse::<InputFormat>().unwrap(), InputFormat::Pbm);
        assert_eq!("csv".parse::<InputFormat>().unwrap(), InputFormat::Binary(ImageFormat::Csv));
        assert_eq!("gray-csv".parse::<InputFormat>().unwrap(), InputFormat::Gray(GrayFormat::Csv));
        assert!("png".parse::<InputFormat>().is_err());
        let e: Emit = "pd,report".parse().unwrap();
        assert!(e.pd && e.report && !e.heatmap && !e.mask);
        assert!("pd,bogus".parse::<Emit>().is_err());
        assert_eq!(parse_sizes("10, 20,30").unwrap(), vec![10, 20, 30]);
        assert!(parse_sizes("10,0").is_err());
        assert!(parse_sizes("").is_err());
    }

    #[test]
    fn pbm_header_picks_variant() {
        let star = fixtures::asterisk(9);
        for f in [ImageFormat::PbmAscii, ImageFormat::PbmBinary] {
            let bytes = encode_image(&star, f);
            assert_eq!(decode_input(&bytes, InputFormat::Pbm, ThresholdMode::Mean).unwrap(), star);
        }
    }

    #[test]
    fn asterisk_run_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = RunConfig::new("unused", dir.path());
        config.windows = vec![3];
        config.emit = "pd,heatmap,mask,report".parse().unwrap();
        let summary = run_image(fixtures::asterisk(9), &config).unwrap();
        let report = fs::read_to_string(dir.path().join("report.csv")).unwrap();
        let values: Vec<&str> = report.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
        assert_eq!(values, ["1", "1", "1", "1", "8", "1", "1", "1", "1"]);
        assert_eq!(summary.written.len(), 4 + 9);
        let pd = fs::read_to_string(dir.path().join("pd/size3_x3_y3.txt")).unwrap();
        assert_eq!(pd.lines().filter(|l| *l == "0 2 3").count(), 8);
        let pgm = fs::read_to_string(dir.path().join("heatmap.pgm")).unwrap();
        assert!(pgm.starts_with("P2\n9 9\n255\n"));
    }

    #[test]
    fn demo_profile_checks_size() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = RunConfig::new("unused", dir.path());
        config.demo = true;
        assert!(matches!(run_image(fixtures::asterisk(9), &config), Err(Error::Invalid(_))));
    }

    #[test]
    fn missing_input_is_io() {
        let config = RunConfig::new("/nonexistent/input.pbm", "/tmp/never");
        assert_eq!(run(&config).unwrap_err().kind(), crate::ErrorKind::Io);
    }
}
