use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sheafbranch::fixtures;
use sheafbranch::imageio::{save_image, BinaryImage, ImageFormat};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sheafbranch"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn asterisk_report_and_heat_map() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("star.pbm");
    save_image(&fixtures::asterisk(9), &input, ImageFormat::PbmBinary).unwrap();
    let out = dir.path().join("out");
    let o = run(&["run", "--input", path(&input), "--windows", "3", "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(out.join("report.csv")).unwrap();
    let b0: Vec<&str> = report.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(b0, ["1", "1", "1", "1", "8", "1", "1", "1", "1"]);
    let heat = fs::read_to_string(out.join("heatmap.csv")).unwrap();
    assert_eq!(heat.lines().nth(4).unwrap(), "1,1,1,8,8,8,1,1,1");
    assert!(out.join("mask.csv").exists() && out.join("heatmap.pgm").exists());
    assert!(!out.join("pd").exists());
}

#[test]
fn white_image_gives_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("white.csv");
    fs::write(&input, "1,1,1,1\n1,1,1,1\n1,1,1,1\n").unwrap();
    let out = dir.path().join("out");
    let o = run(&["run", "--input", path(&input), "--format", "csv", "--windows", "3", "--out", path(&out)]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(out.join("report.csv")).unwrap(), "size,x0,y0,x1,y1,b0\n");
    let heat = fs::read_to_string(out.join("heatmap.csv")).unwrap();
    assert!(heat.split([',', '\n']).filter(|s| !s.is_empty()).all(|v| v == "0"));
}

#[test]
fn gray_input_is_thresholded() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("gray.pgm");
    fs::write(&input, "P2\n3 3\n255\n0 200 0\n200 0 200\n0 200 0\n").unwrap();
    let out = dir.path().join("out");
    let o = run(&["run", "--input", path(&input), "--format", "pgm", "--threshold", "fixed:100", "--windows", "3", "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(out.join("mask.csv")).unwrap(), "1,0,1\n0,1,0\n1,0,1\n");
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("two.pbm");
    let (image, _) = fixtures::two_arms();
    save_image(&image, &input, ImageFormat::PbmAscii).unwrap();
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = run(&["run", "--input", path(&input), "--windows", "3,5", "--stride", "2", "--emit", "pd,heatmap,mask,report", "--out", path(&out)]);
        assert!(o.status.success());
        let mut files: Vec<(String, Vec<u8>)> = Vec::new();
        for entry in walk(&out) {
            files.push((entry.strip_prefix(&out).unwrap().display().to_string(), fs::read(&entry).unwrap()));
        }
        files.sort();
        outputs.push(files);
    }
    assert!(outputs[0].len() > 4);
    assert_eq!(outputs[0], outputs[1]);
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

#[test]
fn exit_codes_by_failure_class() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let missing = run(&["run", "--input", "/nonexistent.pbm", "--out", path(&out)]);
    assert_eq!(missing.status.code(), Some(10));
    assert_eq!(String::from_utf8_lossy(&missing.stderr).lines().count(), 1);

    let bad = dir.path().join("bad.pbm");
    fs::write(&bad, "P1\n2 2\n1 0 1\n").unwrap();
    assert_eq!(run(&["run", "--input", path(&bad), "--out", path(&out)]).status.code(), Some(11));

    let small = dir.path().join("small.pbm");
    save_image(&BinaryImage::new(5, 5).unwrap(), &small, ImageFormat::PbmAscii).unwrap();
    let demo = run(&["run", "--input", path(&small), "--demo", "--out", path(&out)]);
    assert_eq!(demo.status.code(), Some(12));

    let usage = run(&["run", "--input", path(&small), "--stride", "0", "--out", path(&out)]);
    assert_eq!(usage.status.code(), Some(2));
}

#[test]
fn checks_pass_and_corruption_is_reported() {
    let ok = run(&["check", "--seed", "3", "--filtrations", "20", "--small", "10", "--patches", "20"]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stdout));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("6 of 6 suites passed"));

    let bad = run(&["check", "--small", "2", "--filtrations", "2", "--patches", "2", "--corrupt-restriction"]);
    assert_eq!(bad.status.code(), Some(13));
    let stdout = String::from_utf8_lossy(&bad.stdout);
    assert!(stdout.contains("FAIL functoriality"));
    assert!(stdout.contains("functoriality violated"));
}

#[test]
fn diagram_of_nested_levels() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures::ai_filtration();
    let mut args = vec!["diagram".to_string()];
    for i in 1..=f.len() {
        let p = dir.path().join(format!("g{i}.pbm"));
        save_image(f.level(i), &p, ImageFormat::PbmAscii).unwrap();
        args.push(path(&p).to_string());
    }
    let o = bin().args(&args).output().unwrap();
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout), "0 1 inf\n0 3 4\n1 2 4\n");

    args.swap(1, 4);
    let o = bin().args(&args).output().unwrap();
    assert_eq!(o.status.code(), Some(12));
}
