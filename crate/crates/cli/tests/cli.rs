use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shotbound"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn scene(length: usize, pattern: &str, color: [u8; 3]) -> String {
    format!(
        r#"{{"length":{length},"pattern":{pattern},"color":[{},{},{}]}}"#,
        color[0], color[1], color[2]
    )
}

const SOLID: &str = r#"{"type":"solid"}"#;
const GRADIENT: &str = r#"{"type":"gradient"}"#;

fn noise(seed: u64) -> String {
    format!(r#"{{"type":"noise","seed":{seed},"amplitude":12}}"#)
}

fn write_manifest(dir: &Path) -> String {
    let train = |name: &str, seed: u64| {
        let colors = [
            [20, 30, 40],
            [230, 220, 200],
            [40, 60, 30],
            [250, 200, 120],
            [10, 10, 120],
            [200, 240, 160],
        ];
        let scenes: Vec<String> = (0..6)
            .map(|i| {
                let p = if i % 2 == 0 {
                    noise(seed + i as u64)
                } else {
                    GRADIENT.to_string()
                };
                scene(70 + 10 * i, &p, colors[i])
            })
            .collect();
        format!(
            r#"{{"name":"{name}","width":48,"height":36,"seed":{seed},"scenes":[{}],
                "transitions":[{{"type":"cut"}},{{"type":"dissolve","frames":8}},{{"type":"cut"}},{{"type":"wipe","frames":8}},{{"type":"cut"}}]}}"#,
            scenes.join(",")
        )
    };
    let two = format!(
        r#"{{"name":"two","width":48,"height":36,"seed":3,"scenes":[{},{}],"transitions":[{{"type":"cut"}}]}}"#,
        scene(80, GRADIENT, [20, 30, 40]),
        scene(80, &noise(4), [230, 220, 200])
    );
    let flat = format!(
        r#"{{"name":"flat","width":32,"height":32,"scenes":[{}]}}"#,
        scene(12, SOLID, [90, 90, 90])
    );
    let text = format!("[{},{},{two},{flat}]", train("a", 1), train("b", 2));
    let path = dir.join("corpus.json");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn synth(dir: &Path) -> String {
    let manifest = write_manifest(dir);
    let out = dir.join("clips");
    let o = run(&["synth", "--manifest", &manifest, "--out-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    out.to_string_lossy().into_owned()
}

fn cut_lines(text: &str) -> Vec<String> {
    text.lines()
        .filter(|l| l.starts_with("cut"))
        .map(str::to_owned)
        .collect()
}

#[test]
fn synth_writes_video_and_annotations() {
    let dir = tempfile::tempdir().unwrap();
    let clips = Path::new(&synth(dir.path())).to_owned();
    let scenes3 = format!(
        r#"[{{"name":"three","width":64,"height":48,"seed":1,"scenes":[{},{},{}],"transitions":[{{"type":"cut"}},{{"type":"fade","frames":6}}]}}]"#,
        scene(30, SOLID, [20, 20, 20]),
        scene(30, GRADIENT, [220, 200, 180]),
        scene(30, SOLID, [10, 40, 200])
    );
    let m = dir.path().join("three.json");
    fs::write(&m, scenes3).unwrap();
    let o = run(&[
        "synth",
        "--manifest",
        m.to_str().unwrap(),
        "--out-dir",
        clips.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let y4m = fs::read(clips.join("three.y4m")).unwrap();
    assert!(y4m.starts_with(b"YUV4MPEG2 W64 H48 "));
    let ann = fs::read_to_string(clips.join("three.txt")).unwrap();
    assert_eq!(cut_lines(&ann), vec!["cut 30"]);
    assert_eq!(ann.lines().filter(|l| l.starts_with("grad")).count(), 1);
    assert!(clips.join("two.y4m").exists() && clips.join("flat.txt").exists());
}

#[test]
fn train_then_detect_finds_the_cut() {
    let dir = tempfile::tempdir().unwrap();
    let clips = Path::new(&synth(dir.path())).to_owned();
    let cut = dir.path().join("cut.json");
    let grad = dir.path().join("grad.json");
    let o = run(&[
        "train",
        clips.join("a.y4m").to_str().unwrap(),
        clips.join("b.y4m").to_str().unwrap(),
        "--cut-model",
        cut.to_str().unwrap(),
        "--grad-model",
        grad.to_str().unwrap(),
        "--importance",
        "3",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 3);

    let out = dir.path().join("two.det");
    let o = run(&[
        "detect",
        clips.join("two.y4m").to_str().unwrap(),
        "--cut-model",
        cut.to_str().unwrap(),
        "--grad-model",
        grad.to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("160 frames") && stderr(&o).contains("fps"));
    let det = fs::read_to_string(&out).unwrap();
    assert_eq!(det.lines().count(), 1, "{det}");
    assert!(det.starts_with("cut 80 "), "{det}");

    // identical runs give identical output
    let again = run(&[
        "detect",
        clips.join("two.y4m").to_str().unwrap(),
        "--cut-model",
        cut.to_str().unwrap(),
        "--grad-model",
        grad.to_str().unwrap(),
    ]);
    assert_eq!(stdout(&again), det);
}

#[test]
fn threshold_detection_from_stdin() {
    let dir = tempfile::tempdir().unwrap();
    let clips = Path::new(&synth(dir.path())).to_owned();
    let bytes = fs::read(clips.join("two.y4m")).unwrap();
    let mut child = bin()
        .args(["detect", "-", "--threshold", "0.5", "--metric", "blockmean"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(&bytes).unwrap();
    let o = child.wait_with_output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(cut_lines(&stdout(&o)).len(), 1);
    assert!(stdout(&o).starts_with("cut 80 "));
}

#[test]
fn eval_on_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let clips = Path::new(&synth(dir.path())).to_owned();
    let a = clips.join("a.txt");
    let o = run(&[
        "eval",
        "--truth",
        a.to_str().unwrap(),
        "--pred",
        a.to_str().unwrap(),
        "--json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["overall"]["f1"], 1.0);
    assert_eq!(report["overall"]["true_positives"], 5);

    let o = run(&["eval", "--truth", a.to_str().unwrap(), "--pred", a.to_str().unwrap()]);
    assert!(stdout(&o).contains("F score"));
    assert!(stdout(&o).lines().nth(1).unwrap().contains("1.0000"));
}

#[test]
fn features_on_constant_clip_are_zero() {
    let dir = tempfile::tempdir().unwrap();
    let clips = Path::new(&synth(dir.path())).to_owned();
    let flat = clips.join("flat.y4m");
    for extra in [&[][..], &["--tracks"][..]] {
        let mut args = vec!["features", flat.to_str().unwrap()];
        args.extend_from_slice(extra);
        let o = run(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        let text = stdout(&o);
        let rows: Vec<&str> = text.lines().skip(1).collect();
        assert_eq!(rows.len(), 12);
        for row in rows {
            assert!(row.split(',').skip(1).all(|v| v == "0"), "{row}");
        }
    }
    // frame index plus 78 features; feature names are quoted in the header
    let o = run(&["features", flat.to_str().unwrap()]);
    assert!(stdout(&o).lines().skip(1).all(|row| row.split(',').count() == 79));
}

#[test]
fn candidates_and_votes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("d1.txt"), "100\n500\n").unwrap();
    fs::write(p.join("d2.txt"), "102\n").unwrap();
    let manifest = p.join("manifest.csv");
    let o = run(&[
        "candidates",
        p.join("d1.txt").to_str().unwrap(),
        p.join("d2.txt").to_str().unwrap(),
        "--video-id",
        "v1",
        "--length",
        "1000",
        "-o",
        manifest.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&manifest).unwrap();
    assert_eq!(text.lines().count(), 3, "{text}");
    assert!(text.contains("v1_000101,v1,81,120,101"), "{text}");

    let votes = p.join("votes.csv");
    let mut v = String::from("segment_id,judgment\n");
    v.push_str(&"v1_000101,yes\n".repeat(4));
    v.push_str("v1_000101,no\nv1_000500,no\n");
    fs::write(&votes, v).unwrap();
    let out = p.join("ann");
    let o = run(&[
        "votes",
        "--manifest",
        manifest.to_str().unwrap(),
        "--votes",
        votes.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("v1_000101,4,1,accepted"), "{}", stdout(&o));
    assert!(stdout(&o).contains("v1_000500,0,1,needs_more"), "{}", stdout(&o));
    let ann = fs::read_to_string(out.join("v1.txt")).unwrap();
    assert_eq!(cut_lines(&ann), vec!["cut 101"]);
}

#[test]
fn missing_input_is_a_data_error() {
    let o = run(&["detect", "/nonexistent/clip.y4m", "--threshold", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/nonexistent/clip.y4m"));
}

#[test]
fn malformed_model_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("bad.json");
    fs::write(&m, "{not json").unwrap();
    let o = run(&[
        "detect",
        "x.y4m",
        "--cut-model",
        m.to_str().unwrap(),
        "--grad-model",
        m.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.json"));
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        &["detect", "x.y4m"][..],
        &["detect", "x.y4m", "--threshold", "0.5", "--adaptive"][..],
        &["detect", "x.y4m", "--threshold", "0.5", "--metric", "nosuch"][..],
        &["frobnicate"][..],
        &[][..],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(stderr(&o).contains("--help"), "{args:?}: {}", stderr(&o));
    }
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("detect"));
}
