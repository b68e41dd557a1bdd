use std::process::Command;

fn curvetrace() -> Command {
    Command::new(env!("CARGO_BIN_EXE_curvetrace"))
}

#[test]
fn circle_job_file_to_svg() {
    let dir = tempfile::tempdir().unwrap();
    let job = dir.path().join("circle.json");
    std::fs::write(&job, r#"{"system": ["x^2 + y^2 - 1"], "variables": ["x", "y"], "box": [[-2, 2], [-2, 2]]}"#).unwrap();
    let out = dir.path().join("circle.svg");
    let status = curvetrace()
        .args(["--input", job.to_str().unwrap(), "--eps", "0.2", "--format", "svg", "-o", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let svg = std::fs::read_to_string(&out).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("<path").count(), 1);
}

#[test]
fn missing_eps_is_an_input_error() {
    let out = curvetrace().args(["--expr", "x^2+y^2-1", "--vars", "x,y", "--box", "-2,2;-2,2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn malformed_expression_is_an_input_error() {
    let out = curvetrace().args(["--expr", "x^2+*y", "--vars", "x,y", "--box", "-1,1;-1,1", "--eps", "0.1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn inline_system_writes_json_to_stdout() {
    let out = curvetrace()
        .args(["--expr", "y^2 - (-x^2 + x)^3", "--vars", "x,y", "--box", "-1,2;-1,1", "--eps", "0.2", "--verify"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["nvars"], 2);
    assert_eq!(doc["singular_points"].as_array().unwrap().len(), 2);
    assert!(!doc["chains"].as_array().unwrap().is_empty());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("verify: curve->chains"));
}

#[test]
fn several_formats_share_the_output_stem() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("run.out");
    let status = curvetrace()
        .args(["--expr", "x^2+y^2+z^2-1", "--expr", "z", "--vars", "x,y,z", "--box", "-2,2;-2,2;-2,2", "--eps", "0.2"])
        .args(["--format", "json", "--format", "obj", "-o", base.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.path().join("run.json").exists());
    let obj = std::fs::read_to_string(dir.path().join("run.obj")).unwrap();
    assert!(obj.lines().any(|l| l.starts_with("l ")));
}
