use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_harmonic")).args(args).output().expect("spawn harmonic")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn list_names_every_fixture_once() {
    let o = run(&["list"]);
    assert_eq!(code(&o), 0);
    let ids: Vec<String> = stdout(&o).lines().map(|l| l.split_whitespace().next().unwrap().to_string()).collect();
    assert!(ids.len() >= 30);
    for id in ["catenoid", "sec5.2-torus", "sec2-subtle-bad", "hyperbolic-paraboloid"] {
        assert_eq!(ids.iter().filter(|i| *i == id).count(), 1, "{id}");
    }
}

#[test]
fn info_reports_catenoid_ends() {
    let o = run(&["info", "catenoid"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    assert!(s.contains("genus 0, ends (1,2,2) + (1,2,2), total curvature -4π"), "{s}");
    assert!(s.contains("end at 0: type (1,2,2), order 2"), "{s}");
    assert!(s.contains("end at inf: type (1,2,2), order 2"), "{s}");
}

#[test]
fn info_json_parses() {
    let o = run(&["--json", "info", "catenoid"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["ends"].as_array().unwrap().len(), 2);
    assert_eq!(v["ends"][0]["type"]["reduced"], serde_json::json!([1, 2, 2]));
}

#[test]
fn parameters_bind_through_shorthand() {
    let a = stdout(&run(&["info", "sec2-graphs-22n", "--n", "2"]));
    let b = stdout(&run(&["info", "sec2-graphs-22n", "--param", "n=2"]));
    assert_eq!(a, b);
    assert!(a.contains("(2,2,4)"), "{a}");
}

#[test]
fn classify_budget_lists_families() {
    let o = run(&["classify", "--total", "-2"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    assert!(s.contains("11 families"), "{s}");
    assert!(s.contains("(1,2,2) + (1,2,2)"), "{s}");
}

#[test]
fn catenoid_curvature_passes() {
    let o = run(&["check", "catenoid", "curvature"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS  curvature"));
}

#[test]
fn subtle_bad_embedding_reports_coincident_pair() {
    let o = run(&["check", "sec2-subtle-bad", "embedded"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let s = stdout(&o);
    assert!(s.contains("PASS  embedded  not embedded"), "{s}");
    assert!(s.lines().any(|l| l.trim_start().starts_with("coincident_pair") || l.trim_start().starts_with("self_intersection")), "{s}");
}

#[test]
fn torus_periods_close() {
    let o = run(&["close-periods", "sec5.2-torus"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    let l1: f64 = s.lines().find_map(|l| l.strip_prefix("lambda1 = ")).unwrap().trim().parse().unwrap();
    assert!((l1 - 0.456946581044463625767858767319).abs() < 1e-9, "{l1}");
    assert!(s.lines().last().unwrap().starts_with("PASS"), "{s}");
}

#[test]
fn mesh_writes_obj() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.obj");
    let o = run(&["mesh", "hyperbolic-paraboloid", "--density", "2", "--normals", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&path).unwrap();
    let (mut v, mut vn, mut f) = (0usize, 0usize, 0usize);
    for line in text.lines() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                v += 1;
                assert_eq!(it.filter(|t| t.parse::<f64>().unwrap().is_finite()).count(), 3);
            }
            Some("vn") => vn += 1,
            Some("f") => {
                f += 1;
                for t in it {
                    let i: usize = t.split('/').next().unwrap().parse().unwrap();
                    assert!((1..=v).contains(&i));
                }
            }
            _ => {}
        }
    }
    assert!(v > 0 && f > 0);
    assert_eq!(vn, v);
}

#[test]
fn inline_forms_are_checked() {
    let o = run(&["check", "--form", "1, i, z^-2", "proper", "types"]);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL  proper"));
    let o = run(&["check", "--form", "1, i, z", "types", "curvature", "regular"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn negative_values_parse_as_arguments() {
    let o = run(&["check", "--form", "1/w, z/w, 1", "--curve", "-1,0,1", "types"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("(0,2,3)"));
    let o = run(&["check", "--form", "-1, i, 1/z", "types"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["info", "no-such-fixture"][..],
        &["check", "catenoid", "bogus"],
        &["mesh", "catenoid", "--region", "2,1"],
        &["mesh", "catenoid", "--density", "0"],
        &["info", "catenoid", "--param", "n"],
        &["check", "--form", "1, i, 1/z", "periods"],
    ] {
        let o = run(args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}
