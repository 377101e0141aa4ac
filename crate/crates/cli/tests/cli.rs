use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

const C4: &str = r#"{"m":4,"n":4,"edges":[[1,1],[1,2],[2,2],[2,3],[3,3],[3,4],[4,4],[4,1]]}"#;

struct Scratch(PathBuf);

impl Scratch {
    fn new(name: &str) -> Self {
        let dir = std::env::temp_dir().join(format!("lll-cli-{}-{name}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        Scratch(dir)
    }

    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let p = self.0.join(name);
        fs::write(&p, contents).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.0);
    }
}

fn lll(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lll")).args(args).output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Runs the command, checks the exit code and parses stdout as JSON.
fn run_json(args: &[&str], code: i32) -> Value {
    let out = lll(args);
    assert_eq!(out.status.code(), Some(code), "{args:?}: {}", String::from_utf8_lossy(&out.stdout));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn error_code(v: &Value) -> &str {
    v["error"]["code"].as_str().unwrap()
}

#[test]
fn indpoly_and_shearer_on_c4() {
    let s = Scratch::new("c4");
    let g = s.file("c4.json", C4);
    assert_eq!(run_json(&["indpoly", "--graph", p(&g), "--r", "1/3,1/3,1/4,1/4"], 0), json!("0/1"));
    assert_eq!(run_json(&["indpoly", "--graph", p(&g), "--r", "1/3,1/3,1/4,1/4", "--subset", "1,2,3"], 0), json!("1/6"));
    let v = run_json(&["shearer", "--graph", p(&g), "--r", "1/3,1/3,1/4,1/4"], 0);
    assert_eq!(v["in_bound"], json!(false));
    assert_eq!(v["witness"], json!([1, 2, 3, 4]));
    assert_eq!(v["value"], json!("0/1"));
    let v = run_json(&["shearer", "--graph", p(&g), "--r", "0.3,0.3,0.2,0.2"], 0);
    assert_eq!(v["in_bound"], json!(true));
    assert_eq!(v["full_value"], json!("3/25"));
}

#[test]
fn thresholds_and_scales() {
    let s = Scratch::new("thr");
    let edge = s.file("edge.json", r#"{"m":2,"edges":[[1,2]]}"#);
    let v = run_json(&["threshold", "--graph", p(&edge)], 0);
    let t: f64 = v["threshold_decimal"].as_str().unwrap().parse().unwrap();
    assert!((t - 0.5).abs() < 1e-11);
    let v = run_json(&["scale", "--graph", p(&edge), "--r", "1/4,1/4"], 0);
    let l: f64 = v["scale_decimal"].as_str().unwrap().parse().unwrap();
    assert!((l - 2.0).abs() < 1e-11);
    let c4 = s.file("c4.json", C4);
    let v = run_json(&["threshold", "--graph", p(&c4)], 0);
    let t: f64 = v["threshold_decimal"].as_str().unwrap().parse().unwrap();
    assert!((t - (1.0 - 0.5f64.sqrt())).abs() < 1e-11);
}

#[test]
fn tree_commands() {
    let s = Scratch::new("tree");
    let chain = s.file("chain.json", r#"{"m":2,"n":3,"edges":[[1,1],[1,2],[2,2],[2,3]]}"#);
    let v = run_json(&["tree-bound", "--tree", p(&chain), "--r", "1/4,1/4"], 0);
    assert_eq!(v["feasible"], json!(true));
    assert_eq!(v["q"][0]["exact"], json!("1/3"));
    assert_eq!(v["q"][1]["exact"], json!("1/4"));

    let star = s.file("star.json", r#"{"graph":{"m":2,"n":3,"edges":[[1,1],[2,1],[1,2],[2,3]]},"root":1}"#);
    let v = run_json(&["tree-bound", "--tree", p(&star), "--r", "1/2,1/2"], 1);
    assert_eq!(v["failing"], json!(1));

    let two = |d: u32| format!(r#"{{"graph":{{"m":2,"n":1,"edges":[[1,1],[2,1]]}},"root":1,"dims":{{"1":{d}}}}}"#);
    let t2 = s.file("d2.json", &two(2));
    let t3 = s.file("d3.json", &two(3));
    assert_eq!(run_json(&["tree-dim", "--tree", p(&t2), "--r", "1/2,1/2"], 1)["q"][0], json!("2"));
    assert_eq!(run_json(&["tree-dim", "--tree", p(&t3), "--r", "1/2,1/2"], 0)["q"][0], json!("2"));

    assert_eq!(run_json(&["regular-tree", "--t", "2", "--k", "2"], 0)["threshold"], json!("1/4"));
    assert_eq!(run_json(&["regular-tree", "--t", "2", "--k", "3"], 0)["threshold"], json!("4/27"));
    assert_eq!(run_json(&["regular-tree", "--t", "3", "--k", "2"], 0)["threshold"], json!("1/8"));
}

#[test]
fn construct_verify_and_pad() {
    let s = Scratch::new("qlll");
    let g = s.file("c4.json", C4);
    let inst = s.path("inst.json");
    let v = run_json(&["construct", "--graph", p(&g), "--r", "1/3,1/3,1/4,1/4", "--mode", "span", "--seed", "5", "--out", p(&inst)], 0);
    assert_eq!(v["report"]["kernel_relative_dim"], json!("0/1"));
    assert_eq!(v["report"]["method"], json!("exact"));

    let v = run_json(&["verify", "--instance", p(&inst), "--mode", "exact"], 0);
    assert_eq!(v["spans"], json!(true));
    assert_eq!(v["relative_dims"], json!(["1/3", "1/3", "1/4", "1/4"]));

    let inst_json: Value = serde_json::from_str(&fs::read_to_string(&inst).unwrap()).unwrap();
    let doubled: Vec<String> = inst_json["dims"].as_array().unwrap().iter().map(|d| (d.as_u64().unwrap() * 2).to_string()).collect();
    let padded = s.path("padded.json");
    run_json(&["pad", "--instance", p(&inst), "--dims", &doubled.join(","), "--out", p(&padded)], 0);
    let v = run_json(&["verify", "--instance", p(&padded)], 0);
    assert_eq!(v["spans"], json!(true));
    assert_eq!(v["relative_dims"], json!(["1/3", "1/3", "1/4", "1/4"]));
}

#[test]
fn boundary_construction_matches_ind_poly() {
    let s = Scratch::new("boundary");
    let edge = s.file("edge.json", r#"{"m":2,"n":1,"edges":[[1,1],[2,1]]}"#);
    let v = run_json(&["construct", "--graph", p(&edge), "--r", "1/4,1/4", "--mode", "boundary", "--seed", "2"], 0);
    assert_eq!(v["report"]["kernel_relative_dim"], json!("1/2"));
    let g = s.file("c4.json", C4);
    let v = run_json(&["construct", "--graph", p(&g), "--r", "1/4,1/4,1/4,1/4", "--mode", "span", "--seed", "2"], 1);
    assert_eq!(error_code(&v), "domain_error");
}

#[test]
fn construction_is_deterministic() {
    let s = Scratch::new("det");
    let g = s.file("c4.json", C4);
    let (a, b) = (s.path("a.json"), s.path("b.json"));
    for out in [&a, &b] {
        run_json(&["construct", "--graph", p(&g), "--r", "1/3,1/3,1/4,1/4", "--mode", "span", "--seed", "11", "--out", p(out)], 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let first = lll(&["verify", "--instance", p(&a)]);
    let second = lll(&["verify", "--instance", p(&a)]);
    assert_eq!(first.stdout, second.stdout);
    let t1 = lll(&["lattice-table"]);
    let t2 = lll(&["lattice-table"]);
    assert_eq!(t1.stdout, t2.stdout);
}

#[test]
fn gap_commands() {
    assert_eq!(run_json(&["tau", "--d", "2", "--l", "1", "--p", "3/5", "--q", "1/10"], 0), json!("3/80"));
    assert_eq!(run_json(&["transfer", "--kind", "bound", "--p", "3/5", "--q1", "1/10", "--layers", "2"], 0), json!("3/80"));
    let v = run_json(&["gap-formula", "--variant", "degree-free", "--delta", "4", "--l", "3", "--p", "1/2"], 0);
    assert_eq!(v, json!("1/200"));

    let rows = run_json(&["lattice-table"], 0);
    let rows = rows.as_array().unwrap();
    let printed = [5.943e-8, 1.211e-7, 6.199e-8, 9.533e-10];
    assert_eq!(rows.len(), 4);
    for (row, want) in rows.iter().zip(printed) {
        let got: f64 = row["lower_bound_on_gap"].as_str().unwrap().parse().unwrap();
        assert!((got - want).abs() / want < 5e-3, "{row}");
    }
    let text = lll(&["lattice-table", "--format", "text"]);
    assert_eq!(String::from_utf8(text.stdout).unwrap().lines().count(), 5);

    let s = Scratch::new("transfer");
    let g = s.file("c4.json", C4);
    let v = run_json(&["transfer", "--kind", "element", "--graph", p(&g), "--p", "1/3,1/3,1/4,1/4", "--i", "1", "--j", "2", "--q", "1/10"], 0);
    assert_eq!(v["p_prime"], json!(["8/15", "7/30", "1/4", "1/4"]));
    assert_eq!(v["beyond_after"], json!(true));
}

#[test]
fn reductions_and_gap_decision() {
    let s = Scratch::new("reduce");
    let g = s.file("c4.json", C4);
    assert_eq!(run_json(&["gap-decision", "--graph", p(&g)], 0)["verdict"], json!("gapful"));
    let tree = s.file("tree.json", r#"{"m":2,"n":3,"edges":[[1,1],[1,2],[2,2],[2,3]]}"#);
    assert_eq!(run_json(&["gap-decision", "--graph", p(&tree)], 0)["verdict"], json!("gapless"));

    let v = run_json(&["reduce", "--graph", p(&tree), "--core"], 0);
    assert_eq!(v["graph"], json!({"m": 1, "n": 1, "edges": [[1, 1]]}));

    let v = run_json(&["reduce", "--graph", p(&g), "--op", "duplicate_l_vertex", "--i", "2"], 0);
    assert_eq!(v["graph"]["m"], json!(5));
    let v = run_json(&["reduce", "--graph", p(&g), "--op", "delete_edge", "--i", "1", "--j", "1"], 2);
    assert_eq!(error_code(&v), "invalid_input");
}

#[test]
fn extremal_and_events() {
    let s = Scratch::new("events");
    let g = s.file("c4.json", C4);
    let v = run_json(&["extremal", "--graph", p(&g), "--p", "1/5,1/5,1/5,1/5"], 0);
    assert_eq!(v["ind_poly"], json!("7/25"));
    assert_eq!(v["avoidance"], json!("7/25"));
    assert_eq!(v["masses"][0], json!({"set": [], "mass": "7/25"}));

    let sys = s.file(
        "sys.json",
        r#"{"variables":[{"domain":2,"masses":["1/2","1/2"]},{"domain":2,"masses":["1/3","2/3"]}],
            "events":[{"vars":[1],"assignments":[[1]]},{"vars":[1,2],"assignments":[[0,1]]}]}"#,
    );
    let v = run_json(&["events-check", "--system", p(&sys), "--plan", "1:2"], 0);
    assert_eq!(v["standard"], json!(true));
    assert_eq!(v["cutting"]["passed"], json!(true));

    // The cut system is itself a valid system file.
    let cut = s.file("cut.json", &v["cut_system"].to_string());
    let again = run_json(&["events-check", "--system", p(&cut)], 0);
    assert_eq!(again["events"], json!(2));

    let v = run_json(&["events-check", "--system", p(&sys), "--plan", "1:1"], 2);
    assert_eq!(error_code(&v), "invalid_input");
}

#[test]
fn errors_and_exit_codes() {
    let s = Scratch::new("errors");
    let g = s.file("c4.json", C4);
    let v = run_json(&["indpoly", "--graph", p(&s.path("missing.json")), "--r", "1"], 2);
    assert_eq!(error_code(&v), "parse_error");
    let bad = s.file("bad.json", "{not json");
    assert_eq!(error_code(&run_json(&["indpoly", "--graph", p(&bad), "--r", "1"], 2)), "parse_error");
    assert_eq!(error_code(&run_json(&["indpoly", "--graph", p(&g), "--r", "1/2"], 2)), "invalid_input");
    assert_eq!(error_code(&run_json(&["indpoly", "--graph", p(&g), "--r", "a,b,c,d"], 2)), "parse_error");

    let capped = Command::new(env!("CARGO_BIN_EXE_lll"))
        .args(["shearer", "--graph", p(&g), "--r", "0.1,0.1,0.1,0.1"])
        .env("LLL_MAX_SUBSETS", "3")
        .output()
        .unwrap();
    assert_eq!(capped.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&capped.stdout).unwrap();
    assert_eq!(error_code(&v), "cap_exceeded");

    assert_eq!(lll(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(lll(&["construct", "--graph", p(&g), "--r", "1/3,1/3,1/4,1/4", "--mode", "span"]).status.code(), Some(2));
}

#[test]
fn graph_files_round_trip_through_reduce() {
    let s = Scratch::new("roundtrip");
    let g = s.file("c4.json", C4);
    let v = run_json(&["reduce", "--graph", p(&g), "--op", "duplicate_l_vertex", "--i", "1"], 0);
    let dup = s.file("dup.json", &v["graph"].to_string());
    let v = run_json(&["reduce", "--graph", p(&dup), "--op", "inverse_duplicate_l_vertex", "--i", "5"], 0);
    let original: Value = serde_json::from_str(C4).unwrap();
    let canon = |g: &Value| {
        let mut e: Vec<(u64, u64)> = g["edges"].as_array().unwrap().iter().map(|x| (x[0].as_u64().unwrap(), x[1].as_u64().unwrap())).collect();
        e.sort_unstable();
        (g["m"].clone(), g["n"].clone(), e)
    };
    assert_eq!(canon(&v["graph"]), canon(&original));
}
