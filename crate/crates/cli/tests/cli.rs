//! End-to-end behavior of the binary: exit codes, JSON reports, scripted
//! games and file round trips.

use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use cobisim_cli::file::SystemFile;
use serde_json::Value;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn sample(name: &str) -> String {
    root().join("samples").join(name).display().to_string()
}

fn cobisim(args: &[&str]) -> Output {
    cobisim_with_stdin(args, "")
}

fn cobisim_with_stdin(args: &[&str], stdin: &str) -> Output {
    use std::io::Write;
    let mut child = Command::new(env!("CARGO_BIN_EXE_cobisim"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn json_report(args: &[&str]) -> (Value, i32) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let mut all: Vec<&str> = args.to_vec();
    let p = path.display().to_string();
    all.extend(["--quiet", "--json-out", &p]);
    let out = cobisim(&all);
    assert!(out.stdout.is_empty(), "--quiet prints nothing");
    let text = std::fs::read_to_string(&path).expect("report written");
    (serde_json::from_str(&text).unwrap(), out.status.code().unwrap())
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn chain_metric_matches_the_transport_oracle() {
    // fixed point of the Kantorovich lifting computed with an external LP solver
    let oracle = [[0.0, 0.5, 0.625, 0.375], [0.5, 0.0, 0.25, 0.25], [0.625, 0.25, 0.0, 0.5], [0.375, 0.25, 0.5, 0.0]];
    let (v, code) = json_report(&["bisim", &sample("chain.json")]);
    assert_eq!(code, 0);
    assert_eq!(v["converged"], true);
    let m = v["result"]["metric"].as_array().unwrap();
    for (s, row) in oracle.iter().enumerate() {
        for (t, want) in row.iter().enumerate() {
            let got = m[s][t].as_f64().unwrap();
            assert!((got - want).abs() < 1e-6, "d({s},{t}) = {got}, oracle {want}");
        }
    }
}

#[test]
fn lmp_partition_in_json() {
    let (v, code) = json_report(&["bisim", &sample("lmp.json")]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["blocks"], serde_json::json!([["s", "t"], ["u", "v"], ["w"]]));
    assert_eq!(v["chain_length"].as_u64().unwrap(), v["iterations"].as_u64().unwrap() + 1);
}

#[test]
fn overweight_file_exits_2_with_the_state_path() {
    let out = cobisim(&["bisim", &sample("bad_weights.json")]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("next[t].a") && err.contains("7/6"), "{err}");
}

#[test]
fn syntax_errors_carry_a_position() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "broken.json", "{\n  \"states\": [\"a\"],\n  \"functor\": \"idd\"\n}\n");
    let out = cobisim(&["bisim", &f]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn exhausted_iteration_budget_exits_3() {
    let out = cobisim(&["bisim", &sample("chain.json"), "--max-iter", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stdout).contains("not converged"));
}

#[test]
fn oversized_game_is_refused_with_exit_4() {
    let n = 13;
    let states: Vec<String> = (0..n).map(|i| format!("\"q{i}\"")).collect();
    let next: Vec<String> = (0..n).map(|i| format!("{{\"set\": [{{\"id\": \"q{}\"}}]}}", (i + 1) % n)).collect();
    let text = format!(
        r#"{{"states": [{}], "functor": {{"pow": "id"}}, "next": [{}],
            "situation": {{"fiber": "eq_rel", "omega": "two", "connectives": ["top", "and"],
                           "modalities": [{{"name": "dia", "leaf": "diamond"}}]}}}}"#,
        states.join(","),
        next.join(",")
    );
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "ring.json", &text);
    assert_eq!(cobisim(&["bisim", &f]).status.code(), Some(0));
    let out = cobisim(&["game", &f, "--role", "watch"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn check_modes() {
    let (v, code) = json_report(&["check", &sample("lmp.json"), "--mode", "expressivity"]);
    assert_eq!(code, 0);
    assert_eq!(v["verdict"], true);
    assert_eq!(v["exact"], true);
    assert_eq!(v["routes"].as_array().unwrap().len(), 2);

    let (v, code) = json_report(&["check", &sample("chain.json"), "--mode", "expressivity", "--eps", "0.05"]);
    assert_eq!(code, 0);
    assert!(v["gap"].as_f64().unwrap() <= 0.05);

    let out = cobisim(&["check", &sample("chain.json"), "--mode", "expressivity"]);
    assert_eq!(out.status.code(), Some(2), "a metric check needs --eps");

    let (v, code) = json_report(&["check", &sample("kripke_bu.json")]);
    assert_eq!(code, 0);
    assert_eq!(v["verdict"], true);
}

#[test]
fn scripted_spoiler_wins_against_the_engine() {
    // Duplicator cannot answer the first move with ν and falls back to ⊤;
    // the constant observation then leaves no answer at all
    let dir = tempfile::tempdir().unwrap();
    let script = write(dir.path(), "moves.txt", "k = [0, 1, 0, 0]\nk = [1, 1, 1, 1]\n");
    let (v, code) = json_report(&["game", &sample("kripke.json"), "--role", "spoiler", "--script", &script]);
    assert_eq!(code, 0);
    assert_eq!(v["winner"], "spoiler", "{v}");
    assert_eq!(v["outcome"], "duplicator_stuck");
    assert_eq!(v["rounds"], 1);
}

#[test]
fn scripted_duplicator_holding_bisimilarity_survives() {
    // a human Duplicator who always answers with the bisimilarity cannot lose
    let line = "P = blocks {0}{1}{2,3}\n";
    let dir = tempfile::tempdir().unwrap();
    let script = write(dir.path(), "moves.txt", &line.repeat(10));
    let (v, code) = json_report(&[
        "game",
        &sample("kripke.json"),
        "--role",
        "duplicator",
        "--script",
        &script,
        "--start",
        "blocks {0}{1}{2,3}",
    ]);
    assert_eq!(code, 0);
    assert_ne!(v["winner"], "spoiler", "{v}");
}

#[test]
fn game_reads_standard_input_without_a_script() {
    let out = cobisim_with_stdin(&["game", &sample("kripke.json"), "--role", "spoiler"], "quit\n");
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("play abandoned"));
}

#[test]
fn approx_generated_and_from_file() {
    let (v, code) = json_report(&["approx", &sample("lmp.json")]);
    assert_eq!(code, 0);
    assert_eq!(v["approximating"], true);

    // one threshold, and an observation set whose modal images identify
    // everything, while the block union {b, c} separates a from b
    let dir = tempfile::tempdir().unwrap();
    let lmp = write(
        dir.path(),
        "withheld.json",
        r#"{"states": ["a", "b", "c"], "functor": {"lmp": ["a"]},
            "next": [
              {"labeled": {"a": {"dist": [{"to": {"id": "a"}, "p": "1"}]}}},
              {"labeled": {"a": {"dist": [{"to": {"id": "a"}, "p": "1/2"}, {"to": {"id": "b"}, "p": "1/2"}]}}},
              {"labeled": {"a": {"dist": [{"to": {"id": "a"}, "p": "1"}]}}}],
            "situation": {"preset": "cfkp", "thresholds": ["0"]}}"#,
    );
    let set = write(dir.path(), "set.json", r#"[{"label": "T", "values": [1, 1, 1]}, {"label": "k", "values": [1, 0, 0]}]"#);
    let at = format!("@{set}");
    let (v, code) = json_report(&["approx", &lmp, "--set", &at]);
    assert_eq!(code, 1);
    assert_eq!(v["approximating"], false);
    let ce = &v["counterexample"];
    assert_eq!(ce["h"], serde_json::json!([0.0, 1.0, 1.0]));
    assert_eq!(ce["states"], serde_json::json!(["a", "b"]));
    assert_eq!(ce["modality"], "a,0");

    let short = write(dir.path(), "short.json", r#"[{"label": "T", "values": [1, 1]}]"#);
    let at = format!("@{short}");
    assert_eq!(cobisim(&["approx", &sample("lmp.json"), "--set", &at]).status.code(), Some(2));
}

#[test]
fn sampled_metric_approx_is_deterministic() {
    let args = ["approx", &sample("chain.json"), "--depth", "2", "--samples", "200"];
    let a = cobisim(&args);
    let b = cobisim(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(String::from_utf8_lossy(&a.stdout).contains("sampled necessary condition"));
}

#[test]
fn canonical_files_round_trip() {
    for name in ["lmp.json", "chain.json", "kripke_bu.json", "kripke.json"] {
        let sys = SystemFile::read(Path::new(&sample(name))).unwrap().to_system().unwrap();
        let canon = SystemFile::from_system(&sys).unwrap();
        let text = canon.to_json();
        let again = SystemFile::parse(&text).unwrap();
        assert_eq!(again, canon, "{name}");
        assert_eq!(again.to_system().unwrap(), sys, "{name}");
        assert_eq!(SystemFile::from_system(&again.to_system().unwrap()).unwrap().to_json(), text);
    }
}

#[test]
fn canonical_file_gives_the_same_report() {
    let sys = SystemFile::read(Path::new(&sample("chain.json"))).unwrap().to_system().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "canon.json", &SystemFile::from_system(&sys).unwrap().to_json());
    let a = cobisim(&["logic", &sample("chain.json"), "--depth", "2"]);
    let b = cobisim(&["logic", &f, "--depth", "2"]);
    assert_eq!(a.stdout, b.stdout);
}
