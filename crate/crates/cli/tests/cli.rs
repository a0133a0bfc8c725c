use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};
use std::thread::sleep;
use std::time::Duration;

fn examples() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/examples")
}

fn example(name: &str) -> String {
    examples().join(name).display().to_string()
}

fn widget(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_widget")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Buddy with the text between `start` and `end` removed, written to a
/// temporary file.
fn buddy_without(dir: &tempfile::TempDir, start: &str, end: &str) -> String {
    let src = std::fs::read_to_string(example("buddy.wdg")).unwrap();
    let a = src.find(start).unwrap();
    let b = a + src[a..].find(end).unwrap();
    let path = dir.path().join("broken.wdg");
    std::fs::write(&path, format!("{}{}", &src[..a], &src[b..])).unwrap();
    path.display().to_string()
}

#[test]
fn check_accepts_buddy() {
    let o = widget(&["check", &example("buddy.wdg")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn check_names_unhandled_notify() {
    let dir = tempfile::tempdir().unwrap();
    let file = buddy_without(&dir, "notify(addr:str):<Notify + Main>", "move(x:int,y:int):<Main>");
    let o = widget(&["check", &file]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("notify(str)"), "{err}");
    assert!(err.starts_with(&format!("{file}:")), "{err}");
}

#[test]
fn check_names_unhandled_move_in_add() {
    let src = std::fs::read_to_string(example("buddy.wdg")).unwrap();
    let handlers = "      back():<Main> = do { return m };\n      move(x:int,y:int):<Add> = do { return self }";
    assert!(src.contains(handlers));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.wdg");
    std::fs::write(&path, src.replacen(handlers, "      back():<Main> = do { return m }", 1)).unwrap();
    let o = widget(&["check", &path.display().to_string()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("move(int,int)"), "{}", stderr(&o));
}

#[test]
fn check_reports_syntax_errors_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.wdg");
    std::fs::write(&path, "fun main():<Top> = do {\n").unwrap();
    let o = widget(&["check", &path.display().to_string()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with(&format!("{}:2:", path.display())), "{}", stderr(&o));
}

#[test]
fn run_without_input_is_a_usage_error() {
    assert_eq!(widget(&["run"]).status.code(), Some(2));
    assert_eq!(widget(&[]).status.code(), Some(2));
}

#[test]
fn headless_needs_a_script_and_remote_a_port() {
    let file = example("example2.wdg");
    assert_eq!(widget(&["run", &file]).status.code(), Some(2));
    assert_eq!(widget(&["run", &file, "--backend", "remote"]).status.code(), Some(2));
    assert_eq!(widget(&["run", &file, "--backend", "elsewhere", "--script", "x"]).status.code(), Some(2));
}

#[test]
fn headless_run_prints_one_frame_per_event() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.json");
    let o = widget(&[
        "run",
        &example("example2.wdg"),
        "--script",
        &example("example2.script.json"),
        "--trace",
        &trace.display().to_string(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let labels: Vec<&str> = lines.iter().map(|f| f["children"][0]["props"]["label"].as_str().unwrap()).collect();
    assert_eq!(labels, ["PUSHME", "PUSHED", "PUSHME", "PUSHED", "PUSHME"]);
    let written: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(trace).unwrap()).unwrap();
    assert_eq!(written["frames"].as_array().unwrap().len(), 5);
}

#[test]
fn buddy_script_runs() {
    let dir = tempfile::tempdir().unwrap();
    let o = widget(&[
        "run",
        &example("buddy.wdg"),
        "--script",
        &example("buddy.script.json"),
        "--data-dir",
        &dir.path().display().to_string(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("CONTACT: sally@widget.org"));
}

#[test]
fn failing_expectation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("s.json");
    std::fs::write(&script, r#"[{"type":"expect","contains":[{"label":"NOPE"}]}]"#).unwrap();
    let o = widget(&["run", &example("example2.wdg"), "--script", &script.display().to_string()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("expectation failed"), "{}", stderr(&o));
}

#[test]
fn gen_reproduces_the_golden_skeleton() {
    let o = widget(&["gen", &example("buddy-model.json")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), std::fs::read_to_string(example("buddy-skeleton.wdg")).unwrap());

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("app.wdg");
    let o = widget(&["gen", &example("buddy-model.json"), "-o", &out.display().to_string()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(out).unwrap(), stdout(&widget(&["gen", &example("buddy-model.json")])));
}

#[test]
fn gen_reports_model_problems() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    std::fs::write(&path, r#"{"classes":[],"statemachine":{"states":[]}}"#).unwrap();
    let o = widget(&["gen", &path.display().to_string()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no initial state"), "{}", stderr(&o));
}

#[test]
fn version_and_help_succeed() {
    assert_eq!(widget(&["--version"]).status.code(), Some(0));
    assert!(stdout(&widget(&["--help"])).contains("check"));
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

#[test]
fn remote_backend_serves_frames_and_takes_events() {
    let port = free_port();
    let mut child = Command::new(env!("CARGO_BIN_EXE_widget"))
        .args(["run", &example("example2.wdg"), "--backend", "remote", "--port", &port.to_string()])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stream = None;
    for _ in 0..100 {
        match TcpStream::connect(("127.0.0.1", port)) {
            Ok(s) => {
                stream = Some(s);
                break;
            }
            Err(_) => sleep(Duration::from_millis(50)),
        }
    }
    let stream = stream.expect("server did not start");
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut writer = stream;
    let mut frame = || {
        let mut line = String::new();
        reader.read_line(&mut line).unwrap();
        serde_json::from_str::<serde_json::Value>(&line).unwrap()
    };
    let first = frame();
    assert_eq!(first["type"], "display");
    let button = &first["root"]["children"][0];
    assert_eq!(button["props"]["label"], "PUSHME");
    let id = button["id"].as_u64().unwrap();
    writeln!(writer, r#"{{"type":"event","target":{id},"name":"push","args":[{id}]}}"#).unwrap();
    let second = frame();
    assert_eq!(second["root"]["children"][0]["props"]["label"], "PUSHED");
    writer.shutdown(std::net::Shutdown::Both).unwrap();
    let status = child.wait().unwrap();
    assert_eq!(status.code(), Some(0));
}
