mod common;

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::thread;

use common::{fixture, program};
use widget_core::harness::server::{serve, Outbound};
use widget_core::harness::RunOptions;

fn read_frame(reader: &mut BufReader<TcpStream>) -> Option<Outbound> {
    let mut line = String::new();
    match reader.read_line(&mut line).unwrap() {
        0 => None,
        _ => Some(serde_json::from_str(&line).unwrap()),
    }
}

fn root_label(frame: &Outbound) -> String {
    match frame {
        Outbound::Display { root: Some(root) } => root.children[0].prop_str("label").unwrap().to_string(),
        other => panic!("not a display frame: {other:?}"),
    }
}

#[test]
fn remote_session_displays_takes_events_and_closes_on_bad_input() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let data_dir = dir.path().to_path_buf();
    let server = thread::spawn(move || {
        let opts = RunOptions { data_dir, ..RunOptions::default() };
        serve(&listener, &program("example2.wdg"), &opts, &[]).map(|t| t.frames.len()).map_err(|e| e.to_string())
    });

    let stream = TcpStream::connect(addr).unwrap();
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut writer = stream;

    let first = read_frame(&mut reader).unwrap();
    assert_eq!(root_label(&first), "PUSHME");
    let Outbound::Display { root: Some(root) } = &first else { unreachable!() };
    let id = root.children[0].id;

    writeln!(writer, r#"{{"type":"event","target":{id},"name":"push","args":[{id}]}}"#).unwrap();
    assert_eq!(root_label(&read_frame(&mut reader).unwrap()), "PUSHED");

    writeln!(writer, "{{\"type\":\"event\"").unwrap();
    match read_frame(&mut reader).unwrap() {
        Outbound::Error { message } => assert!(message.contains("malformed"), "{message}"),
        other => panic!("expected an error, got {other:?}"),
    }
    assert!(read_frame(&mut reader).is_none());
    assert_eq!(server.join().unwrap(), Ok(2));
}

#[test]
fn unchecked_program_is_refused_before_listening_for_events() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let src = fixture("buddy.wdg").replace("notify(addr:str):<Notify + Main>", "notify(addr:int):<Notify + Main>");
    let p = widget_core::syntax::parse_program(&src).unwrap();
    let err = serve(&listener, &p, &RunOptions::default(), &[]).unwrap_err();
    assert!(matches!(err, widget_core::harness::HarnessError::Check(_)), "{err}");
}
