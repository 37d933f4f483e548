use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};
use std::time::Duration;

use bib_core::samples::{COHORT_2015_08, COHORT_2015_09};
use bib_core::wire::{encode_request, RequestEnvelope};

struct Env {
    dir: tempfile::TempDir,
}

impl Env {
    fn new() -> Self {
        Env { dir: tempfile::tempdir().unwrap() }
    }

    fn data(&self) -> PathBuf {
        self.dir.path().join("data")
    }

    fn file(&self, name: &str, text: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn cmd(&self) -> Command {
        let mut c = Command::new(env!("CARGO_BIN_EXE_bib-admin"));
        c.env("BIB_DATA_DIR", self.data()).env_remove("BIB_TOKENS").env_remove("BIB_RECOVERY_LOG");
        c
    }

    fn run(&self, args: &[&str]) -> Output {
        self.cmd().args(args).output().unwrap()
    }

    fn import_sample(&self) {
        let f = self.file("a.cohort", COHORT_2015_08);
        assert!(self.run(&["import", f.to_str().unwrap()]).status.success());
    }
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn import_reports_counts_and_refuses_stale() {
    let env = Env::new();
    let f = env.file("a.cohort", COHORT_2015_08);
    let o = env.run(&["import", f.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("3 mothers, 5 children, 40 measurements"), "{}", stdout(&o));

    let o = env.run(&["import", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("stale import"));

    let g = env.file("b.cohort", COHORT_2015_09);
    let o = env.run(&["--format=tsv", "import", g.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o),
        "update_date\tmothers\tchildren\tmeasurements\treplaces\n\
         2015-09-01T00:00:00Z\t3\t4\t33\t2015-08-01T00:00:00Z\n"
    );
}

#[test]
fn import_names_the_violating_line() {
    let env = Env::new();
    let text = COHORT_2015_08.replace("C002,M001", "C002,M999");
    let line = text.lines().position(|l| l == "C002,M999").unwrap() + 1;
    let f = env.file("bad.cohort", &text);
    let o = env.run(&["import", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains(&format!("bad.cohort:{line}:")), "{}", stderr(&o));
    assert!(!env.data().join("snapshot.cohort").exists());

    let text = COHORT_2015_08.replacen("#REFERENCE\n", "#REFERENCE\nzero,50.0\n", 1);
    let line = text.lines().position(|l| l == "zero,50.0").unwrap() + 1;
    let f = env.file("syntax.cohort", &text);
    let o = env.run(&["import", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains(&format!("syntax.cohort:{line}:")), "{}", stderr(&o));
}

#[test]
fn stamp_now_allows_reimport() {
    let env = Env::new();
    env.import_sample();
    let f = env.file("again.cohort", COHORT_2015_08);
    let o = env.run(&["import", "--stamp-now", f.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rewritten = std::fs::read_to_string(&f).unwrap();
    assert!(!rewritten.contains("2015-08-01T00:00:00Z"));
}

#[test]
fn issued_token_authenticates_and_is_never_stored() {
    let env = Env::new();
    env.import_sample();
    let o = env.run(&["token", "issue", "M001"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let first = stdout(&o).trim().to_string();
    assert!(first.starts_with("TK-") && first.len() >= 27);

    let data = bib_service::DataDir::new(env.data());
    let svc = data.open_service().unwrap();
    assert_eq!(svc.authenticate(&first).unwrap().mother_id, "M001");

    let second = stdout(&env.run(&["token", "issue", "M001"])).trim().to_string();
    let svc = data.open_service().unwrap();
    assert!(svc.authenticate(&first).is_err());
    assert_eq!(svc.authenticate(&second).unwrap().mother_id, "M001");

    let o = env.run(&["token", "issue", "MX"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown mother MX"));

    for token in [&first, &second] {
        assert!(!grep_dir(&env.data(), token.as_bytes()), "token found in data dir");
    }
}

fn grep_dir(dir: &Path, needle: &[u8]) -> bool {
    std::fs::read_dir(dir).unwrap().any(|e| {
        let p = e.unwrap().path();
        if p.is_dir() {
            grep_dir(&p, needle)
        } else {
            std::fs::read(&p).unwrap().windows(needle.len()).any(|w| w == needle)
        }
    })
}

#[test]
fn recovery_listing_and_handling() {
    let env = Env::new();
    env.import_sample();
    let o = env.run(&["--format=tsv", "recovery", "list"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "request_id\tstatus\treceived_at\thint\n");

    let queue = bib_service::DataDir::new(env.data()).open_recovery().unwrap();
    queue.submit("lost phone, green case").unwrap();
    queue.submit("tab\there").unwrap();
    drop(queue);

    let ids = |o: &Output| -> Vec<String> {
        stdout(o).lines().skip(1).map(|l| l.split('\t').next().unwrap().to_string()).collect()
    };
    let o = env.run(&["--format=tsv", "recovery", "list", "--pending"]);
    assert_eq!(ids(&o), ["1", "2"]);
    assert!(stdout(&o).contains("tab\\there"));

    let o = env.run(&["--format=tsv", "recovery", "list", "--pending", "--handle", "1"]);
    assert!(o.status.success());
    assert_eq!(ids(&o), ["2"]);
    let o = env.run(&["--format=tsv", "recovery", "list", "--all"]);
    assert_eq!(ids(&o), ["1", "2"]);
    assert!(stdout(&o).contains("1\thandled\t"));

    let o = env.run(&["recovery", "list", "--handle", "9"]);
    assert_eq!(o.status.code(), Some(1));
    let o = env.run(&["recovery", "list"]);
    assert!(stdout(&o).contains("lost phone, green case"));
}

#[test]
fn serve_without_data_fails() {
    let env = Env::new();
    std::fs::create_dir_all(env.data()).unwrap();
    let o = env.run(&["serve", "--port", "0"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("no installed snapshot"), "{}", stderr(&o));
}

fn spawn_server(env: &Env) -> (Child, String) {
    let mut child = env
        .cmd()
        .args(["serve", "--port", "0"])
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let port = line.trim().rsplit(':').next().unwrap().to_string();
    (child, format!("127.0.0.1:{port}"))
}

#[test]
fn serve_answers_and_finishes_in_flight_request_on_sigterm() {
    let env = Env::new();
    env.import_sample();
    let token = stdout(&env.run(&["token", "issue", "M002"])).trim().to_string();
    let (mut child, addr) = spawn_server(&env);

    let agent: ureq::Agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
    let body = agent.get(format!("http://{addr}/healthz")).call().unwrap().body_mut().read_to_string().unwrap();
    assert_eq!(body, "ok");

    // Send headers now and the body after SIGTERM: the request is in flight
    // when shutdown starts.
    let envelope = encode_request(&RequestEnvelope::new("GetChildren").token(&token)).unwrap();
    let mut stream = TcpStream::connect(&addr).unwrap();
    stream.set_read_timeout(Some(Duration::from_secs(10))).unwrap();
    write!(
        stream,
        "POST /soap HTTP/1.1\r\nHost: {addr}\r\nContent-Type: text/xml; charset=utf-8\r\n\
         SOAPAction: \"urn:bib-mobile#GetChildren\"\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        envelope.len()
    )
    .unwrap();
    stream.write_all(&envelope[..10]).unwrap();
    std::thread::sleep(Duration::from_millis(200));
    unsafe {
        libc::kill(child.id() as libc::pid_t, libc::SIGTERM);
    }
    std::thread::sleep(Duration::from_millis(200));
    stream.write_all(&envelope[10..]).unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.contains("C003") && response.contains("C004"));

    let status = child.wait().unwrap();
    assert!(status.success());
}
