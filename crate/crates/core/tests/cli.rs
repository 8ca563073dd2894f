use std::io::Write;
use std::process::{Command, Output};

fn bf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_basisforge")).args(args).env_remove("BASISFORGE_MAX_BITS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn eval_prints_values() {
    assert_eq!(stdout(&bf(&["eval", "x % 0", "-x", "7"])), "7\n");
    assert_eq!(stdout(&bf(&["eval", "2^(x+x) % (2^x + x)", "-x", "3"])), "9\n");
    assert_eq!(stdout(&bf(&["eval", "pair(1,2)"])), "7\n");
    assert_eq!(stdout(&bf(&["eval", "g(4, 3)"])), "8\n");
}

#[test]
fn exit_codes() {
    assert_eq!(bf(&["eval", "x + "]).status.code(), Some(1));
    assert_eq!(bf(&["eval", "2^2^2^2^x", "-x", "3"]).status.code(), Some(2));
    assert_eq!(bf(&["lower", "L(x)"]).status.code(), Some(3));
    assert_eq!(bf(&["certify", "x + 1", "--lemma", "add-mod", "--range", "0..10"]).status.code(), Some(0));
    assert_eq!(bf(&["--max-bits", "100", "certify", "2^x % (x % 7)", "--lemma", "mod-exp"]).status.code(), Some(0));
}

#[test]
fn max_bits_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_basisforge"))
        .args(["eval", "2^x", "-x", "40"])
        .env("BASISFORGE_MAX_BITS", "16")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn lower_and_verify() {
    let o = bf(&["lower", "x -. y"]);
    assert_eq!(stdout(&o).lines().next(), Some("(2^(x + y) + x) % (2^(x + y) + y) % (2^(x + y) + x)"));
    let o = bf(&["lower", "x * y", "--verify", "0..6"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().last().unwrap().starts_with("PASS"));
    let o = bf(&["lower", "sq(x)", "--trace-json"]);
    assert!(stdout(&o).contains("{\"rule\":\"square\",\"position\":[]"));
}

#[test]
fn terms_from_a_file() {
    let dir = std::env::temp_dir().join(format!("basisforge-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("terms.txt");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "# conventions\nx / 0\nx % 0  # keeps x\n\nx -. 9").unwrap();
    let o = bf(&["eval", "--file", path.to_str().unwrap(), "-x", "5"]);
    assert_eq!(stdout(&o), "0\n5\n0\n");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn refute_json_is_byte_identical_across_workers() {
    let run = |w: &str| stdout(&bf(&["--format", "json", "--workers", w, "refute", "x + y", "--sig", "mod,exp2", "--size", "9", "--consts", "3"]));
    let a = run("1");
    assert_eq!(a, run("4"));
    let v: serde_json::Value = serde_json::from_str(a.trim()).unwrap();
    assert_eq!(v["outcome"], "NotFoundUpToBound");
    assert_eq!(v["config"]["command"], "refute");
}

#[test]
fn bases_subcommands() {
    assert!(stdout(&bf(&["bases", "mod2-identity", "--range", "0..64"])).starts_with("PASS"));
    assert_eq!(stdout(&bf(&["bases", "lift", "2^x"])), "[2^L(x) | R(x)]\n");
    let o = bf(&["bases", "compile-unary", "2^x % x"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let o = bf(&["bases", "h", "x + 2", "--pure", "--verify", "0..5"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let o = bf(&["bases", "g", "-k", "3", "--audit", "500"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 2);
}
