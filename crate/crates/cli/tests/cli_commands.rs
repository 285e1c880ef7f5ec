use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn abbrev(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abbrev")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = abbrev(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const CORPUS: &str = "гл\t2000\t50\t10\nгл .\t2000\t48\t9\nгл\t2001\t50\t10\nгл .\t2001\t49\t9\n\
дом\t2000\t80\t20\nдом .\t2000\t4\t2\nдом\t2001\t90\t20\nдом .\t2001\t5\t3\n";

#[test]
fn ingest_without_inputs_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = abbrev(&["ingest", "-o", s(&dir.path().join("agg.json"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nothing to ingest"));
    let out = abbrev(&[
        "ingest",
        "-o",
        s(&dir.path().join("agg.json")),
        s(&dir.path().join("missing.tsv")),
    ]);
    assert!(!out.status.success());
}

#[test]
fn corrupt_line_is_skipped_and_counted() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.tsv");
    fs::write(&input, format!("{CORPUS}гл\t2002\tmany\t1\n")).unwrap();
    let out = ok(&["ingest", "-o", s(&dir.path().join("agg.json")), s(&input)]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("1 skipped"));
    let out = abbrev(&[
        "ingest",
        "--abort-on-error",
        "-o",
        s(&dir.path().join("b.json")),
        s(&input),
    ]);
    assert!(!out.status.success());
}

#[test]
fn two_shards_build_like_one_file() {
    let dir = tempfile::tempdir().unwrap();
    let lines: Vec<&str> = CORPUS.lines().collect();
    let (a, b, whole) = (
        dir.path().join("a.tsv"),
        dir.path().join("b.tsv"),
        dir.path().join("all.tsv"),
    );
    fs::write(&a, lines[..3].join("\n") + "\n").unwrap();
    fs::write(&b, lines[3..].join("\n") + "\n").unwrap();
    fs::write(&whole, CORPUS).unwrap();
    let (agg2, agg1) = (dir.path().join("agg2.json"), dir.path().join("agg1.json"));
    ok(&["ingest", "-o", s(&agg2), s(&a), s(&b)]);
    ok(&["ingest", "-o", s(&agg1), s(&whole)]);
    let d2 = ok(&["build", s(&agg2), "--min-usage", "1", "--min-volumes", "1"]).stdout;
    let d1 = ok(&["build", s(&agg1), "--min-usage", "1", "--min-volumes", "1"]).stdout;
    assert_eq!(d1, d2);
    let text = String::from_utf8(d1).unwrap();
    assert!(text.lines().any(|l| l.starts_with("гл\t")));
    assert!(!text.lines().any(|l| l.starts_with("дом\t")));
}

#[test]
fn empty_aggregate_gives_empty_dictionary() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("empty.tsv");
    fs::write(&input, "").unwrap();
    let agg = dir.path().join("agg.json");
    ok(&["ingest", "-o", s(&agg), s(&input)]);
    let list = dir.path().join("d.txt");
    let out = ok(&["build", s(&agg), "--list", s(&list)]);
    assert_eq!(fs::read_to_string(&list).unwrap(), "");
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("0 entries"));
}

#[test]
fn config_file_values_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.tsv");
    fs::write(&input, CORPUS).unwrap();
    let agg = dir.path().join("agg.json");
    let config = dir.path().join("abbrev.toml");
    fs::write(
        &config,
        format!(
            "[ingest]\nunigrams = [\"{}\"]\noutput = \"{}\"\n\n[build]\nmin_usage = 1\nmin_volumes = 1\nmethod = \"lrt\"\n",
            s(&input),
            s(&agg)
        ),
    )
    .unwrap();
    ok(&["--config", s(&config), "ingest"]);
    let from_config = String::from_utf8(ok(&["--config", s(&config), "build", s(&agg)]).stdout).unwrap();
    assert!(from_config.contains("гл\t"));
    assert!(from_config.contains("\tlrt\t"));
    let overridden =
        String::from_utf8(ok(&["--config", s(&config), "build", s(&agg), "--min-usage", "1000"]).stdout).unwrap();
    assert_eq!(overridden.lines().filter(|l| !l.starts_with('#')).count(), 0);
    fs::write(&config, "[build]\nbogus = 1\n").unwrap();
    assert!(!abbrev(&["--config", s(&config), "build", s(&agg)]).status.success());
}

#[test]
fn stats_requires_dictionary_for_entry_reports() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.tsv");
    fs::write(&input, CORPUS).unwrap();
    let agg = dir.path().join("agg.json");
    ok(&["ingest", "-o", s(&agg), s(&input)]);
    let out = abbrev(&["stats", s(&agg), "--out-dir", s(&dir.path().join("r"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--dictionary"));
    let seeds_a = dir.path().join("a.txt");
    let seeds_c = dir.path().join("c.txt");
    fs::write(&seeds_a, "гл\n").unwrap();
    fs::write(&seeds_c, "дом\n").unwrap();
    let r = dir.path().join("r");
    ok(&[
        "stats",
        s(&agg),
        "--reports",
        "p-series",
        "--seed-abbrevs",
        s(&seeds_a),
        "--seed-commons",
        s(&seeds_c),
        "--out-dir",
        s(&r),
    ]);
    let series = fs::read_to_string(r.join("p-series.tsv")).unwrap();
    assert!(series.starts_with("# year\tp0\tp1\n2000\t0.05\t0.96\n"), "{series}");
}

#[test]
fn segment_modes() {
    let dir = tempfile::tempdir().unwrap();
    let dict = dir.path().join("d.txt");
    fs::write(&dict, "гл\n").unwrap();
    let text = dir.path().join("t.txt");
    fs::write(&text, "Смотри гл. вторая часть. Он пришел.").unwrap();
    let dict_out = String::from_utf8(ok(&["segment", s(&text), "--dictionary", s(&dict)]).stdout).unwrap();
    assert_eq!(dict_out, "Смотри гл. вторая часть.\nОн пришел.\n");
    let base = String::from_utf8(ok(&["segment", "--baseline", s(&text)]).stdout).unwrap();
    assert_eq!(base.lines().count(), 2);
    let spans: serde_json::Value =
        serde_json::from_slice(&ok(&["segment", s(&text), "--dictionary", s(&dict), "--spans"]).stdout).unwrap();
    assert_eq!(spans["sentences"].as_array().unwrap().len(), 2);
    assert!(spans["tokens"]
        .as_array()
        .unwrap()
        .iter()
        .any(|t| t["text"] == "гл." && t["kind"] == "abbreviation-with-period"));
    fs::write(&dict, "гл\nдва слова\n").unwrap();
    let out = abbrev(&["segment", s(&text), "--dictionary", s(&dict)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn params_reports_operating_point() {
    let out = ok(&["params"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["p0"], 0.068);
    assert_eq!(v["operating_point"]["min_usage"], 7);
    assert!(!abbrev(&["params", "--p0", "0.9", "--p1", "0.1"]).status.success());
}

#[test]
fn help_documents_defaults() {
    let build = String::from_utf8(ok(&["build", "--help"]).stdout).unwrap();
    for default in ["1990-2008", "0.9", "0.068", "0.955", "40"] {
        assert!(build.contains(default), "build --help lacks {default}");
    }
    let stats = String::from_utf8(ok(&["stats", "--help"]).stdout).unwrap();
    assert!(stats.contains("300") && stats.contains("1940-2008"));
}
