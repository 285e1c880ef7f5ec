use std::io::Write;
use std::path::PathBuf;

use abbrev_core::ingest::{ingest_files, Aggregate, ErrorPolicy, IngestConfig, NgramRecord};
use abbrev_core::synth::{generate_ngrams, SynthSpec};
use flate2::write::GzEncoder;
use flate2::Compression;
use proptest::prelude::*;

fn line() -> impl Strategy<Value = String> {
    let word = prop::sample::select(vec!["гл", "др", "дом", "Word", "т", "x1", ""]);
    let second = prop::sample::select(vec![None, Some("."), Some(","), Some("и")]);
    (word, second, 1985i32..2012, 0u64..60, 0u64..5, any::<bool>()).prop_map(|(w, s, year, m, v, corrupt)| {
        if corrupt && m % 7 == 0 {
            return format!("{w}\t{year}\tnot-a-number\t1");
        }
        let ngram = match s {
            Some(s) => format!("{w} {s}"),
            None => w.to_string(),
        };
        format!("{ngram}\t{year}\t{}\t{}", m + 1, v.min(m) + 1)
    })
}

fn aggregate(lines: &[String]) -> Aggregate {
    let mut agg = Aggregate::new(IngestConfig::default());
    let text = lines.join("\n");
    agg.ingest_reader(text.as_bytes(), ErrorPolicy::Skip).unwrap();
    agg
}

fn merged(a: &Aggregate, b: &Aggregate) -> Aggregate {
    a.clone().merge(b.clone()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn merge_is_a_commutative_monoid(
        a in prop::collection::vec(line(), 0..40),
        b in prop::collection::vec(line(), 0..40),
        c in prop::collection::vec(line(), 0..40),
    ) {
        let (x, y, z) = (aggregate(&a), aggregate(&b), aggregate(&c));
        let empty = Aggregate::new(IngestConfig::default());
        prop_assert_eq!(merged(&x, &y), merged(&y, &x));
        prop_assert_eq!(merged(&merged(&x, &y), &z), merged(&x, &merged(&y, &z)));
        prop_assert_eq!(merged(&x, &empty), x.clone());
        let mut all = a.clone();
        all.extend(b.iter().cloned());
        all.extend(c.iter().cloned());
        prop_assert_eq!(merged(&merged(&x, &y), &z), aggregate(&all));
    }
}

fn write_shards(dir: &std::path::Path, records: &[NgramRecord], shards: usize, gz: bool) -> Vec<PathBuf> {
    (0..shards)
        .map(|i| {
            let body: String = records
                .iter()
                .skip(i)
                .step_by(shards)
                .map(|r| r.render() + "\n")
                .collect();
            let path = dir.join(format!("shard-{i}.tsv{}", if gz { ".gz" } else { "" }));
            let mut file = std::fs::File::create(&path).unwrap();
            if gz {
                let mut enc = GzEncoder::new(file, Compression::fast());
                enc.write_all(body.as_bytes()).unwrap();
                enc.finish().unwrap();
            } else {
                file.write_all(body.as_bytes()).unwrap();
            }
            path
        })
        .collect()
}

#[test]
fn sharded_parallel_equals_single_file() {
    let mut spec = SynthSpec::new(5);
    spec.random_abbrevs = 10;
    spec.random_commons = 60;
    let out = generate_ngrams(&spec).unwrap();
    let records: Vec<NgramRecord> = out.unigrams.iter().chain(&out.bigrams).cloned().collect();
    let dir = tempfile::tempdir().unwrap();
    let single = write_shards(dir.path(), &records, 1, false);
    let sequential = ingest_files(&single, &IngestConfig::default(), ErrorPolicy::Abort, 1).unwrap();

    for (shards, gz) in [(2, false), (4, true), (7, false)] {
        let sub = dir.path().join(format!("{shards}-{gz}"));
        std::fs::create_dir(&sub).unwrap();
        let paths = write_shards(&sub, &records, shards, gz);
        let parallel = ingest_files(&paths, &IngestConfig::default(), ErrorPolicy::Abort, 4).unwrap();
        assert_eq!(parallel.raw_counts(), sequential.raw_counts());
        assert_eq!(parallel.stats(), sequential.stats());
        let window = IngestConfig::default().window;
        assert_eq!(parallel.finalize(&window), sequential.finalize(&window));
        let again = ingest_files(&paths, &IngestConfig::default(), ErrorPolicy::Abort, 1).unwrap();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        parallel.write_json(&mut a).unwrap();
        again.write_json(&mut b).unwrap();
        assert_eq!(a, b, "thread count changed the serialized state");
    }
}

#[test]
fn state_round_trips_through_json() {
    let agg = aggregate(&["гл .\t2000\t9\t3".to_string(), "гл\t2000\t10\t4".to_string()]);
    let mut buf = Vec::new();
    agg.write_json(&mut buf).unwrap();
    assert_eq!(Aggregate::read_json(buf.as_slice()).unwrap(), agg);
}

#[test]
fn skip_policy_counts_corrupt_lines_and_abort_stops() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.tsv");
    std::fs::write(&path, "гл\t2000\t10\t4\nгл\t2000\tten\t4\nгл .\t2000\t9\t3\n").unwrap();
    let agg = ingest_files(
        std::slice::from_ref(&path),
        &IngestConfig::default(),
        ErrorPolicy::Skip,
        1,
    )
    .unwrap();
    assert_eq!(agg.stats().skipped, 1);
    assert_eq!(agg.stats().lines, 3);
    let err = ingest_files(&[path], &IngestConfig::default(), ErrorPolicy::Abort, 1).unwrap_err();
    assert!(err.to_string().contains("line 2"), "{err}");
}
