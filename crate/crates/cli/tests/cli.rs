use std::path::Path;
use std::process::{Command, Output};

use genaug_core::data::{
    write_catalog, write_dataset_manifest, write_embeddings, write_prediction_log, write_zoo, ClassCatalog,
    ClassifierPoint, DatasetEntry, DatasetManifest, EmbeddingRow, EmbeddingSet, Modality, Origin, PredictionLog,
    PredictionRecord, ZooEntry,
};
use serde_json::Value;

fn genaug(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_genaug"))
        .current_dir(dir)
        .env_remove("GENAUG_THREADS")
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) {
    let out = genaug(dir, args);
    assert!(
        out.status.success(),
        "genaug {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn zoo(dir: &Path, name: &str, tag: Option<&str>, points: &[(f64, f64)]) {
    let entries: Vec<ZooEntry> = points
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| ZooEntry {
            shifted_tag: tag.map(str::to_string),
            point: ClassifierPoint::new(format!("zoo{i}"), x, y).unwrap(),
        })
        .collect();
    write_zoo(&entries, &dir.join(name)).unwrap();
}

fn pools(dir: &Path) {
    let catalog = ClassCatalog::from_names("toy", ["cat", "dog", "fox"]).unwrap();
    write_catalog(&catalog, &dir.join("catalog.tsv")).unwrap();
    for (origin, sizes) in [(Origin::Real, [40, 25, 35]), (Origin::Generated, [80, 50, 70])] {
        let entries = sizes
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| {
                (0..n).map(move |i| DatasetEntry {
                    sample_id: format!("{origin}-{c}-{i}"),
                    class_id: c as u32,
                    uri: format!("{origin}/{c}/{i}.png"),
                })
            })
            .collect();
        let manifest = DatasetManifest::new(origin.as_str(), origin, entries).unwrap();
        write_dataset_manifest(&manifest, &dir.join(format!("{origin}.jsonl"))).unwrap();
    }
}

const PLAN_ARGS: &[&str] = &[
    "--catalog",
    "catalog.tsv",
    "--real",
    "real.jsonl",
    "--generated",
    "generated.jsonl",
    "--real-fraction",
    "0.5",
    "--gen-fraction",
    "1.0",
    "--unit-size",
    "100",
    "--seed",
    "17",
];

#[test]
fn er_fit_on_collinear_zoo() {
    let dir = tempfile::tempdir().unwrap();
    zoo(dir.path(), "zoo.jsonl", None, &[(60.0, 40.0), (70.0, 48.0), (80.0, 56.0)]);
    ok(dir.path(), &["er", "fit", "--zoo", "zoo.jsonl", "--out", "fit.json"]);
    let fit: Value = serde_json::from_str(&read(dir.path(), "fit.json")).unwrap();
    assert!((fit["slope"].as_f64().unwrap() - 0.8).abs() < 1e-12);
    assert!((fit["intercept"].as_f64().unwrap() + 8.0).abs() < 1e-10);
    assert_eq!(fit["n_points"], 3);

    zoo(dir.path(), "q.jsonl", None, &[(75.0, 60.0)]);
    ok(dir.path(), &["er", "score", "--fit", "fit.json", "--queries", "q.jsonl", "--out", "er.jsonl"]);
    let scored: Value = serde_json::from_str(read(dir.path(), "er.jsonl").trim()).unwrap();
    // Baseline at 75 is 52.
    assert!((scored["effective_robustness"].as_f64().unwrap() - 8.0).abs() < 1e-9);
}

#[test]
fn filter_run_keeps_the_boundary_sample() {
    let dir = tempfile::tempdir().unwrap();
    let row = |id: &str, v: [f32; 5]| EmbeddingRow {
        sample_id: id.into(),
        class_id: 0,
        vector: v.to_vec(),
    };
    let images = EmbeddingSet::new(
        5,
        "gen",
        Modality::Image,
        [
            row("sim-0.29", [29.0, 95.0, 11.0, 3.0, 2.0]),
            row("sim-0.30", [3.0, 9.0, 3.0, 1.0, 0.0]),
            row("sim-0.31", [31.0, 95.0, 3.0, 2.0, 1.0]),
        ],
    )
    .unwrap();
    let captions = EmbeddingSet::new(5, "captions", Modality::Text, [row("cap", [1.0, 0.0, 0.0, 0.0, 0.0])]).unwrap();
    write_embeddings(&images, &dir.path().join("images.gseb")).unwrap();
    write_embeddings(&captions, &dir.path().join("captions.gseb")).unwrap();

    ok(
        dir.path(),
        &["filter", "run", "--images", "images.gseb", "--captions", "captions.gseb", "--threshold", "0.3", "--out", "report.jsonl"],
    );
    let lines: Vec<Value> = read(dir.path(), "report.jsonl")
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines[0]["kept_count"], 2);
    let status = |id: &str| lines.iter().find(|l| l["sample_id"] == id).unwrap()["status"].clone();
    assert_eq!(status("sim-0.29"), "removed");
    assert_eq!(status("sim-0.30"), "kept");
    assert_eq!(status("sim-0.31"), "kept");
}

#[test]
fn mixture_plan_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    pools(dir.path());
    fn with_out(out: &str) -> Vec<&str> {
        [&["mixture", "plan"][..], PLAN_ARGS, &["--out", out]].concat()
    }
    ok(dir.path(), &with_out("a.jsonl"));
    ok(dir.path(), &with_out("b.jsonl"));
    ok(dir.path(), &[&["--threads", "3"][..], &with_out("c.jsonl")].concat());
    let a = read(dir.path(), "a.jsonl");
    assert_eq!(a, read(dir.path(), "b.jsonl"));
    assert_eq!(a, read(dir.path(), "c.jsonl"));
    // Header plus 50 real and 100 generated entries.
    assert_eq!(a.lines().count(), 151);

    let provenance = read(dir.path(), "provenance.jsonl");
    let records: Vec<Value> = provenance.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(records.len(), 3);
    assert_eq!(records[0]["command"], "mixture plan");
    assert_eq!(records[0]["inputs"], records[1]["inputs"]);
    assert_eq!(records[0]["outputs"][0]["sha256"], records[1]["outputs"][0]["sha256"]);
}

#[test]
fn mixture_grid_ignores_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    pools(dir.path());
    let base = ["mixture", "grid", "--catalog", "catalog.tsv", "--real", "real.jsonl", "--generated", "generated.jsonl", "--unit-size", "100", "--seed", "3"];
    ok(dir.path(), &[&base[..], &["--threads", "1", "--out-dir", "one"]].concat());
    let out = Command::new(env!("CARGO_BIN_EXE_genaug"))
        .current_dir(dir.path())
        .env("GENAUG_THREADS", "8")
        .args([&base[..], &["--out-dir", "eight"]].concat())
        .output()
        .unwrap();
    assert!(out.status.success());
    let mut names: Vec<_> = std::fs::read_dir(dir.path().join("one"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .filter(|n| n != "provenance.jsonl")
        .collect();
    names.sort();
    assert_eq!(names.len(), 9);
    for n in names {
        assert_eq!(
            std::fs::read(dir.path().join("one").join(&n)).unwrap(),
            std::fs::read(dir.path().join("eight").join(&n)).unwrap()
        );
    }
}

#[test]
fn run_file_flags_yield_to_command_line() {
    let dir = tempfile::tempdir().unwrap();
    pools(dir.path());
    std::fs::write(
        dir.path().join("run.toml"),
        "[mixture.plan]\ncatalog = \"catalog.tsv\"\nreal = \"real.jsonl\"\ngenerated = \"generated.jsonl\"\n\
         real_fraction = 0.5\ngen_fraction = 1.0\nunit_size = 100\nseed = 99\nout = \"from-config.jsonl\"\n",
    )
    .unwrap();
    ok(dir.path(), &["mixture", "plan", "--config", "run.toml", "--seed", "17", "--out", "overridden.jsonl"]);
    ok(dir.path(), &[&["mixture", "plan"][..], PLAN_ARGS, &["--out", "direct.jsonl"]].concat());
    assert_eq!(read(dir.path(), "overridden.jsonl"), read(dir.path(), "direct.jsonl"));
    assert!(!dir.path().join("from-config.jsonl").exists());

    ok(dir.path(), &["mixture", "plan", "--config", "run.toml"]);
    assert_ne!(read(dir.path(), "from-config.jsonl"), read(dir.path(), "direct.jsonl"));
}

#[test]
fn errors_exit_nonzero_with_module_text() {
    let dir = tempfile::tempdir().unwrap();
    let missing = genaug(dir.path(), &["er", "fit", "--zoo", "absent.jsonl", "--out", "fit.json"]);
    assert!(!missing.status.success());
    let stderr = String::from_utf8_lossy(&missing.stderr);
    assert!(stderr.contains("absent.jsonl"), "{stderr}");

    let unknown = genaug(dir.path(), &["er", "fit", "--bogus"]);
    assert!(!unknown.status.success());

    zoo(dir.path(), "one.jsonl", None, &[(50.0, 40.0)]);
    let degenerate = genaug(dir.path(), &["er", "fit", "--zoo", "one.jsonl", "--out", "fit.json"]);
    assert!(!degenerate.status.success());
    assert!(!dir.path().join("provenance.jsonl").exists());
}

fn log(dir: &Path, classifier: &str, dataset: &str, pairs: &[(u32, u32)]) {
    let records = pairs
        .iter()
        .enumerate()
        .map(|(i, &(t, p))| PredictionRecord {
            sample_id: format!("{dataset}-{i}"),
            true_class: t,
            pred_class: p,
        })
        .collect();
    let log = PredictionLog::new(classifier, dataset, records).unwrap();
    write_prediction_log(&log, &dir.join(format!("{classifier}.{dataset}.jsonl"))).unwrap();
}

const PIPELINE: &str = r#"
[eval.overlap]
source_catalog = "imagenet.tsv"
target_catalog = "objectnet.tsv"
out = "overlap.tsv"

[eval.run]
source_tag = "imagenet"
include_source = true
overlap = ["overlap.tsv"]

[eval.compare]
rows = ["rows-real.jsonl", "rows-mixed.jsonl"]
zoo = ["zoo.jsonl"]
source_tag = "imagenet"
shifted = ["sketch", "objectnet"]
include_source = true
out = "comparison.json"

[report.table]
comparison = "comparison.json"
format = "csv"

[run]
steps = [
    "eval overlap",
    { command = "eval run", args = { recipe = "real", out = "rows-real.jsonl", predictions = ["real.imagenet.jsonl", "real.sketch.jsonl", "real.objectnet.jsonl"] } },
    { command = "eval run", args = { recipe = "mixed", out = "rows-mixed.jsonl", predictions = ["mixed.imagenet.jsonl", "mixed.sketch.jsonl", "mixed.objectnet.jsonl"] } },
    "eval compare",
    { command = "report table", args = { view = "accuracy", out = "accuracy.csv" } },
    { command = "report table", args = { view = "robustness", out = "robustness.csv" } },
]
"#;

#[test]
fn run_file_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_catalog(&ClassCatalog::from_names("imagenet", ["cat", "Dog", "fox", "owl"]).unwrap(), &d.join("imagenet.tsv")).unwrap();
    write_catalog(&ClassCatalog::from_names("objectnet", ["dog", "owl ", "chair"]).unwrap(), &d.join("objectnet.tsv")).unwrap();

    log(d, "real", "imagenet", &[(0, 0), (1, 1), (2, 2), (3, 0)]);
    log(d, "real", "sketch", &[(0, 0), (1, 1), (2, 1), (3, 0)]);
    // Objectnet ids: dog 0, owl 1 shared; chair 2 outside the overlap.
    log(d, "real", "objectnet", &[(0, 0), (1, 2), (2, 2)]);
    log(d, "mixed", "imagenet", &[(0, 0), (1, 1), (2, 2), (3, 3)]);
    log(d, "mixed", "sketch", &[(0, 0), (1, 1), (2, 2), (3, 0)]);
    log(d, "mixed", "objectnet", &[(0, 0), (1, 1), (2, 0)]);

    let mut entries = Vec::new();
    for (tag, offset) in [("sketch", 30.0), ("objectnet", 40.0)] {
        for x in [60.0, 70.0, 80.0] {
            entries.push(ZooEntry {
                shifted_tag: Some(tag.to_string()),
                point: ClassifierPoint::new(format!("{tag}{x}"), x, x - offset).unwrap(),
            });
        }
    }
    write_zoo(&entries, &d.join("zoo.jsonl")).unwrap();
    std::fs::write(d.join("experiment.toml"), PIPELINE).unwrap();

    ok(d, &["run", "--config", "experiment.toml"]);

    assert_eq!(read(d, "overlap.tsv"), "# source: imagenet\n# target: objectnet\n1\t0\n3\t1\n");
    // real: 75, 50, 50 (chair row excluded); mixed: 100, 75, 100.
    assert_eq!(
        read(d, "accuracy.csv"),
        "Classifier,Recipe,imagenet,sketch,objectnet,Average\n\
         real,real,75.0,50.0,50.0,58.3\n\
         mixed,mixed,100.0,75.0,100.0,91.7\n"
    );
    // Baselines y = x - 30 and y = x - 40.
    assert_eq!(
        read(d, "robustness.csv"),
        "Classifier,Recipe,sketch,objectnet,Average\nreal,real,5.0,15.0,10.0\nmixed,mixed,5.0,40.0,22.5\n"
    );
    assert_eq!(read(d, "provenance.jsonl").lines().count(), 6);

    // Rerunning reproduces every output byte for byte.
    let before = read(d, "comparison.json");
    ok(d, &["run", "--config", "experiment.toml"]);
    assert_eq!(before, read(d, "comparison.json"));
    assert_eq!(read(d, "provenance.jsonl").lines().count(), 12);
}
