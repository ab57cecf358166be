use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reckon_cli::artifact::{load_model, save_model, ArtifactError};
use reckon_core::corpus::PreprocessConfig;
use reckon_core::langmodel::{LmConfig, LmModel, LmVocabulary, PAD, UNK};

const CORPUS: &str = "id,dynamics,consequence
1,L'operaio cade dalla scala durante la pulizia,frattura del polso
2,Il lavoratore cade dalla scala in magazzino,frattura della gamba
3,Taglio alla mano con il coltello,ferita alla mano
4,Taglio al dito con la lama,ferita al dito
5,Urto della testa contro la trave,trauma cranico
6,Urto contro il carrello in reparto,contusione
7,ND,ND
8,Scivola sul pavimento bagnato e cade,distorsione caviglia
";

fn reckon(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_reckon")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn corpus(dir: &Path) -> String {
    let p = dir.join("corpus.csv");
    fs::write(&p, CORPUS).unwrap();
    p.display().to_string()
}

fn s(p: &Path) -> String {
    p.display().to_string()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus(dir.path());
    let out = s(&dir.path().join("out"));
    let (code, stdout, _) = reckon(&["mine-rules", "--corpus", &c, "--minsupp", "0.2", "--mincnf", "0.6", "--output-dir", &out]);
    assert_eq!(code, 0);
    assert!(stdout.starts_with("mine-rules:"));
    assert!(Path::new(&out).join("rules.csv").exists());
    assert!(Path::new(&out).join("rules.dot").exists());

    let missing = s(&dir.path().join("nope.csv"));
    let (code, _, err) = reckon(&["mine-rules", "--corpus", &missing, "--output-dir", &out]);
    assert_eq!(code, 2);
    assert!(err.contains(&missing), "{err}");

    assert_eq!(reckon(&["frobnicate"]).0, 1);
    assert_eq!(reckon(&["mine-rules", "--corpus", &c, "--bogus"]).0, 1);
    assert_eq!(reckon(&["mine-rules", "--output-dir", &out]).0, 1);
    assert_eq!(reckon(&["mine-rules", "--corpus", &c, "--minsupp", "2"]).0, 1);
    assert_eq!(reckon(&["cluster-tfidf", "--corpus", &c, "--metric", "manhattan"]).0, 1);
    assert_eq!(reckon(&["predict", "--help"]).0, 0);
    assert_eq!(reckon(&["--help"]).0, 0);
    // k larger than the corpus is a property of the data
    assert_eq!(reckon(&["cluster-tfidf", "--corpus", &c, "--k", "30", "--output-dir", &out]).0, 2);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus(dir.path());
    let cfg = dir.path().join("reckon.conf");
    fs::write(&cfg, format!("paths.corpus = {c}\nclustering.k = 2\nclustering.metric = euclidean\n")).unwrap();
    let out = dir.path().join("out");
    let (code, _, err) = reckon(&["cluster-tfidf", "--config", &s(&cfg), "--output-dir", &s(&out)]);
    assert_eq!(code, 0, "{err}");
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("clusters.json")).unwrap()).unwrap();
    assert_eq!(report["k"], 2);
    assert_eq!(report["metric"], "euclidean");

    let (code, _, _) = reckon(&["cluster-tfidf", "--config", &s(&cfg), "--k", "3", "--output-dir", &s(&out)]);
    assert_eq!(code, 0);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("clusters.json")).unwrap()).unwrap();
    assert_eq!(report["k"], 3);

    fs::write(&cfg, "clustering.nonsense = 1\n").unwrap();
    assert_eq!(reckon(&["cluster-tfidf", "--config", &s(&cfg)]).0, 1);
}

fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus(dir.path());
    let run_all = |out: &Path| {
        let o = s(out);
        let lm = [
            "train-lm", "--corpus", &c, "--epochs", "5", "--vocab-size", "40", "--embed-dim", "4", "--recurrent-units", "3",
            "--dense-units", "4", "--seq-len", "5", "--batch-size", "3", "--output-dir", &o, "--seed", "9",
        ];
        for args in [
            vec!["preprocess", "--corpus", &c, "--output-dir", &o],
            vec!["mine-rules", "--corpus", &c, "--minsupp", "0.2", "--output-dir", &o],
            vec!["cluster-tfidf", "--corpus", &c, "--sweep", "--k-max", "5", "--output-dir", &o],
            lm.to_vec(),
            vec!["predict", "--text", "cade dalla scala", "--output-dir", &o],
        ] {
            let (code, _, err) = reckon(&args);
            assert_eq!(code, 0, "{args:?}: {err}");
        }
        snapshot(out)
    };
    let a = run_all(&dir.path().join("a"));
    let b = run_all(&dir.path().join("b"));
    assert!(a.len() >= 10);
    assert_eq!(a, b);
}

fn small_model() -> LmModel {
    let config = LmConfig {
        vocab_size: 8,
        embed_dim: 3,
        recurrent_units: 2,
        dense_units: 3,
        seq_len: 4,
        ..LmConfig::default()
    };
    let tokens = [PAD, UNK, "cade", "scala", "frattura", "ferita"].map(String::from).to_vec();
    let vocab = LmVocabulary::from_tokens(tokens).unwrap();
    LmModel::new(config, vocab, &mut ChaCha8Rng::seed_from_u64(4)).unwrap()
}

#[test]
fn artifact_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let model = small_model();
    let pre = PreprocessConfig::default();
    save_model(&model, &pre, dir.path()).unwrap();
    let (loaded, pre2) = load_model(dir.path()).unwrap();
    assert_eq!(loaded.params, model.params);
    assert_eq!(loaded.vocab, model.vocab);
    assert_eq!(loaded.config, model.config);
    assert_eq!(pre2.sorted_stopwords(), pre.sorted_stopwords());
    for ids in [[2, 3, 0, 0], [5, 1, 4, 2]] {
        assert_eq!(loaded.forward_eval(&ids).unwrap(), model.forward_eval(&ids).unwrap());
    }
}

#[test]
fn corrupted_blob_fails_checksum() {
    let dir = tempfile::tempdir().unwrap();
    save_model(&small_model(), &PreprocessConfig::default(), dir.path()).unwrap();
    let blob = dir.path().join("param.output.b.f32");
    let mut bytes = fs::read(&blob).unwrap();
    bytes[0] ^= 0x40;
    fs::write(&blob, bytes).unwrap();
    assert!(matches!(load_model(dir.path()), Err(ArtifactError::Checksum { .. })));
}

#[test]
fn old_version_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    save_model(&small_model(), &PreprocessConfig::default(), dir.path()).unwrap();
    let manifest = dir.path().join("manifest.json");
    let text = fs::read_to_string(&manifest).unwrap().replace("\"lm-v1\"", "\"lm-v0\"");
    fs::write(&manifest, text).unwrap();
    let err = load_model(dir.path()).unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, ArtifactError::Version { .. }));
    assert!(msg.contains("lm-v0") && msg.contains("lm-v1"), "{msg}");
}

#[test]
fn saving_twice_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let m = small_model();
    save_model(&m, &PreprocessConfig::default(), &dir.path().join("a")).unwrap();
    save_model(&m, &PreprocessConfig::default(), &dir.path().join("b")).unwrap();
    assert_eq!(snapshot(&dir.path().join("a")), snapshot(&dir.path().join("b")));
}
