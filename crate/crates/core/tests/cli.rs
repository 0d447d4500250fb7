use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use foldwise::xai::{write_tensor, RgbImage, Tensor32};
use tempfile::TempDir;

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new(index_rows: &[(String, &str)], extra_config: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut index = String::from("sample_id,label,image_path\n");
        for (id, label) in index_rows {
            index.push_str(&format!("{id},{label},\n"));
        }
        fs::write(dir.path().join("index.csv"), index).unwrap();
        let config = format!(
            "index = \"index.csv\"\nclasses = [\"normal\", \"viral\"]\nseed = 17\nout = \"out\"\n{extra_config}"
        );
        fs::write(dir.path().join("config.toml"), config).unwrap();
        Fixture { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn out(&self, name: &str) -> PathBuf {
        self.path("out").join(name)
    }

    fn run(&self, cmd: &str, extra: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_foldwise"))
            .arg(cmd)
            .arg("--config")
            .arg(self.path("config.toml"))
            .args(extra)
            .env("FOLDWISE_LOG", "warn")
            .output()
            .unwrap()
    }

    fn out_files(&self) -> Vec<String> {
        let mut names: Vec<String> = match fs::read_dir(self.path("out")) {
            Ok(entries) => entries
                .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
                .collect(),
            Err(_) => Vec::new(),
        };
        names.sort();
        names
    }
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn balanced_index(n_per_class: usize) -> Vec<(String, &'static str)> {
    let mut rows = Vec::new();
    for i in 0..n_per_class {
        rows.push((format!("n{i:03}"), "normal"));
        rows.push((format!("v{i:03}"), "viral"));
    }
    rows
}

fn write_predictions(path: &Path, rows: &[(String, f64)]) {
    let mut s = String::from("sample_id,normal,viral\n");
    for (id, p) in rows {
        s.push_str(&format!("{id},{:?},{:?}\n", 1.0 - p, p));
    }
    fs::write(path, s).unwrap();
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn argmax_labels(path: &Path) -> BTreeMap<String, usize> {
    read_csv(path)
        .into_iter()
        .map(|r| {
            let p: Vec<f64> = r[1..].iter().map(|v| v.parse().unwrap()).collect();
            (r[0].clone(), usize::from(p[1] > p[0]))
        })
        .collect()
}

#[test]
fn split_writes_stratified_files() {
    let fx = Fixture::new(&balanced_index(10), "");
    let out = fx.run("split", &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = read_csv(&fx.out("split.csv"));
    assert_eq!(rows.len(), 20);
    let mut sizes = BTreeMap::new();
    for r in &rows {
        *sizes.entry(r[1].clone()).or_insert(0) += 1;
    }
    // per class 7 / 2 / 1: the 0.5 remainder tie goes to test_models
    assert_eq!(sizes["train"], 14);
    assert_eq!(sizes["test_models"], 4);
    assert_eq!(sizes["test_ensemble"], 2);

    let folds = read_csv(&fx.out("folds.csv"));
    assert_eq!(folds.len(), 14);
    assert!(folds
        .iter()
        .all(|r| ["1", "2", "3"].contains(&r[1].as_str())));
    assert!(stdout(&out).contains("fold1/val"));
}

#[test]
fn split_is_byte_identical_on_rerun() {
    let fx = Fixture::new(&balanced_index(25), "");
    assert!(fx.run("split", &[]).status.success());
    let a = (
        fs::read(fx.out("split.csv")).unwrap(),
        fs::read(fx.out("folds.csv")).unwrap(),
    );
    assert!(fx.run("split", &[]).status.success());
    let b = (
        fs::read(fx.out("split.csv")).unwrap(),
        fs::read(fx.out("folds.csv")).unwrap(),
    );
    assert_eq!(a, b);

    let other = fx.path("other");
    assert!(fx
        .run("split", &["--seed", "18", "--out", other.to_str().unwrap()])
        .status
        .success());
    let c = fs::read(fx.path("other").join("split.csv")).unwrap();
    assert_ne!(a.0, c, "a different seed should move some samples");
}

#[test]
fn split_missing_index_fails_without_output() {
    let fx = Fixture::new(&balanced_index(5), "");
    let out = fx.run("split", &["--index", "nope.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("nope.csv"));
    assert!(fx.out_files().is_empty());
}

#[test]
fn bad_configuration_is_exit_2() {
    let fx = Fixture::new(&balanced_index(5), "k = 1\n");
    assert_eq!(fx.run("split", &[]).status.code(), Some(2));
    let fx = Fixture::new(&balanced_index(5), "unknown_key = 3\n");
    assert_eq!(fx.run("split", &[]).status.code(), Some(2));
    let fx = Fixture::new(&balanced_index(5), "");
    assert_eq!(fx.run("split", &["--k", "1"]).status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_foldwise"))
        .arg("split")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn duplicate_index_id_names_the_line() {
    let fx = Fixture::new(
        &[
            ("a".into(), "normal"),
            ("b".into(), "viral"),
            ("a".into(), "viral"),
        ],
        "",
    );
    let out = fx.run("split", &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 4"), "{}", stderr(&out));
}

/// Index plus a fold1 prediction file realising 188 TP / 193 TN / 8 FP / 14 FN.
fn fold1_fixture() -> Fixture {
    let mut index = Vec::new();
    let mut preds = Vec::new();
    for (n, label, p) in [
        (188, "viral", 0.9),
        (193, "normal", 0.1),
        (8, "normal", 0.7),
        (14, "viral", 0.3),
    ] {
        for _ in 0..n {
            let id = format!("s{:03}", index.len());
            // distinct scores so that the ROC has one point per sample
            let jitter = index.len() as f64 * 1e-4;
            preds.push((
                id.clone(),
                p + if p > 0.5 {
                    -jitter / 10.0
                } else {
                    jitter / 10.0
                },
            ));
            index.push((id, label));
        }
    }
    let fx = Fixture::new(&index, "");
    write_predictions(&fx.path("predictions_fold1_test_models.csv"), &preds);
    fx
}

#[test]
fn evaluate_single_fold_matches_hand_arithmetic() {
    let fx = fold1_fixture();
    let out = fx.run("evaluate", &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(
        stderr(&out).contains("fold 2"),
        "missing fold warning: {}",
        stderr(&out)
    );

    let summary = read_csv(&fx.out("macro_f1_summary.csv"));
    assert_eq!(summary.len(), 1);
    assert_eq!(summary[0][0], "fold1");
    let f1: f64 = summary[0][1].parse().unwrap();
    assert!((f1 - 0.9455).abs() <= 0.0005, "{f1}");

    let counts = fs::read_to_string(fx.out("confusion_counts.csv")).unwrap();
    assert!(counts.contains("fold1,188,193,8,14"), "{counts}");

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(fx.out("report_fold1.json")).unwrap()).unwrap();
    let viral = report["classes"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["class"] == "viral")
        .unwrap();
    assert!((viral["precision"].as_f64().unwrap() - 188.0 / 196.0).abs() < 1e-12);
    assert!((viral["recall"].as_f64().unwrap() - 188.0 / 202.0).abs() < 1e-12);

    // the mean of a single curve is that curve, one point per fpr
    let fold: Vec<(f64, f64)> = read_csv(&fx.out("roc_fold1.csv"))
        .iter()
        .map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap()))
        .collect();
    let mut reduced: Vec<(f64, f64)> = Vec::new();
    for (x, y) in fold {
        match reduced.last_mut() {
            Some(last) if last.0 == x => last.1 = last.1.max(y),
            _ => reduced.push((x, y)),
        }
    }
    let mean: Vec<(f64, f64)> = read_csv(&fx.out("roc_mean_folds.csv"))
        .iter()
        .map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap()))
        .collect();
    assert_eq!(mean, reduced);
    for name in ["roc_fold1.svg", "roc_folds.svg"] {
        assert!(fs::read_to_string(fx.out(name))
            .unwrap()
            .starts_with("<svg"));
    }
}

#[test]
fn evaluate_rejects_bad_row_sum_and_leaves_no_output() {
    let fx = fold1_fixture();
    let text = fs::read_to_string(fx.path("predictions_fold1_test_models.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let mut broken: Vec<String> = lines.iter().map(|s| s.to_string()).collect();
    broken[5] = format!("{},0.5,0.6", broken[5].split(',').next().unwrap());
    fs::write(
        fx.path("predictions_fold2_test_models.csv"),
        broken.join("\n") + "\n",
    )
    .unwrap();
    let out = fx.run("evaluate", &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(
        err.contains("predictions_fold2_test_models.csv") && err.contains("line 6"),
        "{err}"
    );
    assert!(fx.out_files().is_empty(), "{:?}", fx.out_files());
}

#[test]
fn evaluate_without_predictions_fails() {
    let fx = Fixture::new(&balanced_index(3), "");
    assert_eq!(fx.run("evaluate", &[]).status.code(), Some(1));
}

fn separable_fold(ids: &[(String, &str)], shift: f64) -> Vec<(String, f64)> {
    ids.iter()
        .enumerate()
        .map(|(i, (id, label))| {
            let wiggle = (i % 7) as f64 * 0.01 + shift;
            let p = if *label == "viral" {
                0.7 + wiggle
            } else {
                0.25 - wiggle
            };
            (id.clone(), p)
        })
        .collect()
}

#[test]
fn ensemble_trains_forest_and_votes() {
    let models: Vec<(String, &str)> = balanced_index(30);
    let held: Vec<(String, &str)> = (0..20)
        .map(|i| {
            (
                format!("e{i:03}"),
                if i % 2 == 0 { "normal" } else { "viral" },
            )
        })
        .collect();
    let all: Vec<(String, &str)> = models.iter().chain(&held).cloned().collect();
    let fx = Fixture::new(&all, "[rf]\nn_trees = 25\n");
    for f in 1..=3 {
        let shift = f as f64 * 0.02;
        write_predictions(
            &fx.path(&format!("predictions_fold{f}_test_models.csv")),
            &separable_fold(&models, shift),
        );
        write_predictions(
            &fx.path(&format!("predictions_fold{f}_test_ensemble.csv")),
            &separable_fold(&held, shift),
        );
    }
    let out = fx.run("ensemble", &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(
        stdout(&out).contains("random forest (test_ensemble): accuracy 1.0000"),
        "{}",
        stdout(&out)
    );

    let truth: BTreeMap<String, usize> = held
        .iter()
        .map(|(id, l)| (id.clone(), usize::from(*l == "viral")))
        .collect();
    assert_eq!(
        argmax_labels(&fx.out("predictions_rf_test_ensemble.csv")),
        truth
    );
    assert_eq!(
        argmax_labels(&fx.out("predictions_smv_test_ensemble.csv")),
        truth
    );
    let model: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(fx.out("rf_model.json")).unwrap()).unwrap();
    assert_eq!(model["trees"].as_array().unwrap().len(), 25);

    // evaluate then picks the ensemble files up
    let eval = fx.run("evaluate", &[]);
    assert!(eval.status.success(), "{}", stderr(&eval));
    let names: Vec<String> = read_csv(&fx.out("macro_f1_summary.csv"))
        .into_iter()
        .map(|r| r[0].clone())
        .collect();
    assert_eq!(
        names,
        [
            "fold1",
            "fold2",
            "fold3",
            "smv_test_models",
            "smv_test_ensemble",
            "rf_test_ensemble"
        ]
    );

    let before = fs::read(fx.out("rf_model.json")).unwrap();
    assert!(fx.run("ensemble", &[]).status.success());
    assert_eq!(before, fs::read(fx.out("rf_model.json")).unwrap());
}

#[test]
fn ensemble_identical_folds_without_holdout_set() {
    let ids = balanced_index(12);
    let fx = Fixture::new(&ids, "");
    let fold: Vec<(String, f64)> = ids
        .iter()
        .enumerate()
        .map(|(i, (id, _))| (id.clone(), (i % 10) as f64 / 10.0 + 0.05))
        .collect();
    for f in 1..=3 {
        write_predictions(
            &fx.path(&format!("predictions_fold{f}_test_models.csv")),
            &fold,
        );
    }
    let out = fx.run("ensemble", &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(
        stderr(&out).to_lowercase().contains("skipped"),
        "{}",
        stderr(&out)
    );
    assert_eq!(
        argmax_labels(&fx.out("predictions_smv_test_models.csv")),
        argmax_labels(&fx.path("predictions_fold1_test_models.csv"))
    );
    assert!(!fx.out("rf_model.json").exists());
}

#[test]
fn ensemble_single_class_labels_are_degenerate() {
    let models: Vec<(String, &str)> = (0..10).map(|i| (format!("m{i}"), "viral")).collect();
    let held: Vec<(String, &str)> = (0..4).map(|i| (format!("h{i}"), "normal")).collect();
    let all: Vec<(String, &str)> = models.iter().chain(&held).cloned().collect();
    let fx = Fixture::new(&all, "");
    for f in 1..=3 {
        write_predictions(
            &fx.path(&format!("predictions_fold{f}_test_models.csv")),
            &separable_fold(&models, 0.0),
        );
        write_predictions(
            &fx.path(&format!("predictions_fold{f}_test_ensemble.csv")),
            &separable_fold(&held, 0.0),
        );
    }
    let out = fx.run("ensemble", &[]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(fx.out_files().is_empty());
}

#[test]
fn ensemble_misaligned_folds_fail() {
    let ids = balanced_index(4);
    let fx = Fixture::new(&ids, "");
    let fold: Vec<(String, f64)> = ids.iter().map(|(id, _)| (id.clone(), 0.4)).collect();
    write_predictions(&fx.path("predictions_fold1_test_models.csv"), &fold);
    write_predictions(&fx.path("predictions_fold2_test_models.csv"), &fold);
    write_predictions(&fx.path("predictions_fold3_test_models.csv"), &fold[1..]);
    assert_eq!(fx.run("ensemble", &[]).status.code(), Some(1));
}

fn xai_fixture(extra: &str) -> Fixture {
    let fx = Fixture::new(
        &balanced_index(2),
        &format!("[xai]\ntensor_dir = \"tensors\"\nimage_dir = \"images\"\ndump_heatmaps = true\n{extra}"),
    );
    fs::create_dir_all(fx.path("tensors")).unwrap();
    fs::create_dir_all(fx.path("images")).unwrap();
    for id in ["a", "b"] {
        let img = RgbImage::from_fn(16, 12, |x, y| [(x * 15) as u8, (y * 20) as u8, 90]).unwrap();
        img.save_png(&fx.path("images").join(format!("{id}.png")))
            .unwrap();
        let act = Tensor32::new(vec![2, 3, 4], (0..24).map(|v| v as f32 * 0.5).collect()).unwrap();
        let grad = Tensor32::new(
            vec![2, 3, 4],
            (0..24).map(|v| if v < 12 { 1.0 } else { -0.25 }).collect(),
        )
        .unwrap();
        for f in 1..=3 {
            write_tensor(
                &fx.path("tensors").join(format!("{id}_fold{f}.act.tnsr")),
                &act,
            )
            .unwrap();
            write_tensor(
                &fx.path("tensors").join(format!("{id}_fold{f}.grad.tnsr")),
                &grad,
            )
            .unwrap();
        }
    }
    fx
}

#[test]
fn xai_gradcam_and_stub_lime() {
    let fx = xai_fixture(
        "lime_folds = [1]\npredictor = [\"builtin:stub\"]\n[lime]\nn_samples = 60\ngrid_size = 3\n",
    );
    let out = fx.run("xai", &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    for id in ["a", "b"] {
        for tag in ["fold1", "fold2", "fold3", "mean"] {
            let png = image_dims(&fx.out(&format!("{id}.{tag}.gradcam.png")));
            assert_eq!(png, (16, 12));
        }
        // identical folds: the mean equals each fold
        assert_eq!(
            fs::read(fx.out(&format!("{id}.mean.gradcam.tnsr"))).unwrap(),
            fs::read(fx.out(&format!("{id}.fold2.gradcam.tnsr"))).unwrap()
        );
        assert_eq!(
            image_dims(&fx.out(&format!("{id}.fold1.lime.png"))),
            (16, 12)
        );
        let expl: serde_json::Value = serde_json::from_str(
            &fs::read_to_string(fx.out(&format!("{id}.fold1.lime.json"))).unwrap(),
        )
        .unwrap();
        assert_eq!(expl["weights"].as_array().unwrap().len(), 9);
    }
    let first = fs::read(fx.out("a.fold1.lime.json")).unwrap();
    assert!(fx.run("xai", &[]).status.success());
    assert_eq!(first, fs::read(fx.out("a.fold1.lime.json")).unwrap());
}

fn image_dims(path: &Path) -> (usize, usize) {
    let img = RgbImage::load_png(path).unwrap();
    (img.width(), img.height())
}

#[test]
fn xai_skips_image_with_corrupt_tensor() {
    let fx = xai_fixture("");
    fs::write(
        fx.path("tensors").join("b_fold2.grad.tnsr"),
        b"TNSR\x01\x09\x00",
    )
    .unwrap();
    let out = fx.run("xai", &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).contains("b"), "{}", stderr(&out));
    assert!(fx.out("a.mean.gradcam.png").exists());
    assert!(!fx.out("b.mean.gradcam.png").exists());
    assert!(!fx.out("b.fold1.gradcam.png").exists());
}

#[test]
fn xai_fails_when_nothing_succeeds() {
    let fx = xai_fixture("");
    for id in ["a", "b"] {
        fs::remove_file(fx.path("images").join(format!("{id}.png"))).unwrap();
    }
    assert_eq!(fx.run("xai", &[]).status.code(), Some(1));
    assert!(fx.out_files().is_empty());
}

#[cfg(unix)]
fn script(fx: &Fixture, name: &str, body: &str) -> PathBuf {
    let p = fx.path(name);
    fs::write(&p, body).unwrap();
    p
}

#[cfg(unix)]
#[test]
fn xai_external_predictor_protocol() {
    let fx = xai_fixture("");
    let ok = script(
        &fx,
        "predict.sh",
        r#"while [ $# -gt 0 ]; do
  case "$1" in
    --manifest) m="$2"; shift 2;;
    --out) o="$2"; shift 2;;
    --fold) f="$2"; shift 2;;
    *) shift;;
  esac
done
[ "$f" = "2" ] || exit 9
{ echo "sample_id,normal,viral"; tail -n +2 "$m" | cut -d, -f1 | sed 's/$/,0.25,0.75/'; } > "$o"
"#,
    );
    let config = fs::read_to_string(fx.path("config.toml")).unwrap();
    let with_predictor = format!(
        "{config}lime_folds = [2]\npredictor = [\"sh\", \"{}\", \"--fold\", \"{{fold}}\"]\n[lime]\nn_samples = 30\nbatch_size = 7\ngrid_size = 2\n",
        ok.display()
    );
    fs::write(fx.path("config.toml"), &with_predictor).unwrap();
    let out = fx.run("xai", &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    let expl: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(fx.out("a.fold2.lime.json")).unwrap()).unwrap();
    // constant replies: every coefficient vanishes
    assert!(expl["weights"]
        .as_array()
        .unwrap()
        .iter()
        .all(|w| w.as_f64().unwrap().abs() < 1e-9));

    let bad = script(&fx, "fail.sh", "echo boom >&2\nexit 4\n");
    fs::write(
        fx.path("config.toml"),
        with_predictor.replace(ok.to_str().unwrap(), bad.to_str().unwrap()),
    )
    .unwrap();
    fs::remove_dir_all(fx.path("out")).unwrap();
    let out = fx.run("xai", &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(fx.out_files().is_empty());
}
