use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use place_core::diagram::{bottleneck_single, d_inf};
use place_core::{DiagramPoint, PersistenceDiagram, Site};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

fn place(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_place"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Writes a TU-format dataset. Each graph is `(n_vertices, edges, label)`
/// with 0-based local vertex ids.
type Fixture = (usize, Vec<(usize, usize)>, i64);

fn write_tu(dir: &Path, name: &str, graphs: &[Fixture]) {
    fs::create_dir_all(dir).unwrap();
    let (mut a, mut ind, mut lab) = (String::new(), String::new(), String::new());
    let mut offset = 0;
    for (gi, (n, edges, label)) in graphs.iter().enumerate() {
        for _ in 0..*n {
            ind.push_str(&format!("{}\n", gi + 1));
        }
        for &(u, v) in edges {
            a.push_str(&format!("{}, {}\n", offset + u + 1, offset + v + 1));
            a.push_str(&format!("{}, {}\n", offset + v + 1, offset + u + 1));
        }
        lab.push_str(&format!("{label}\n"));
        offset += n;
    }
    fs::write(dir.join(format!("{name}_A.txt")), a).unwrap();
    fs::write(dir.join(format!("{name}_graph_indicator.txt")), ind).unwrap();
    fs::write(dir.join(format!("{name}_graph_labels.txt")), lab).unwrap();
}

fn path_graph(n: usize) -> Vec<(usize, usize)> {
    (1..n).map(|i| (i - 1, i)).collect()
}

fn star_graph(leaves: usize) -> Vec<(usize, usize)> {
    (1..=leaves).map(|i| (0, i)).collect()
}

fn tiny_dataset(dir: &Path) {
    write_tu(
        dir,
        "TINY",
        &[
            (3, path_graph(3), 1),
            (4, vec![(0, 1), (1, 2), (2, 3), (3, 0)], 1),
            (5, star_graph(4), -1),
            (4, vec![(0, 1), (1, 2), (2, 0), (2, 3)], -1),
        ],
    );
}

/// Paths of growing length against stars with 8 or 9 leaves.
fn separable_dataset(dir: &Path) {
    let mut graphs = Vec::new();
    for k in 0..10 {
        graphs.push((4 + k, path_graph(4 + k), 0));
        graphs.push((9 + k % 2, star_graph(8 + k % 2), 1));
    }
    write_tu(dir, "SEP", &graphs);
}

fn write_diagram_file(path: &Path, diagrams: &[Vec<(f64, f64)>]) {
    let text: String = diagrams
        .iter()
        .map(|d| {
            let pts: Vec<String> = d.iter().map(|(b, e)| format!("[{b},{e}]")).collect();
            format!("{{\"points\":[{}]}}\n", pts.join(","))
        })
        .collect();
    fs::write(path, text).unwrap();
}

fn parse_matrix(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| l.split('\t').skip(1).map(|v| v.parse().unwrap()).collect())
        .collect()
}

/// Bottleneck distance by enumerating every assignment of points to partners
/// or the diagonal; only for a handful of points.
fn brute_bottleneck(a: &[DiagramPoint], b: &[DiagramPoint]) -> f64 {
    fn go(
        i: usize,
        a: &[DiagramPoint],
        b: &[DiagramPoint],
        used: &mut Vec<bool>,
        cur: f64,
        best: &mut f64,
    ) {
        if cur >= *best {
            return;
        }
        if i == a.len() {
            let rest = b
                .iter()
                .zip(used.iter())
                .filter(|(_, u)| !**u)
                .map(|(q, _)| q.diag_cost())
                .fold(0.0, f64::max);
            *best = best.min(cur.max(rest));
            return;
        }
        go(i + 1, a, b, used, cur.max(a[i].diag_cost()), best);
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                go(i + 1, a, b, used, cur.max(d_inf(&a[i], &b[j])), best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(0, a, b, &mut vec![false; b.len()], 0.0, &mut best);
    best
}

#[test]
fn embed_fixture_produces_one_row_per_graph_and_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    tiny_dataset(&data);
    let run = |out: &str| {
        let out = tmp.path().join(out);
        let o = place(&[
            "embed",
            data.to_str().unwrap(),
            "--n-scales",
            "2",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let first = run("a");
    let diagrams = fs::read_to_string(first.join("degree/diagrams.jsonl")).unwrap();
    assert_eq!(diagrams.lines().count(), 4);
    let rows = fs::read_to_string(first.join("degree/embedding.jsonl")).unwrap();
    assert_eq!(rows.lines().count(), 4);
    let tsv = fs::read_to_string(first.join("degree/embedding.tsv")).unwrap();
    assert_eq!(tsv.lines().count(), 5);
    let record: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(first.join("degree/scale_config.json")).unwrap())
            .unwrap();
    let dim = record["total_dim"].as_u64().unwrap() as usize;
    let row: serde_json::Value = serde_json::from_str(rows.lines().next().unwrap()).unwrap();
    assert_eq!(row["row"].as_array().unwrap().len(), dim);
    assert_eq!(
        fs::read_to_string(first.join("degree/grid.tsv"))
            .unwrap()
            .lines()
            .count(),
        dim + 1
    );

    let second = run("b");
    for f in [
        "degree/diagrams.jsonl",
        "degree/embedding.jsonl",
        "degree/embedding.tsv",
        "degree/scale_config.json",
        "embed.tsv",
    ] {
        assert_eq!(
            fs::read(first.join(f)).unwrap(),
            fs::read(second.join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn config_file_is_used_and_flags_override_it() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    tiny_dataset(&data);
    let cfg = tmp.path().join("run.toml");
    fs::write(
        &cfg,
        format!(
            "dataset = {:?}\ndescriptors = [\"degree\", \"closeness\"]\nn_scales = 2\n",
            data.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = tmp.path().join("out");
    let o = place(&[
        "embed",
        "--config",
        cfg.to_str().unwrap(),
        "--n-scales",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("closeness/embedding.jsonl").exists());
    let saved = fs::read_to_string(out.join("run_config.toml")).unwrap();
    assert!(saved.contains("n_scales = 3"));
    let table = stdout(&o);
    assert!(table
        .lines()
        .skip(1)
        .all(|l| l.split('\t').nth(4) == Some("3")));
}

#[test]
fn evaluate_separable_data_scores_perfectly() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    separable_dataset(&data);
    let out = tmp.path().join("out");
    let o = place(&[
        "evaluate",
        data.to_str().unwrap(),
        "--folds",
        "5",
        "--seeds",
        "0,1",
        "--n-scales",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("degree/summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["summary"]["nc_mean"].as_f64(), Some(1.0));
    assert_eq!(summary["summary"]["linear_mean"].as_f64(), Some(1.0));
    assert_eq!(
        fs::read_to_string(out.join("degree/folds.jsonl"))
            .unwrap()
            .lines()
            .count(),
        10
    );
    assert_eq!(
        fs::read_to_string(out.join("degree/folds.tsv"))
            .unwrap()
            .lines()
            .count(),
        11
    );
}

#[test]
fn evaluate_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    separable_dataset(&data);
    let args = |o: &str| {
        vec![
            "evaluate".to_string(),
            data.display().to_string(),
            "--folds".into(),
            "4".into(),
            "--seeds".into(),
            "3".into(),
            "--out".into(),
            tmp.path().join(o).display().to_string(),
        ]
    };
    for o in ["x", "y"] {
        let a = args(o);
        assert!(place(&a.iter().map(String::as_str).collect::<Vec<_>>())
            .status
            .success());
    }
    for f in ["degree/folds.jsonl", "degree/summary.json", "evaluate.tsv"] {
        assert_eq!(
            fs::read(tmp.path().join("x").join(f)).unwrap(),
            fs::read(tmp.path().join("y").join(f)).unwrap()
        );
    }
}

#[test]
fn select_and_audit_write_reports() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    separable_dataset(&data);
    let out = tmp.path().join("out");
    let o = place(&[
        "select",
        data.to_str().unwrap(),
        "--descriptors",
        "degree",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("selection.json")).unwrap()).unwrap();
    assert_eq!(report["chosen"], "degree");
    assert_eq!(report["rows"][0]["rank_mah"], 1);

    let o = place(&[
        "audit",
        data.to_str().unwrap(),
        "--pairs",
        "50",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let run: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("degree/audit.json")).unwrap()).unwrap();
    assert!(run["pairs"]["n_pairs_sampled"].as_u64().unwrap() > 0);
    assert_eq!(
        fs::read_to_string(out.join("audit.tsv"))
            .unwrap()
            .lines()
            .count(),
        2
    );
}

#[test]
fn bottleneck_identical_files_have_zero_diagonal() {
    let tmp = TempDir::new().unwrap();
    let f = tmp.path().join("d.jsonl");
    write_diagram_file(
        &f,
        &[vec![(0.0, 1.0), (0.5, 3.0)], vec![(1.0, 2.0)], vec![]],
    );
    let o = place(&["bottleneck", f.to_str().unwrap(), f.to_str().unwrap()]);
    assert!(o.status.success());
    let m = parse_matrix(&stdout(&o));
    assert_eq!(m.len(), 3);
    for (i, row) in m.iter().enumerate() {
        assert_eq!(row[i], 0.0);
        for (j, v) in row.iter().enumerate() {
            assert_eq!(*v, m[j][i]);
        }
    }
}

#[test]
fn bottleneck_singletons_match_single_point_formula() {
    let tmp = TempDir::new().unwrap();
    let (fa, fb) = (tmp.path().join("a.jsonl"), tmp.path().join("b.jsonl"));
    let a = [(0.0, 1.0), (2.0, 7.0), (0.5, 0.75)];
    let b = [(0.1, 1.2), (3.0, 4.0)];
    write_diagram_file(&fa, &a.iter().map(|p| vec![*p]).collect::<Vec<_>>());
    write_diagram_file(&fb, &b.iter().map(|p| vec![*p]).collect::<Vec<_>>());
    let out = tmp.path().join("out");
    let o = place(&[
        "bottleneck",
        fa.to_str().unwrap(),
        fb.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let m = parse_matrix(&stdout(&o));
    for (i, p) in a.iter().enumerate() {
        for (j, q) in b.iter().enumerate() {
            let (p, q) = (
                DiagramPoint::new(p.0, p.1).unwrap(),
                DiagramPoint::new(q.0, q.1).unwrap(),
            );
            assert_eq!(m[i][j], bottleneck_single(Site::Point(p), Site::Point(q)));
        }
    }
    assert_eq!(
        fs::read_to_string(out.join("bottleneck.jsonl"))
            .unwrap()
            .lines()
            .count(),
        6
    );
}

#[test]
fn bottleneck_random_pairs_match_brute_force() {
    let tmp = TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut diagrams = Vec::new();
    for _ in 0..6 {
        let n = rng.random_range(0..5);
        let d: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let b: f64 = rng.random_range(0.0..5.0);
                (b, b + rng.random_range(0.05..3.0))
            })
            .collect();
        diagrams.push(d);
    }
    let f = tmp.path().join("r.jsonl");
    write_diagram_file(&f, &diagrams);
    let o = place(&["bottleneck", f.to_str().unwrap()]);
    assert!(o.status.success());
    let m = parse_matrix(&stdout(&o));
    let parsed: Vec<PersistenceDiagram> = diagrams
        .iter()
        .map(|d| PersistenceDiagram::from_pairs(d).unwrap())
        .collect();
    for i in 0..parsed.len() {
        for j in 0..parsed.len() {
            let want = brute_bottleneck(&parsed[i].points, &parsed[j].points);
            assert!(
                (m[i][j] - want).abs() < 1e-12,
                "({i},{j}): {} vs {want}",
                m[i][j]
            );
        }
    }
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(place(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(place(&["evaluate"]).status.code(), Some(1));
    assert_eq!(
        place(&["evaluate", "x", "--alpha", "0"]).status.code(),
        Some(1)
    );
    assert_eq!(
        place(&["evaluate", "x", "--tau", "median"]).status.code(),
        Some(1)
    );
    assert_eq!(place(&["--help"]).status.code(), Some(0));

    let bad = tmp.path().join("bad.jsonl");
    fs::write(&bad, "{\"points\":[[2.0,1.0]]}\n").unwrap();
    assert_eq!(
        place(&["bottleneck", bad.to_str().unwrap()]).status.code(),
        Some(2)
    );
    assert_eq!(
        place(&["embed", tmp.path().join("missing").to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );

    let data = tmp.path().join("data");
    tiny_dataset(&data);
    let values = tmp.path().join("values.txt");
    fs::write(&values, "1 2 3\n1 2 NaN 4\n1 2 3 4 5\n1 2 3 4\n").unwrap();
    let desc = format!("file:{}", values.display());
    let o = place(&["embed", data.to_str().unwrap(), "--descriptors", &desc]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}
