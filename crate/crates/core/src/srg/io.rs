use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::{FeatureMatrix, InteractionMatrix, SpaceRelationGraph};
use crate::error::{PecError, Result};

const NODES_TAG: &str = "#nodes";

/// Canonical edge-list text. The leading `#nodes` comment preserves node
/// order and isolated nodes; plain edge-list readers skip it.
pub(crate) fn to_tsv_string(g: &SpaceRelationGraph) -> String {
    let mut out = String::new();
    out.push_str(NODES_TAG);
    for id in g.node_ids() {
        out.push('\t');
        out.push_str(id);
    }
    out.push('\n');
    for (u, v, w) in g.edges() {
        let _ = writeln!(out, "{}\t{}\t{}", g.node_id(u), g.node_id(v), w);
    }
    out
}

pub fn save_graph(g: &SpaceRelationGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_tsv_string(g)).map_err(|e| PecError::io(path, e))
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<SpaceRelationGraph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| PecError::io(path, e))?;
    parse_graph(&text, path)
}

pub(crate) fn parse_graph(text: &str, path: &Path) -> Result<SpaceRelationGraph> {
    let mut ids: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut edges = Vec::new();
    let mut seen = HashMap::new();

    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if let Some(rest) = line.strip_prefix(NODES_TAG) {
            for id in rest.split('\t').filter(|s| !s.is_empty()) {
                if index.insert(id.to_string(), ids.len()).is_some() {
                    return Err(PecError::parse(
                        path,
                        lineno,
                        format!("duplicate node {id:?}"),
                    ));
                }
                ids.push(id.to_string());
            }
            continue;
        }
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(PecError::parse(
                path,
                lineno,
                format!(
                    "expected `u<TAB>v<TAB>weight`, found {} fields",
                    fields.len()
                ),
            ));
        }
        let w: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| PecError::parse(path, lineno, format!("bad weight {:?}", fields[2])))?;
        if !(w.is_finite() && w > 0.0) {
            return Err(PecError::parse(
                path,
                lineno,
                format!("weight must be positive, got {w}"),
            ));
        }
        if fields[0] == fields[1] {
            return Err(PecError::parse(path, lineno, "self-loop"));
        }
        let mut node = |id: &str| {
            *index.entry(id.to_string()).or_insert_with(|| {
                ids.push(id.to_string());
                ids.len() - 1
            })
        };
        let u = node(fields[0]);
        let v = node(fields[1]);
        if seen.insert((u.min(v), u.max(v)), lineno).is_some() {
            return Err(PecError::parse(path, lineno, "edge listed more than once"));
        }
        edges.push((u, v, w));
    }
    SpaceRelationGraph::from_edges(ids, &edges).map_err(|e| PecError::parse(path, 0, e.to_string()))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| PecError::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn parse_cell(path: &Path, line: usize, s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| PecError::parse(path, line, format!("not a number: {s:?}")))
}

/// Read `node,f1,...,fF` CSV.
pub fn read_features_csv(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let mut rdr = csv_reader(path)?;
    let width = rdr.headers()?.len();
    if width < 2 {
        return Err(PecError::parse(path, 1, "header must be `node,<f1>,...`"));
    }
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != width {
            return Err(PecError::parse(
                path,
                line,
                format!("expected {width} fields, found {}", rec.len()),
            ));
        }
        ids.push(rec[0].to_string());
        for cell in rec.iter().skip(1) {
            values.push(parse_cell(path, line, cell)?);
        }
    }
    let n = ids.len();
    let values = Array2::from_shape_vec((n, width - 1), values).expect("row width checked");
    FeatureMatrix::new(ids, values)
}

pub fn write_features_csv(f: &FeatureMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["node".to_string()];
    header.extend((1..=f.values().ncols()).map(|j| format!("f{j}")));
    w.write_record(&header)?;
    for (id, row) in f.node_ids().iter().zip(f.values().rows()) {
        let mut rec = vec![id.clone()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| PecError::io(path, e))
}

/// Read an OD matrix CSV whose header row and first column carry node ids.
pub fn read_od_csv(path: impl AsRef<Path>) -> Result<InteractionMatrix> {
    let path = path.as_ref();
    let mut rdr = csv_reader(path)?;
    let header: Vec<String> = rdr.headers()?.iter().skip(1).map(str::to_string).collect();
    let n = header.len();
    let mut values = Vec::with_capacity(n * n);
    let mut rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != n + 1 {
            return Err(PecError::parse(
                path,
                line,
                format!("expected {} fields, found {}", n + 1, rec.len()),
            ));
        }
        if rows >= n || rec[0] != header[rows] {
            return Err(PecError::parse(
                path,
                line,
                format!("row id {:?} does not match column order", &rec[0]),
            ));
        }
        for cell in rec.iter().skip(1) {
            values.push(parse_cell(path, line, cell)?);
        }
        rows += 1;
    }
    if rows != n {
        return Err(PecError::parse(
            path,
            rows + 1,
            format!("expected {n} rows, found {rows}"),
        ));
    }
    let volumes = Array2::from_shape_vec((n, n), values).expect("square shape checked");
    InteractionMatrix::new(header, volumes)
}

pub fn write_od_csv(od: &InteractionMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec![String::new()];
    header.extend(od.node_ids().iter().cloned());
    w.write_record(&header)?;
    for (id, row) in od.node_ids().iter().zip(od.volumes().rows()) {
        let mut rec = vec![id.clone()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| PecError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::srg::build_srg_from_adjacency;

    fn p() -> &'static Path {
        Path::new("mem.tsv")
    }

    #[test]
    fn parses_single_edge() {
        let g = parse_graph("A\tB\t1.0\n", p()).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1, 1.0)]);
    }

    #[test]
    fn negative_weight_reports_line() {
        let err = parse_graph("A\tB\t-1\n", p()).unwrap_err();
        match err {
            PecError::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
        let err = parse_graph("# c\nA\tB\t1\nB\tC\n", p()).unwrap_err();
        assert!(matches!(err, PecError::Parse { line: 3, .. }));
        let err = parse_graph("A\tB\t1\nB\tA\t1\n", p()).unwrap_err();
        assert!(matches!(err, PecError::Parse { line: 2, .. }));
    }

    #[test]
    fn triangle_round_trip_keeps_order_and_isolated() {
        let g =
            build_srg_from_adjacency(&["Z", "A", "B", "C"], &[("A", "B"), ("B", "C"), ("C", "A")])
                .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.tsv");
        save_graph(&g, &path).unwrap();
        let h = load_graph(&path).unwrap();
        assert_eq!(g, h);
        assert_eq!(h.node_ids(), g.node_ids());
        assert_eq!(h.isolated_nodes(), vec![0]);
    }

    #[test]
    fn plain_edge_list_without_nodes_header() {
        let g = parse_graph("# comment\nA\tB\t0.5\nB\tC\t2\n", p()).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.weight(1, 2), Some(2.0));
    }

    #[test]
    fn od_csv_round_trip() {
        let od = InteractionMatrix::new(
            vec!["a".into(), "b".into()],
            ndarray::array![[0.0, 3.5], [1.0, 0.0]],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("od.csv");
        write_od_csv(&od, &path).unwrap();
        assert_eq!(read_od_csv(&path).unwrap(), od);
    }

    #[test]
    fn features_csv_round_trip() {
        let f = FeatureMatrix::new(
            vec!["a".into(), "b".into(), "c".into()],
            ndarray::array![[0.0, 1.25], [1.0, -2.0], [0.1, 0.2]],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        write_features_csv(&f, &path).unwrap();
        assert_eq!(read_features_csv(&path).unwrap(), f);
    }
}
