//! Reading and writing the XMC text format.
//!
//! ```text
//! n d L
//! l1,l2,... i1:v1 i2:v2 ...
//! ```
//!
//! One data line per instance. Label and feature indices are zero-based and
//! feature indices must be strictly ascending. A line that starts with a space
//! has no labels.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use log::warn;

use crate::error::{Error, ParseErrorKind, Result};
use crate::matrices::CsrMatrix;

/// Features `x` (n×d) and binary labels `y` (n×L).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: CsrMatrix,
    pub y: CsrMatrix,
}

impl Dataset {
    pub fn new(x: CsrMatrix, y: CsrMatrix) -> Result<Self> {
        if x.rows() != y.rows() {
            return Err(Error::DimensionMismatch {
                op: "Dataset::new",
                left: x.shape(),
                right: y.shape(),
            });
        }
        if !y.is_binary() {
            return Err(Error::InvalidArgument("label matrix must be binary".into()));
        }
        Ok(Self { x, y })
    }

    pub fn n_instances(&self) -> usize {
        self.x.rows()
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    pub fn n_labels(&self) -> usize {
        self.y.cols()
    }

    /// Instances with no features at all.
    pub fn degenerate_rows(&self) -> Vec<usize> {
        (0..self.n_instances())
            .filter(|&i| self.x.row_nnz(i) == 0)
            .collect()
    }

    /// Copy with every feature row scaled to unit 2-norm.
    pub fn normalized(&self) -> Self {
        Self {
            x: normalize_rows(&self.x),
            y: self.y.clone(),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            x: self.x.select_rows(rows),
            y: self.y.select_rows(rows),
        }
    }

    pub fn stats(&self) -> DatasetStats {
        let n = self.n_instances();
        let l = self.n_labels();
        DatasetStats {
            n,
            d: self.n_features(),
            l,
            avg_labels_per_instance: if n == 0 { 0.0 } else { self.y.nnz() as f64 / n as f64 },
            avg_instances_per_label: if l == 0 { 0.0 } else { self.y.nnz() as f64 / l as f64 },
        }
    }
}

/// Summary counts in the style of XMC benchmark tables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetStats {
    pub n: usize,
    pub d: usize,
    pub l: usize,
    pub avg_labels_per_instance: f64,
    pub avg_instances_per_label: f64,
}

pub fn normalize_rows(x: &CsrMatrix) -> CsrMatrix {
    x.normalize_rows()
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    read_dataset(BufReader::new(file), &path.display().to_string())
}

/// Parses a dataset from any reader; `source` names it in error messages.
pub fn read_dataset<R: BufRead>(reader: R, source: &str) -> Result<Dataset> {
    let err = |line: usize, kind| Error::Parse {
        path: source.to_string(),
        line,
        kind,
    };
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => return Err(err(1, ParseErrorKind::MalformedHeader("empty file".into()))),
    };
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| err(1, ParseErrorKind::MalformedHeader(header.clone())))?;
    let [n, d, l] = dims[..] else {
        return Err(err(1, ParseErrorKind::MalformedHeader(header.clone())));
    };

    let mut x_rows = Vec::with_capacity(n);
    let mut y_rows = Vec::with_capacity(n);
    let mut unlabeled = 0usize;
    for (k, line) in lines.enumerate() {
        let line = line?;
        let lineno = k + 2;
        if k >= n {
            if line.trim().is_empty() {
                continue;
            }
            return Err(err(
                lineno,
                ParseErrorKind::Malformed(format!("more than {n} data lines")),
            ));
        }
        let (label_field, feature_field) = if line.starts_with(char::is_whitespace) {
            ("", line.as_str())
        } else {
            match line.split_once(char::is_whitespace) {
                Some((a, b)) => (a, b),
                None => (line.as_str(), ""),
            }
        };

        let mut labels = Vec::new();
        if !label_field.is_empty() {
            for tok in label_field.split(',') {
                let lab: usize = tok
                    .parse()
                    .map_err(|_| err(lineno, ParseErrorKind::NonNumeric(tok.to_string())))?;
                if lab >= l {
                    return Err(err(lineno, ParseErrorKind::IndexOutOfRange { index: lab, dim: l }));
                }
                labels.push(lab);
            }
        }
        if labels.is_empty() {
            unlabeled += 1;
        }

        let mut feats = Vec::new();
        let mut prev: Option<usize> = None;
        for tok in feature_field.split_whitespace() {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| err(lineno, ParseErrorKind::Malformed(format!("expected idx:val, got {tok:?}"))))?;
            let i: usize = i
                .parse()
                .map_err(|_| err(lineno, ParseErrorKind::NonNumeric(i.to_string())))?;
            let v: f64 = v
                .parse()
                .map_err(|_| err(lineno, ParseErrorKind::NonNumeric(v.to_string())))?;
            if !v.is_finite() {
                return Err(err(lineno, ParseErrorKind::NonNumeric(v.to_string())));
            }
            if i >= d {
                return Err(err(lineno, ParseErrorKind::IndexOutOfRange { index: i, dim: d }));
            }
            if let Some(p) = prev {
                if i <= p {
                    return Err(err(lineno, ParseErrorKind::UnsortedFeatures { prev: p, next: i }));
                }
            }
            prev = Some(i);
            feats.push((i, v));
        }
        x_rows.push(feats);
        y_rows.push(labels);
    }
    if x_rows.len() != n {
        return Err(err(
            x_rows.len() + 2,
            ParseErrorKind::MissingLines {
                expected: n,
                found: x_rows.len(),
            },
        ));
    }
    if unlabeled > 0 {
        warn!("{source}: {unlabeled} instance(s) have no labels");
    }
    let x = CsrMatrix::from_rows(d, x_rows)?;
    let y = CsrMatrix::from_patterns(l, y_rows)?;
    Dataset::new(x, y)
}

pub fn save_dataset(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_dataset(data, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Canonical serialization: values use the shortest representation that
/// parses back to the same `f64`.
pub fn write_dataset<W: Write>(data: &Dataset, w: &mut W) -> io::Result<()> {
    writeln!(w, "{} {} {}", data.n_instances(), data.n_features(), data.n_labels())?;
    for i in 0..data.n_instances() {
        let labels: Vec<String> = data.y.row(i).indices.iter().map(usize::to_string).collect();
        write!(w, "{}", labels.join(","))?;
        for (j, v) in data.x.row(i).iter() {
            write!(w, " {j}:{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Ranked labels for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub instance: usize,
    pub labels: Vec<(usize, f64)>,
}

impl Prediction {
    pub fn new(instance: usize, mut labels: Vec<(usize, f64)>) -> Self {
        sort_ranked(&mut labels);
        Self { instance, labels }
    }

    pub fn top_k(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.labels.iter().take(k).map(|&(l, _)| l)
    }
}

/// Descending score, ties to the lower label id.
pub fn sort_ranked(labels: &mut [(usize, f64)]) {
    labels.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
}

pub fn save_predictions(preds: &[Prediction], path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_predictions(preds, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_predictions<W: Write>(preds: &[Prediction], w: &mut W) -> io::Result<()> {
    let mut sorted = Vec::new();
    for p in preds {
        sorted.clear();
        sorted.extend_from_slice(&p.labels);
        sort_ranked(&mut sorted);
        let line: Vec<String> = sorted.iter().map(|(l, s)| format!("{l}:{s:.6}")).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<Prediction>> {
    let path = path.as_ref();
    let source = path.display().to_string();
    let reader = BufReader::new(File::open(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io(e),
    })?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let mut labels = Vec::new();
        for tok in line.split_whitespace() {
            let bad = || Error::Parse {
                path: source.clone(),
                line: i + 1,
                kind: ParseErrorKind::Malformed(format!("expected label:score, got {tok:?}")),
            };
            let (l, s) = tok.split_once(':').ok_or_else(bad)?;
            labels.push((l.parse().map_err(|_| bad())?, s.parse().map_err(|_| bad())?));
        }
        out.push(Prediction::new(i, labels));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(s: &str) -> Result<Dataset> {
        read_dataset(s.as_bytes(), "mem")
    }

    #[test]
    fn loads_example() {
        let ds = parse("2 3 2\n0 0:1.5 2:0.5\n0,1 1:2.0\n").unwrap();
        assert_eq!((ds.n_instances(), ds.n_features(), ds.n_labels()), (2, 3, 2));
        assert_eq!(ds.y.to_dense(), vec![vec![1.0, 0.0], vec![1.0, 1.0]]);
        assert_eq!(ds.x.get(0, 2), 0.5);
    }

    #[test]
    fn empty_label_field_accepted() {
        let ds = parse("1 3 2\n 0:1.0\n").unwrap();
        assert_eq!(ds.y.row_nnz(0), 0);
        assert_eq!(ds.x.row_nnz(0), 1);
    }

    #[test]
    fn feature_index_out_of_range() {
        let e = parse("2 3 2\n0 0:1\n1 3:1.0\n").unwrap_err();
        match e {
            Error::Parse { line, kind, .. } => {
                assert_eq!(line, 3);
                assert_eq!(kind, ParseErrorKind::IndexOutOfRange { index: 3, dim: 3 });
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn distinct_parse_errors() {
        let kind = |s: &str| match parse(s).unwrap_err() {
            Error::Parse { kind, .. } => kind,
            e => panic!("{e:?}"),
        };
        assert!(matches!(kind("2 3\n"), ParseErrorKind::MalformedHeader(_)));
        assert!(matches!(kind("1 3 2\n0 2:1 1:1\n"), ParseErrorKind::UnsortedFeatures { .. }));
        assert!(matches!(kind("1 3 2\n0 1:abc\n"), ParseErrorKind::NonNumeric(_)));
        assert!(matches!(kind("1 3 2\n5 1:1\n"), ParseErrorKind::IndexOutOfRange { .. }));
        assert!(matches!(kind("2 3 2\n0 1:1\n"), ParseErrorKind::MissingLines { .. }));
    }

    #[test]
    fn normalize_examples() {
        let x = CsrMatrix::from_dense(&[vec![3.0, 4.0], vec![0.0, 0.0], vec![0.6, 0.8]]);
        let n = normalize_rows(&x);
        assert!((n.get(0, 0) - 0.6).abs() < 1e-12 && (n.get(0, 1) - 0.8).abs() < 1e-12);
        assert_eq!(n.row_nnz(1), 0);
        assert!((n.get(2, 0) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn prediction_lines() {
        let preds = vec![
            Prediction::new(0, vec![(7, 0.5)]),
            Prediction::new(1, vec![]),
            Prediction::new(2, vec![(9, 0.25), (3, 0.25), (4, 0.75)]),
        ];
        let mut buf = Vec::new();
        write_predictions(&preds, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "7:0.500000\n\n4:0.750000 3:0.250000 9:0.250000\n"
        );
    }

    fn arb_dataset() -> impl Strategy<Value = Dataset> {
        (1usize..6, 1usize..6, 1usize..5).prop_flat_map(|(n, d, l)| {
            let xs = prop::collection::vec(
                prop::collection::vec(prop::option::of(-1e3f64..1e3), d),
                n,
            );
            let ys = prop::collection::vec(prop::collection::vec(any::<bool>(), l), n);
            (xs, ys).prop_map(move |(xs, ys)| {
                let x = CsrMatrix::from_rows(
                    d,
                    xs.into_iter().map(|r| {
                        r.into_iter()
                            .enumerate()
                            .filter_map(|(j, v)| v.filter(|v| *v != 0.0).map(|v| (j, v)))
                            .collect::<Vec<_>>()
                    }),
                )
                .unwrap();
                let y = CsrMatrix::from_patterns(
                    l,
                    ys.into_iter()
                        .map(|r| r.into_iter().enumerate().filter(|p| p.1).map(|p| p.0).collect::<Vec<_>>()),
                )
                .unwrap();
                Dataset::new(x, y).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn save_load_round_trip(ds in arb_dataset()) {
            let mut buf = Vec::new();
            write_dataset(&ds, &mut buf).unwrap();
            let back = read_dataset(buf.as_slice(), "mem").unwrap();
            prop_assert_eq!(back, ds);
        }

        #[test]
        fn normalize_idempotent(ds in arb_dataset()) {
            let once = normalize_rows(&ds.x);
            let twice = normalize_rows(&once);
            for (a, b) in once.values().iter().zip(twice.values()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            for r in 0..once.rows() {
                let norm = once.row(r).squared_norm().sqrt();
                prop_assert!(once.row_nnz(r) == 0 || (norm - 1.0).abs() < 1e-12);
            }
        }
    }
}
