//! Ranking metrics: P@k and propensity-scored PSP@k.
//!
//! Predictions are matched to gold rows by position. PSP@k divides each
//! instance's achieved inverse-propensity sum by the best sum achievable with
//! `k` slots on that instance, so a perfect ranking scores 1 and a uniform
//! rescaling of the propensities changes nothing. Instances without gold
//! labels have no achievable sum and are left out of the PSP mean.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::dataio::Prediction;
use crate::error::{invalid, Result};
use crate::matrices::CsrMatrix;

pub const DEFAULT_A: f64 = 0.55;
pub const DEFAULT_B: f64 = 1.5;
/// Cutoffs shown in reports.
pub const REPORT_KS: [usize; 3] = [1, 3, 5];

#[derive(Debug, Clone, PartialEq)]
pub struct Propensities {
    pub p: Vec<f64>,
    pub a: f64,
    pub b: f64,
}

fn check(preds: &[Prediction], y: &CsrMatrix, k: usize) -> Result<()> {
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    if preds.len() != y.rows() {
        return Err(invalid(format!(
            "{} predictions for {} gold rows",
            preds.len(),
            y.rows()
        )));
    }
    Ok(())
}

fn hits<'a>(pred: &'a Prediction, gold: &'a [usize], k: usize) -> impl Iterator<Item = usize> + 'a {
    pred.top_k(k).filter(move |l| gold.binary_search(l).is_ok())
}

/// Mean over instances of `|top_k ∩ gold| / k`.
pub fn precision_at_k(preds: &[Prediction], y: &CsrMatrix, k: usize) -> Result<f64> {
    check(preds, y, k)?;
    if preds.is_empty() {
        return Ok(0.0);
    }
    let per: Vec<usize> = preds
        .par_iter()
        .enumerate()
        .map(|(i, p)| hits(p, y.row(i).indices, k).count())
        .collect();
    let total: f64 = per.iter().map(|&h| h as f64 / k as f64).sum();
    Ok(total / preds.len() as f64)
}

/// `p_l = 1 / (1 + C·exp(−A·ln(N_l + B)))` with `C = (ln n − 1)(B + 1)^A`,
/// where `N_l` counts the training instances carrying label `l`. For very
/// small `n` the constant goes negative; propensities are then capped at 1.
pub fn compute_propensities(y_train: &CsrMatrix, a: f64, b: f64) -> Result<Propensities> {
    let n = y_train.rows();
    if n < 2 {
        return Err(invalid("propensities need at least 2 training instances"));
    }
    let c = ((n as f64).ln() - 1.0) * (b + 1.0).powf(a);
    let p = y_train
        .col_counts()
        .into_iter()
        .map(|nl| {
            let v = 1.0 / (1.0 + c * (-a * (nl as f64 + b).ln()).exp());
            v.min(1.0)
        })
        .collect();
    Ok(Propensities { p, a, b })
}

/// Mean per-instance ratio of achieved to ideal inverse-propensity mass in the top `k`.
pub fn psp_at_k(preds: &[Prediction], y: &CsrMatrix, prop: &Propensities, k: usize) -> Result<f64> {
    check(preds, y, k)?;
    if prop.p.len() != y.cols() {
        return Err(invalid("propensity count does not match the label count"));
    }
    let per: Vec<Option<f64>> = preds
        .par_iter()
        .enumerate()
        .map(|(i, pred)| {
            let gold = y.row(i).indices;
            if gold.is_empty() {
                return None;
            }
            let achieved: f64 = hits(pred, gold, k).map(|l| 1.0 / prop.p[l]).sum();
            let mut best: Vec<f64> = gold.iter().map(|&l| 1.0 / prop.p[l]).collect();
            best.sort_by(|u, v| v.total_cmp(u));
            let ideal: f64 = best.iter().take(k).sum();
            Some(achieved / ideal)
        })
        .collect();
    let scored: Vec<f64> = per.into_iter().flatten().collect();
    if scored.is_empty() {
        return Ok(0.0);
    }
    Ok(scored.iter().sum::<f64>() / scored.len() as f64)
}

/// One model's line in a comparison report.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub name: String,
    pub precision: [f64; 3],
    pub psp: [f64; 3],
}

pub fn evaluate(
    name: &str,
    preds: &[Prediction],
    y: &CsrMatrix,
    prop: &Propensities,
) -> Result<MetricRow> {
    let mut row = MetricRow {
        name: name.to_string(),
        precision: [0.0; 3],
        psp: [0.0; 3],
    };
    for (slot, &k) in REPORT_KS.iter().enumerate() {
        row.precision[slot] = precision_at_k(preds, y, k)?;
        row.psp[slot] = psp_at_k(preds, y, prop, k)?;
    }
    Ok(row)
}

/// Fixed-width table, metrics as percentages.
pub fn format_table(rows: &[MetricRow]) -> String {
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(0).max(5);
    let mut s = format!("{:<width$}", "model");
    for k in REPORT_KS {
        write!(s, " {:>7}", format!("P@{k}")).unwrap();
    }
    for k in REPORT_KS {
        write!(s, " {:>7}", format!("PSP@{k}")).unwrap();
    }
    s.push('\n');
    for r in rows {
        write!(s, "{:<width$}", r.name).unwrap();
        for v in r.precision.iter().chain(&r.psp) {
            write!(s, " {:>7.2}", v * 100.0).unwrap();
        }
        s.push('\n');
    }
    s
}

pub fn format_csv(rows: &[MetricRow]) -> String {
    let mut s = String::from("model,p@1,p@3,p@5,psp@1,psp@3,psp@5\n");
    for r in rows {
        s.push_str(&r.name);
        for v in r.precision.iter().chain(&r.psp) {
            write!(s, ",{v:.6}").unwrap();
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ranked(lists: &[&[usize]]) -> Vec<Prediction> {
        lists
            .iter()
            .enumerate()
            .map(|(i, l)| {
                Prediction::new(i, l.iter().enumerate().map(|(r, &lab)| (lab, -(r as f64))).collect())
            })
            .collect()
    }

    fn gold(l: usize, rows: &[&[usize]]) -> CsrMatrix {
        CsrMatrix::from_patterns(l, rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn precision_examples() {
        let y = gold(10, &[&[0, 1, 2], &[3, 4, 5, 6]]);
        assert_eq!(precision_at_k(&ranked(&[&[0, 9], &[3, 9]]), &y, 1).unwrap(), 1.0);
        assert_eq!(precision_at_k(&ranked(&[&[7], &[8]]), &y, 1).unwrap(), 0.0);
        let preds = ranked(&[&[0, 7, 8, 9, 3], &[3, 4, 5, 0, 1]]);
        assert!((precision_at_k(&preds, &y, 5).unwrap() - 0.4).abs() < 1e-12);
        assert!(precision_at_k(&preds, &y, 0).is_err());
    }

    #[test]
    fn short_lists_still_divide_by_k() {
        let y = gold(3, &[&[0]]);
        assert_eq!(precision_at_k(&ranked(&[&[0]]), &y, 5).unwrap(), 0.2);
    }

    #[test]
    fn propensity_scalar_case() {
        let y = CsrMatrix::from_patterns(
            2,
            (0..10).map(|i| if i == 0 { vec![0, 1] } else { vec![1] }).collect::<Vec<_>>(),
        )
        .unwrap();
        let prop = compute_propensities(&y, 0.55, 1.5).unwrap();
        let c = (10f64.ln() - 1.0) * 2.5f64.powf(0.55);
        let want = |nl: f64| 1.0 / (1.0 + c * (nl + 1.5).powf(-0.55));
        assert!((prop.p[0] - want(1.0)).abs() < 1e-12);
        assert!((prop.p[1] - want(10.0)).abs() < 1e-12);
        assert!(prop.p[0] < prop.p[1]);
        assert!(compute_propensities(&gold(2, &[&[0]]), 0.55, 1.5).is_err());
    }

    #[test]
    fn propensities_symmetric_and_monotone() {
        let y = gold(3, &[&[0, 1, 2], &[0, 1, 2], &[2]]);
        let p = compute_propensities(&y, DEFAULT_A, DEFAULT_B).unwrap().p;
        assert_eq!(p[0], p[1]);
        assert!(p[2] >= p[0]);
        assert!(p.iter().all(|&v| v > 0.0 && v <= 1.0));
    }

    #[test]
    fn psp_perfect_and_uniform() {
        let y = gold(4, &[&[0, 2], &[1]]);
        let preds = ranked(&[&[2, 0, 3], &[1, 0]]);
        let prop = Propensities { p: vec![0.1, 0.5, 0.9, 0.3], a: 0.0, b: 0.0 };
        assert_eq!(psp_at_k(&preds, &y, &prop, 2).unwrap(), 1.0);
        let uniform = Propensities { p: vec![0.4; 4], a: 0.0, b: 0.0 };
        let off = ranked(&[&[3, 0], &[0, 1]]);
        // Uniform weights reduce PSP to hits divided by min(k, |gold|).
        assert!((psp_at_k(&off, &y, &uniform, 2).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn psp_skips_unlabeled_instances() {
        let y = gold(2, &[&[0], &[]]);
        let prop = Propensities { p: vec![0.5, 0.5], a: 0.0, b: 0.0 };
        assert_eq!(psp_at_k(&ranked(&[&[0], &[1]]), &y, &prop, 1).unwrap(), 1.0);
    }

    #[test]
    fn report_formats() {
        let rows = vec![MetricRow {
            name: "base".into(),
            precision: [0.5, 0.25, 0.125],
            psp: [1.0, 0.0, 0.5],
        }];
        let table = format_table(&rows);
        assert!(table.starts_with("model     P@1"));
        assert!(table.contains("base    50.00   25.00   12.50  100.00    0.00   50.00"));
        assert_eq!(
            format_csv(&rows).lines().nth(1).unwrap(),
            "base,0.500000,0.250000,0.125000,1.000000,0.000000,0.500000"
        );
    }

    proptest! {
        #[test]
        fn psp_scale_invariant(
            gold_rows in prop::collection::vec(prop::collection::btree_set(0usize..6, 1..4), 1..6),
            scale in 0.1f64..1.0,
            k in 1usize..4,
        ) {
            let rows: Vec<Vec<usize>> = gold_rows.iter().map(|s| s.iter().copied().collect()).collect();
            let y = CsrMatrix::from_patterns(6, rows).unwrap();
            let preds: Vec<Prediction> = (0..y.rows())
                .map(|i| Prediction::new(i, (0..6).map(|l| (l, ((i * 7 + l * 3) % 5) as f64)).collect()))
                .collect();
            let p: Vec<f64> = (0..6).map(|l| 0.2 + 0.1 * l as f64).collect();
            let base = Propensities { p: p.clone(), a: 0.0, b: 0.0 };
            let scaled = Propensities { p: p.iter().map(|v| v * scale).collect(), a: 0.0, b: 0.0 };
            let u = psp_at_k(&preds, &y, &base, k).unwrap();
            let v = psp_at_k(&preds, &y, &scaled, k).unwrap();
            prop_assert!((u - v).abs() < 1e-12);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&u));
        }
    }
}
