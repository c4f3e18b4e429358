use std::collections::BTreeMap;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{PecError, Result};
use crate::srg::InteractionMatrix;

/// Region-to-region share of outgoing interaction volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyReport {
    /// Region label of each row/column, ascending.
    pub regions: Vec<usize>,
    /// Row `i` sums to 1 unless the region is flagged.
    pub matrix: Array2<f64>,
    /// Regions with no outgoing volume; their rows are left at zero.
    pub flagged: Vec<bool>,
}

impl FrequencyReport {
    /// Whether every non-flagged row has its maximum on the diagonal.
    pub fn diagonal_dominant(&self) -> bool {
        self.matrix
            .rows()
            .into_iter()
            .enumerate()
            .all(|(i, row)| self.flagged[i] || row.iter().all(|&v| v <= row[i]))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["region".to_string()];
        header.extend(self.regions.iter().map(|r| format!("region_{r}")));
        w.write_record(&header)?;
        for (i, row) in self.matrix.rows().into_iter().enumerate() {
            let mut rec = vec![format!("region_{}", self.regions[i])];
            rec.extend(row.iter().map(|v| format!("{v:.6}")));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| PecError::io(path, e))
    }
}

/// Cell `(i, j)` = volume from region `i` to region `j` over region `i`'s
/// total outgoing volume. Node self-flows on the OD diagonal are ignored.
pub fn interaction_frequency_report(
    od: &InteractionMatrix,
    labels: &[usize],
) -> Result<FrequencyReport> {
    let n = od.len();
    if labels.len() != n {
        return Err(PecError::invalid(format!(
            "{} labels for {n} nodes",
            labels.len()
        )));
    }
    let mut regions: Vec<usize> = labels.to_vec();
    regions.sort_unstable();
    regions.dedup();
    let index: BTreeMap<usize, usize> = regions.iter().enumerate().map(|(i, &r)| (r, i)).collect();
    let r = regions.len();
    let mut m = Array2::<f64>::zeros((r, r));
    let a = od.volumes();
    for u in 0..n {
        for v in 0..n {
            if u != v {
                m[[index[&labels[u]], index[&labels[v]]]] += a[[u, v]];
            }
        }
    }
    let mut flagged = vec![false; r];
    for (i, mut row) in m.rows_mut().into_iter().enumerate() {
        let total: f64 = row.sum();
        if total > 0.0 {
            row.mapv_inplace(|v| v / total);
        } else {
            flagged[i] = true;
        }
    }
    Ok(FrequencyReport {
        regions,
        matrix: m,
        flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("g{i}")).collect()
    }

    #[test]
    fn single_region() {
        let od = InteractionMatrix::new(ids(2), array![[0.0, 3.0], [1.0, 0.0]]).unwrap();
        let r = interaction_frequency_report(&od, &[4, 4]).unwrap();
        assert_eq!(r.matrix, array![[1.0]]);
    }

    #[test]
    fn block_diagonal_gives_identity() {
        let od = InteractionMatrix::new(
            ids(4),
            array![
                [0.0, 2.0, 0.0, 0.0],
                [5.0, 0.0, 0.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
                [0.0, 0.0, 7.0, 0.0]
            ],
        )
        .unwrap();
        let r = interaction_frequency_report(&od, &[0, 0, 1, 1]).unwrap();
        assert_eq!(r.matrix, array![[1.0, 0.0], [0.0, 1.0]]);
        assert!(r.diagonal_dominant());
    }

    #[test]
    fn zero_outflow_flagged() {
        let od = InteractionMatrix::new(
            ids(3),
            array![[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 9.0]],
        )
        .unwrap();
        let r = interaction_frequency_report(&od, &[0, 0, 1]).unwrap();
        assert_eq!(r.flagged, vec![false, true]);
        assert_eq!(r.matrix.row(1).sum(), 0.0);
    }

    #[test]
    fn reference_five_region_rows_are_diagonal_dominant() {
        let table = array![
            [0.502, 0.082, 0.204, 0.137, 0.073],
            [0.228, 0.376, 0.162, 0.212, 0.016],
            [0.177, 0.053, 0.611, 0.082, 0.077],
            [0.247, 0.147, 0.165, 0.413, 0.021],
            [0.257, 0.023, 0.314, 0.044, 0.362],
        ];
        let report = FrequencyReport {
            regions: (0..5).collect(),
            matrix: table,
            flagged: vec![false; 5],
        };
        assert!(report.diagonal_dominant());
    }

    proptest! {
        #[test]
        fn rows_sum_to_one_and_scale_free(
            vals in proptest::collection::vec(0u32..10, 25),
            labels in proptest::collection::vec(0usize..3, 5),
            c in 0.1f64..50.0,
        ) {
            let a = Array2::from_shape_vec((5, 5), vals.iter().map(|&v| v as f64).collect()).unwrap();
            let od = InteractionMatrix::new(ids(5), a.clone()).unwrap();
            let scaled = InteractionMatrix::new(ids(5), a * c).unwrap();
            let r1 = interaction_frequency_report(&od, &labels).unwrap();
            let r2 = interaction_frequency_report(&scaled, &labels).unwrap();
            for (i, row) in r1.matrix.rows().into_iter().enumerate() {
                if !r1.flagged[i] {
                    prop_assert!((row.sum() - 1.0).abs() < 1e-9);
                }
            }
            for (x, y) in r1.matrix.iter().zip(r2.matrix.iter()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
