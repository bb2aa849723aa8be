//! Standard-form LP: `min objective·x  s.t.  constraints·x ≤ rhs,  0 ≤ x ≤ 1`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{SparseMatrix, TripletFile};

/// What a column of a compiled LP stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnLabel {
    /// `x_i^j`, probability that customer `i` receives action `j`.
    Customer { customer: usize, action: usize },
    /// `x_{k*}^j`, share of action-segment `k*` receiving action `j`.
    Segment { segment: usize, action: usize },
    /// `z_i^j`, customer `i` receives action `j` alone.
    Single { customer: usize, action: usize },
    /// `y_i^{j1,j2}`, customer `i` receives both actions.
    Pair {
        customer: usize,
        first: usize,
        second: usize,
    },
    /// Auxiliary `x_i^j = z_i^j + Σ y` in the interdependent model.
    Auxiliary { customer: usize, action: usize },
    /// Column read from an external file.
    Generic { index: usize },
}

/// Constraint family a row was emitted for. Rows are always emitted in this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowFamily {
    VolumeOne,
    VolumeTwo,
    SimilarityOne,
    SimilarityTwo,
    Targeting,
    Auxiliary,
    Generic,
}

impl RowFamily {
    pub const ALL: [RowFamily; 7] = [
        RowFamily::VolumeOne,
        RowFamily::VolumeTwo,
        RowFamily::SimilarityOne,
        RowFamily::SimilarityTwo,
        RowFamily::Targeting,
        RowFamily::Auxiliary,
        RowFamily::Generic,
    ];
}

impl fmt::Display for RowFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            RowFamily::VolumeOne => "Volume I",
            RowFamily::VolumeTwo => "Volume II",
            RowFamily::SimilarityOne => "Similarity I",
            RowFamily::SimilarityTwo => "Similarity II",
            RowFamily::Targeting => "Targeting",
            RowFamily::Auxiliary => "Auxiliary",
            RowFamily::Generic => "Generic",
        };
        f.write_str(name)
    }
}

/// Read access to a box-constrained LP `min c·x, Gx ≤ h, 0 ≤ x ≤ u`.
pub trait BoxedLp {
    fn matrix(&self) -> &SparseMatrix;
    fn cost(&self) -> &[f64];
    fn rhs(&self) -> &[f64];
    fn upper(&self, col: usize) -> f64;

    fn n_cols(&self) -> usize {
        self.matrix().n_cols()
    }

    fn n_rows(&self) -> usize {
        self.matrix().n_rows()
    }
}

/// A compiled LP. Variable bounds are always `[0, 1]` and are not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardLp {
    pub objective: Vec<f64>,
    pub constraints: SparseMatrix,
    pub rhs: Vec<f64>,
    pub column_labels: Vec<ColumnLabel>,
    pub row_families: Vec<RowFamily>,
}

impl BoxedLp for StandardLp {
    fn matrix(&self) -> &SparseMatrix {
        &self.constraints
    }
    fn cost(&self) -> &[f64] {
        &self.objective
    }
    fn rhs(&self) -> &[f64] {
        &self.rhs
    }
    fn upper(&self, _col: usize) -> f64 {
        1.0
    }
}

/// JSON layout of an LP file: the triplet matrix plus objective, rhs and labels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpFile {
    pub n_rows: usize,
    pub n_cols: usize,
    pub entries: Vec<(usize, usize, f64)>,
    pub objective: Vec<f64>,
    pub rhs: Vec<f64>,
    #[serde(default)]
    pub column_labels: Vec<ColumnLabel>,
    #[serde(default)]
    pub row_families: Vec<RowFamily>,
}

impl StandardLp {
    /// Assembles an LP and checks that all dimensions agree.
    pub fn new(
        objective: Vec<f64>,
        constraints: SparseMatrix,
        rhs: Vec<f64>,
        column_labels: Vec<ColumnLabel>,
        row_families: Vec<RowFamily>,
    ) -> Result<Self> {
        let dims = [
            ("objective", constraints.n_cols(), objective.len()),
            ("rhs", constraints.n_rows(), rhs.len()),
            ("column labels", constraints.n_cols(), column_labels.len()),
            ("row families", constraints.n_rows(), row_families.len()),
        ];
        for (context, expected, actual) in dims {
            if expected != actual {
                return Err(Error::DimensionMismatch {
                    context,
                    expected,
                    actual,
                });
            }
        }
        if objective.iter().chain(&rhs).chain(constraints.values()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("LP data"));
        }
        Ok(Self {
            objective,
            constraints,
            rhs,
            column_labels,
            row_families,
        })
    }

    /// LP without domain labels.
    pub fn unlabeled(objective: Vec<f64>, constraints: SparseMatrix, rhs: Vec<f64>) -> Result<Self> {
        let labels = (0..constraints.n_cols()).map(|index| ColumnLabel::Generic { index }).collect();
        let families = vec![RowFamily::Generic; constraints.n_rows()];
        Self::new(objective, constraints, rhs, labels, families)
    }

    pub fn n_cols(&self) -> usize {
        self.constraints.n_cols()
    }

    pub fn n_rows(&self) -> usize {
        self.constraints.n_rows()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Number of rows per family, in emission order, skipping families with no rows.
    pub fn family_counts(&self) -> Vec<(RowFamily, usize)> {
        RowFamily::ALL
            .iter()
            .map(|&f| (f, self.row_families.iter().filter(|&&r| r == f).count()))
            .filter(|&(_, n)| n > 0)
            .collect()
    }

    pub fn to_file(&self) -> LpFile {
        let TripletFile {
            n_rows,
            n_cols,
            entries,
        } = self.constraints.to_triplet_file();
        LpFile {
            n_rows,
            n_cols,
            entries,
            objective: self.objective.clone(),
            rhs: self.rhs.clone(),
            column_labels: self.column_labels.clone(),
            row_families: self.row_families.clone(),
        }
    }

    pub fn from_file(file: LpFile) -> Result<Self> {
        let matrix = SparseMatrix::from_triplets(file.n_rows, file.n_cols, &file.entries)?;
        let labels = if file.column_labels.is_empty() {
            (0..file.n_cols).map(|index| ColumnLabel::Generic { index }).collect()
        } else {
            file.column_labels
        };
        let families = if file.row_families.is_empty() {
            vec![RowFamily::Generic; file.n_rows]
        } else {
            file.row_families
        };
        Self::new(file.objective, matrix, file.rhs, labels, families)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_file())?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(json)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_keeps_labels() {
        let m = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 1, 0.1)]).unwrap();
        let lp = StandardLp::new(
            vec![-1.0, 2.5],
            m,
            vec![1.0, 0.3],
            vec![
                ColumnLabel::Customer { customer: 0, action: 0 },
                ColumnLabel::Segment { segment: 3, action: 1 },
            ],
            vec![RowFamily::VolumeOne, RowFamily::Targeting],
        )
        .unwrap();
        let back = StandardLp::from_json(&lp.to_json().unwrap()).unwrap();
        assert_eq!(back, lp);
    }

    #[test]
    fn dimension_checks() {
        let m = SparseMatrix::identity(2);
        assert!(StandardLp::unlabeled(vec![1.0], m.clone(), vec![0.0, 0.0]).is_err());
        assert!(StandardLp::unlabeled(vec![1.0, 1.0], m.clone(), vec![0.0]).is_err());
        assert!(StandardLp::unlabeled(vec![f64::NAN, 1.0], m, vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn bare_triplet_json_is_accepted() {
        let json = r#"{"n_rows":1,"n_cols":1,"entries":[[0,0,1.0]],"objective":[-5.0],"rhs":[1.0]}"#;
        let lp = StandardLp::from_json(json).unwrap();
        assert_eq!(lp.column_labels, vec![ColumnLabel::Generic { index: 0 }]);
        assert_eq!(lp.family_counts(), vec![(RowFamily::Generic, 1)]);
    }
}
