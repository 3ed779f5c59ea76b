//! Closed-form asymptotic quantities of the EB-tuned regularized estimator.

pub mod expansion;
pub mod moments;
pub mod report;
pub mod theorems;

pub use expansion::{condition_bounds, expansion_terms, ConditionBounds, ExpansionTerms};
pub use moments::{c_gamma, c_gamma_series, sigma_matrix, SecondOrderStats};
pub use report::{
    first_decrease, generic_report, generic_report_at, ridge_report, sweep, unit_lambda1_filter,
    AsymptoticReport, ReportSummary, SweepRow,
};
pub use theorems::{
    eta_star, theorem1, theorem2, theorem3, Theorem1, Theorem2, Theorem3, WbObjective,
};

/// Row-major `Vec<Vec<f64>>` (de)serialization of dense matrices.
pub mod serde_mat {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::linalg::{matrix_to_rows, Mat};

    pub fn serialize<S: Serializer>(m: &Mat, s: S) -> Result<S::Ok, S::Error> {
        matrix_to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Mat, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err(serde::de::Error::custom("ragged matrix rows"));
        }
        Ok(Mat::from_fn(r, c, |i, j| rows[i][j]))
    }
}

pub mod serde_vec {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::linalg::Vector;

    pub fn serialize<S: Serializer>(v: &Vector, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vector, D::Error> {
        Ok(Vector::from_vec(Vec::<f64>::deserialize(d)?))
    }
}
