//! CSV report formatting and atomic file output.
//!
//! Files are written to a temporary sibling and renamed into place, so a
//! failed run leaves no partial output behind.

use std::fs;
use std::path::Path;

use interleave_lab_core::analytic::ErrorPoint;
use interleave_lab_core::harness::{Rq1Report, Rq2Report};

use crate::CliError;

/// Writes bytes via a temporary sibling file and an atomic rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    let finish = fs::write(&tmp, contents)
        .and_then(|()| fs::rename(&tmp, path));
    if let Err(e) = finish {
        let _ = fs::remove_file(&tmp);
        return Err(CliError::io(format!("writing {}", path.display()), e));
    }
    Ok(())
}

/// Analytic sweep rows.
pub fn sweep_csv(points: &[ErrorPoint]) -> String {
    let mut out =
        String::from("alpha,er_a,er_b,n,delta_ab,delta_i,var_ab,var_i,p_err_ab,p_err_i,diff\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            p.scenario.alpha,
            p.scenario.er_a,
            p.scenario.er_b,
            p.scenario.n,
            p.ab.delta(),
            p.interleaved.delta(),
            p.ab.var_sum,
            p.interleaved.var_sum,
            p.p_err_ab,
            p.p_err_interleaved,
            p.diff
        ));
    }
    out
}

/// Impression-budget experiment rows, sorted by the leading columns.
pub fn rq1_csv(dataset: &str, report: &Rq1Report) -> String {
    let mut out = String::from(
        "dataset,click_model,method,impression,error_rate,n_pairs,repeats,seed\n",
    );
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            dataset,
            report.click_model,
            row.method,
            row.impression,
            row.error_rate,
            row.n_pairs,
            report.repeats,
            report.seed
        ));
    }
    out
}

/// Relevance-gap experiment rows, sorted by the leading columns.
pub fn rq2_csv(dataset: &str, report: &Rq2Report) -> String {
    let mut out = String::from(
        "dataset,click_model,method,ndcg_diff_lo,ndcg_diff_hi,error_rate,n_samples,seed\n",
    );
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            dataset,
            report.click_model,
            row.method,
            row.ndcg_diff_lo,
            row.ndcg_diff_hi,
            row.error_rate,
            row.n_samples,
            report.seed
        ));
    }
    out
}
