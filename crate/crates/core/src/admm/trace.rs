use std::fmt::Write;
use std::time::Duration;

/// One ADMM iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    /// Relative change of the primal iterate.
    pub e_t: f64,
    /// `‖K·l − z‖ / ‖z‖` after the z-update. Stands in for the objective,
    /// whose nuclear-norm term would need a full SVD per iteration.
    pub primal_residual: f64,
    /// ε used by the CPA backend; `None` for exact backends.
    pub epsilon: Option<f64>,
    pub nnz_phi: Option<usize>,
    pub shrink: Duration,
    /// Wall time since the solve started.
    pub total: Duration,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdmmTrace {
    pub records: Vec<IterRecord>,
    pub converged: bool,
    /// 1/ρ as requested by the caller.
    pub inv_rho_raw: f64,
    /// 1/ρ actually used; differs from the raw value when the problem
    /// rescales it.
    pub inv_rho_used: f64,
    /// Iteration whose iterate was returned.
    pub best_iter: usize,
}

impl AdmmTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn final_e_t(&self) -> Option<f64> {
        self.records.last().map(|r| r.e_t)
    }

    pub fn mean_shrink_time(&self) -> Duration {
        if self.records.is_empty() {
            return Duration::ZERO;
        }
        self.records.iter().map(|r| r.shrink).sum::<Duration>() / self.records.len() as u32
    }

    pub fn total_time(&self) -> Duration {
        self.records.last().map_or(Duration::ZERO, |r| r.total)
    }

    /// CSV with columns `iter,E_t,epsilon,nnz_phi,shrink_ms,total_ms`.
    /// Exact backends leave `epsilon` and `nnz_phi` empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,E_t,epsilon,nnz_phi,shrink_ms,total_ms\n");
        for r in &self.records {
            let eps = r.epsilon.map(|e| format!("{e:e}")).unwrap_or_default();
            let nnz = r.nnz_phi.map(|n| n.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{:e},{},{},{:.3},{:.3}",
                r.iter,
                r.e_t,
                eps,
                nnz,
                r.shrink.as_secs_f64() * 1e3,
                r.total.as_secs_f64() * 1e3
            );
        }
        out
    }
}
