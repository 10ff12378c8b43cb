use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::cvem::config::TrainConfig;
use crate::cvem::estep::{elbo, estep_sweep};
use crate::cvem::mstep::mstep_admm;
use crate::cvem::state::{extract_selector, VariationalState};
use crate::error::{CerfError, Result};
use crate::features::Embedding;
use crate::numerics::{nearest_orthogonal, spectral_norm};

/// One stage of training telemetry, serialized as a JSON line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageDiag {
    pub stage: usize,
    pub elbo: f64,
    pub residual: f64,
    pub spectral_norm_w: f64,
    pub alpha: f64,
}

/// Result of running CVEM on a (teacher, learner) feature pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainOutput {
    /// Orthogonal transformation aligning the learner to the teacher.
    pub w: Array2<f64>,
    /// Shared binary feature selector, Σz = ⌈d_z·K⌉.
    pub z: Vec<bool>,
    /// Scale c.
    pub c: f64,
    pub state: VariationalState,
    pub trace: Vec<StageDiag>,
    pub final_residual: f64,
}

/// The deployable artifact: a learner embedding together with the trained
/// transformation, selector, and scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedCerf {
    pub learner: Embedding,
    pub w: Array2<f64>,
    pub z: Vec<bool>,
    pub c: f64,
    pub trace: Vec<StageDiag>,
    pub final_residual: f64,
}

fn teacher_residual(
    phi: &Array2<f64>,
    psi: &Array2<f64>,
    nu: &Array2<f64>,
    w: &Array2<f64>,
    c: f64,
) -> f64 {
    let psi_bar = nu * psi;
    let approx = psi_bar.dot(&w.t()) * c;
    let num = (phi - &approx).iter().map(|x| x * x).sum::<f64>().sqrt();
    let den = phi.iter().map(|x| x * x).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

/// Constrained variational EM on teacher features Φ and learner features Ψ
/// (both N×K, same samples).
///
/// Alternates `e_sweeps` mean-field sweeps with one ADMM M-step per stage,
/// doubling α whenever the post-M-step spectral norm exceeds 1.01 and
/// halving it below 0.99. Every stage's W is scored by the residual of its
/// Procrustes orthogonalization — the quantity that survives deployment —
/// and the best-scoring (W, variational state) snapshot wins; the loop
/// stops early once that score has not improved for five stages. The
/// winning orthogonal W is then frozen for `post_stages` E-step-only
/// stages before the selector is extracted.
pub fn train(
    phi: &Array2<f64>,
    psi: &Array2<f64>,
    cfg: &TrainConfig,
) -> Result<TrainOutput> {
    cfg.validate()?;
    let (n, k) = phi.dim();
    if psi.dim() != (n, k) {
        return Err(CerfError::DimensionMismatch(format!(
            "teacher is {:?}, learner is {:?}",
            phi.dim(),
            psi.dim()
        )));
    }
    let c = cfg.scale(k);
    let mut state = VariationalState::init(n, k, cfg.gamma, cfg.target_density);
    let mut w = Array2::<f64>::eye(k);
    let mut alpha = cfg.admm.alpha0;
    let mut trace = Vec::new();
    let mut best: Option<(f64, Array2<f64>, VariationalState)> = None;
    let mut stale = 0usize;

    for stage in 0..cfg.max_stages {
        for _ in 0..cfg.e_sweeps {
            estep_sweep(phi, psi, &w, &mut state, cfg)?;
        }
        let (w_new, _admm) = mstep_admm(phi, psi, &state, &w, alpha, cfg)?;
        w = w_new;
        let sn = spectral_norm(&w);
        if sn > 1.01 {
            alpha *= 2.0;
        } else if sn < 0.99 {
            // The penalty overshot and is pinching W inside the ball; back
            // off so the iterate can settle on the boundary, where the
            // Procrustes projection is nearly a no-op.
            alpha *= 0.5;
        }
        // Score this stage by what actually ships: the residual after the
        // iterate is snapped to the orthogonal set. The raw residual can be
        // much lower while ‖W‖₂ is penalized high and lose it all in the
        // projection. A rank-deficient iterate has no orthogonal projection;
        // such stages simply cannot win the snapshot.
        let (w_orth, residual) = match nearest_orthogonal(&w) {
            Ok(w_orth) => {
                let r = teacher_residual(phi, psi, &state.nu, &w_orth, c);
                (Some(w_orth), r)
            }
            Err(_) => (None, f64::INFINITY),
        };
        let bound = elbo(phi, psi, &state, &w, cfg)?;
        if !bound.is_finite() {
            return Err(CerfError::Numerical(format!(
                "ELBO became non-finite at stage {stage} (residual {residual:.3e}, \
                 spectral norm {sn:.3e})"
            )));
        }
        trace.push(StageDiag {
            stage,
            elbo: bound,
            residual,
            spectral_norm_w: sn,
            alpha,
        });
        let improved = residual.is_finite()
            && best.as_ref().map_or(true, |(r, _, _)| residual < *r - 1e-4 * r);
        if improved {
            best = Some((residual, w_orth.expect("finite residual implies projection"), state.clone()));
            stale = 0;
        } else {
            stale += 1;
            if stale >= 5 {
                break;
            }
        }
    }

    if let Some((_, w_best, state_best)) = best {
        w = w_best;
        state = state_best;
    } else {
        w = nearest_orthogonal(&w)?;
    }
    let base_stage = trace.len();
    for post in 0..cfg.post_stages {
        for _ in 0..cfg.e_sweeps {
            estep_sweep(phi, psi, &w, &mut state, cfg)?;
        }
        let residual = teacher_residual(phi, psi, &state.nu, &w, c);
        let bound = elbo(phi, psi, &state, &w, cfg)?;
        if !bound.is_finite() {
            return Err(CerfError::Numerical(
                "ELBO became non-finite during post-orthogonalization stages".into(),
            ));
        }
        trace.push(StageDiag {
            stage: base_stage + post,
            elbo: bound,
            residual,
            spectral_norm_w: 1.0,
            alpha,
        });
    }

    let z = extract_selector(&state, cfg.target_density)?;
    let final_residual = teacher_residual(phi, psi, &state.nu, &w, c);
    Ok(TrainOutput {
        w,
        z,
        c,
        state,
        trace,
        final_residual,
    })
}

/// Train a deployable CERF: embeds the data with both maps and packages the
/// learner with the trained transformation.
pub fn train_embedding(
    teacher: &Embedding,
    learner: Embedding,
    data: &Array2<f64>,
    cfg: &TrainConfig,
) -> Result<TrainedCerf> {
    let phi = teacher.embed(&data.view())?;
    let psi = learner.embed(&data.view())?;
    if phi.ncols() != psi.ncols() {
        return Err(CerfError::DimensionMismatch(format!(
            "teacher has {} features but learner has {}",
            phi.ncols(),
            psi.ncols()
        )));
    }
    let out = train(&phi, &psi, cfg)?;
    Ok(TrainedCerf {
        learner,
        w: out.w,
        z: out.z,
        c: out.c,
        trace: out.trace,
        final_residual: out.final_residual,
    })
}

impl TrainedCerf {
    /// Deployed feature map: rows of c·W(z ⊙ ψ(x)).
    pub fn features(&self, data: &ndarray::ArrayView2<f64>) -> Result<Array2<f64>> {
        let psi = self.learner.embed(data)?;
        let mut masked = psi;
        for (j, &keep) in self.z.iter().enumerate() {
            if !keep {
                masked.column_mut(j).fill(0.0);
            }
        }
        Ok(masked.dot(&self.w.t()) * self.c)
    }

    /// MAC cost of a deployed evaluation (selected features only).
    pub fn mac_cost(&self) -> Result<u64> {
        self.learner.mac_cost_selected(&self.z)
    }

    /// Serialize the per-stage diagnostics as JSON lines.
    pub fn trace_jsonl(&self) -> String {
        self.trace
            .iter()
            .map(|d| serde_json::to_string(d).expect("diagnostics serialize"))
            .collect::<Vec<_>>()
            .join("\n")
    }
}
