use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::cvem::config::TrainConfig;
use crate::cvem::state::VariationalState;
use crate::error::{CerfError, Result};
use crate::numerics::{cholesky, cholesky_solve, prox_spectral};

/// ADMM state after an M-step: consensus variable V, dual U, penalty μ,
/// regularization weight α, and convergence telemetry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdmmState {
    pub v: Array2<f64>,
    pub u: Array2<f64>,
    pub mu: f64,
    pub alpha: f64,
    pub iterations: usize,
    pub primal_residual: f64,
}

/// M-step: minimize ‖Φ′ − cVΨ̄′‖²_F/2 + α‖W‖₂ over the split (W, V) with
/// the consensus constraint W = V, where Ψ̄ = E[Z] ⊙ Ψ.
///
/// In the column-stacked convention the V update is
/// `V(c²Ψ̄′Ψ̄′ᵀ + μI) = cΦ′Ψ̄′ᵀ + μW + U`; with row-major feature matrices
/// the Gram factors become ΦᵀΨ̄ and Ψ̄ᵀΨ̄. The linear-system factor is
/// cached across iterations. W is the spectral prox of V − U/μ with
/// parameter α/μ, and U ascends by μ(W − V). Stops when
/// ‖W − V‖_F/√K ≤ primal_tol.
pub fn mstep_admm(
    phi: &Array2<f64>,
    psi: &Array2<f64>,
    state: &VariationalState,
    w_init: &Array2<f64>,
    alpha: f64,
    cfg: &TrainConfig,
) -> Result<(Array2<f64>, AdmmState)> {
    let (n, k) = phi.dim();
    if psi.dim() != (n, k) || state.nu.dim() != (n, k) {
        return Err(CerfError::DimensionMismatch(
            "mstep inputs must share the N×K shape".into(),
        ));
    }
    if w_init.dim() != (k, k) {
        return Err(CerfError::DimensionMismatch(format!(
            "W must be {k}x{k}, got {:?}",
            w_init.dim()
        )));
    }
    let mu = cfg.admm.mu;
    if !(mu > 0.0) {
        return Err(CerfError::SingularSystem);
    }
    let c = cfg.scale(k);

    let psi_bar = &state.nu * psi;
    // c²Ψ̄ᵀΨ̄ + μI is positive definite for μ > 0.
    let mut gram = psi_bar.t().dot(&psi_bar) * (c * c);
    for i in 0..k {
        gram[(i, i)] += mu;
    }
    let factor = cholesky(&gram)?;
    let rhs_base = phi.t().dot(&psi_bar) * c;

    let mut w = w_init.clone();
    let mut u = Array2::<f64>::zeros((k, k));
    let mut v = w.clone();
    let mut primal;
    let mut iters = 0;
    let sqrt_k = (k as f64).sqrt();
    loop {
        // V solves V·M = rhs + μW + U  ⇔  M·Vᵀ = (rhs + μW + U)ᵀ.
        let rhs = &rhs_base + &(&w * mu) + &u;
        let v_prev = v;
        v = cholesky_solve(&factor, &rhs.t().to_owned())?.t().to_owned();
        w = prox_spectral(&(&v - &(&u / mu)), alpha / mu)?;
        u = &u + &((&w - &v) * mu);
        iters += 1;
        primal = (&w - &v).iter().map(|x| x * x).sum::<f64>().sqrt() / sqrt_k;
        // The exact prox keeps W = V whenever α = 0, so the primal residual
        // alone cannot witness convergence of the quadratic block; require
        // the dual residual μ‖V − V_prev‖ to settle as well.
        let dual = (&v - &v_prev).iter().map(|x| x * x).sum::<f64>().sqrt() * mu / sqrt_k;
        if (primal <= cfg.admm.primal_tol && dual <= cfg.admm.primal_tol)
            || iters >= cfg.admm.max_iters
        {
            break;
        }
    }
    Ok((
        w.clone(),
        AdmmState {
            v,
            u,
            mu,
            alpha,
            iterations: iters,
            primal_residual: primal,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{cholesky, cholesky_solve, spectral_norm};
    use ndarray::Array2;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(max_iters: usize) -> TrainConfig {
        TrainConfig {
            c: Some(1.0),
            admm: crate::cvem::config::AdmmConfig {
                mu: 1.0,
                alpha0: 0.0,
                max_iters,
                primal_tol: 1e-7,
            },
            ..TrainConfig::default()
        }
    }

    fn random_problem(
        seed: u64,
        n: usize,
        k: usize,
    ) -> (Array2<f64>, Array2<f64>, VariationalState) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = Array2::from_shape_fn((n, k), |_| rng.gen::<f64>() - 0.5);
        let psi = Array2::from_shape_fn((n, k), |_| rng.gen::<f64>() - 0.5);
        let mut state = VariationalState::init(n, k, 1.0, 0.5);
        state
            .nu
            .iter_mut()
            .for_each(|v| *v = rng.gen::<f64>().clamp(0.05, 0.95));
        (phi, psi, state)
    }

    /// Normal-equation least squares: W = ΦᵀΨ̄ (Ψ̄ᵀΨ̄)⁻¹ for c = 1.
    fn least_squares_oracle(
        phi: &Array2<f64>,
        psi_bar: &Array2<f64>,
    ) -> Array2<f64> {
        let gram = psi_bar.t().dot(psi_bar);
        let l = cholesky(&gram).unwrap();
        let rhs = phi.t().dot(psi_bar);
        cholesky_solve(&l, &rhs.t().to_owned()).unwrap().t().to_owned()
    }

    #[test]
    fn alpha_zero_matches_least_squares() {
        for seed in 0..5 {
            let (phi, psi, state) = random_problem(seed, 200, 16);
            let cfg = cfg(400);
            let w0 = Array2::eye(16);
            let (w, admm) = mstep_admm(&phi, &psi, &state, &w0, 0.0, &cfg).unwrap();
            let psi_bar = &state.nu * &psi;
            let oracle = least_squares_oracle(&phi, &psi_bar);
            let num = (&w - &oracle).iter().map(|x| x * x).sum::<f64>().sqrt();
            let den = oracle.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(num / den < 1e-4, "seed {seed}: rel err {}", num / den);
            assert!(admm.primal_residual <= 1e-7);
        }
    }

    #[test]
    fn zero_residual_optimum_is_identity() {
        let (_, psi, state) = random_problem(7, 60, 8);
        let psi_bar = &state.nu * &psi;
        let phi = psi_bar.clone(); // Φ = c·Ψ̄ with c = 1
        let cfg = cfg(400);
        let (w, _) = mstep_admm(&phi, &psi, &state, &Array2::eye(8), 0.0, &cfg).unwrap();
        let eye = Array2::<f64>::eye(8);
        let err = (&w - &eye).iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(err < 1e-5, "err {err}");
    }

    #[test]
    fn stopping_contract() {
        let (phi, psi, state) = random_problem(3, 80, 6);
        let cfg = cfg(2000);
        let (_, admm) = mstep_admm(&phi, &psi, &state, &Array2::eye(6), 0.5, &cfg).unwrap();
        assert!(
            admm.primal_residual <= cfg.admm.primal_tol
                || admm.iterations == cfg.admm.max_iters
        );
    }

    #[test]
    fn large_alpha_keeps_spectral_ball_feasible() {
        let (phi, psi, state) = random_problem(11, 100, 6);
        let mut c = cfg(300);
        c.admm.primal_tol = 1e-8;
        let (w, _) = mstep_admm(&phi, &psi, &state, &Array2::eye(6), 50.0, &c).unwrap();
        assert!(spectral_norm(&w) <= 1.0 + 1e-9);
    }

    #[test]
    fn shape_errors() {
        let (phi, psi, state) = random_problem(0, 10, 4);
        let bad_w = Array2::eye(3);
        assert!(mstep_admm(&phi, &psi, &state, &bad_w, 0.0, &cfg(10)).is_err());
    }
}
