//! CAR checks and the operator inequalities for `dΓ` and pair operators.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::rdm::random_vector;
use super::{d_gamma, ladder, pair_annihilation, pair_creation, FockOperator, FockSpace, FockVector, LadderKind};
use crate::diagnostics::{hs_norm, trace_norm};
use crate::error::Result;
use crate::linalg::{singular_values, CMatrix};

/// Largest deviation from `{a_x, a*_y} = δ_xy` and `{a_x, a_y} = {a*_x, a*_y} = 0`.
pub fn car_defect(space: FockSpace) -> Result<f64> {
    let l = space.l_sites();
    let ann = (0..l).map(|x| ladder(space, x, LadderKind::Annihilate)).collect::<Result<Vec<_>>>()?;
    let cre = (0..l).map(|x| ladder(space, x, LadderKind::Create)).collect::<Result<Vec<_>>>()?;
    let id = FockOperator::identity(space.dim());
    let mut worst: f64 = 0.0;
    for x in 0..l {
        for y in 0..l {
            let mixed = ann[x].anticommutator(&cre[y]);
            let mixed = if x == y { mixed.sub(&id) } else { mixed };
            worst = worst.max(mixed.max_abs());
            worst = worst.max(ann[x].anticommutator(&ann[y]).max_abs());
            worst = worst.max(cre[x].anticommutator(&cre[y]).max_abs());
        }
    }
    Ok(worst)
}

/// Outcome of one inequality over all trials. The slack is `rhs - lhs`.
#[derive(Clone, Debug, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub violations: usize,
    pub worst_slack: f64,
    pub worst_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundsReport {
    pub l_sites: usize,
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub checks: Vec<BoundCheck>,
}

impl BoundsReport {
    pub fn total_violations(&self) -> usize {
        self.checks.iter().map(|c| c.violations).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

const NAMES: [&str; 7] = [
    "dgamma_op_number",
    "dgamma_hs_sqrt_number",
    "pair_annihilation_hs",
    "pair_creation_hs",
    "dgamma_trace_class",
    "pair_annihilation_trace_class",
    "pair_creation_trace_class",
];

pub const BOUND_TOLERANCE: f64 = 1e-10;

fn operator_norm(op: &FockOperator) -> Result<f64> {
    Ok(singular_values(&op.to_dense())?[0])
}

fn weighted_norm(psi: &FockVector, f: impl Fn(f64) -> f64) -> f64 {
    psi.amplitudes
        .iter()
        .enumerate()
        .map(|(b, z)| z.norm_sqr() * f(b.count_ones() as f64).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Checks the seven inequalities
///
/// * `‖dΓ(O)ψ‖ ≤ ‖O‖ ‖𝒩ψ‖`
/// * `‖dΓ(O)ψ‖ ≤ ‖O‖_HS ‖𝒩^{1/2}ψ‖`
/// * `‖Σ O_xy a_x a_y ψ‖ ≤ ‖O‖_HS ‖𝒩^{1/2}ψ‖`
/// * `‖Σ O_xy a*_x a*_y ψ‖ ≤ 2‖O‖_HS ‖(𝒩+1)^{1/2}ψ‖`
/// * `‖dΓ(O)‖`, `‖Σ O a a‖`, `‖Σ O a* a*‖ ≤ 2‖O‖_tr`
///
/// on random complex `O` and random normalized `ψ`. Fock operator norms are
/// exact, from a dense SVD.
pub fn verify_operator_bounds(space: FockSpace, trials: usize, seed: u64) -> Result<BoundsReport> {
    if trials == 0 {
        return Err(crate::error::Error::InvalidArgument("trials must be at least 1".into()));
    }
    let l = space.l_sites();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks: Vec<BoundCheck> = NAMES
        .iter()
        .map(|n| BoundCheck { name: n.to_string(), violations: 0, worst_slack: f64::INFINITY, worst_ratio: 0.0 })
        .collect();
    for _ in 0..trials {
        let scale = rng.gen_range(0.1..3.0);
        let o = CMatrix::from_fn(l, l, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale);
        let psi = random_vector(space, &mut rng);
        let dg = d_gamma(space, &o)?;
        let pa = pair_annihilation(space, &o)?;
        let pc = pair_creation(space, &o)?;
        let op = singular_values(&o)?[0];
        let hs = hs_norm(&o);
        let tr = trace_norm(&o)?;
        let n1 = weighted_norm(&psi, |n| n);
        let nh = weighted_norm(&psi, |n| n.sqrt());
        let nh1 = weighted_norm(&psi, |n| (n + 1.0).sqrt());
        let dg_psi = dg.apply(&psi).norm();
        let pairs = [
            (dg_psi, op * n1),
            (dg_psi, hs * nh),
            (pa.apply(&psi).norm(), hs * nh),
            (pc.apply(&psi).norm(), 2.0 * hs * nh1),
            (operator_norm(&dg)?, 2.0 * tr),
            (operator_norm(&pa)?, 2.0 * tr),
            (operator_norm(&pc)?, 2.0 * tr),
        ];
        for (check, (lhs, rhs)) in checks.iter_mut().zip(pairs) {
            let slack = rhs - lhs;
            if slack < -BOUND_TOLERANCE {
                check.violations += 1;
            }
            check.worst_slack = check.worst_slack.min(slack);
            if rhs > 0.0 {
                check.worst_ratio = check.worst_ratio.max(lhs / rhs);
            }
        }
    }
    Ok(BoundsReport { l_sites: l, trials, seed, tolerance: BOUND_TOLERANCE, checks })
}
