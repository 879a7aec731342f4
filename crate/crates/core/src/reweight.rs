//! Reweighting functions `ψ`, mapping `(u-block, v-block)` to the next weight block.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default smoothing for `irls_eps_alpha` when the config omits it.
pub const DEFAULT_IRLS_EPS: f64 = 1e-6;
/// Default exponent for `irls_eps_alpha` when the config omits it.
pub const DEFAULT_IRLS_ALPHA: f64 = 0.5;

fn default_eps() -> f64 {
    DEFAULT_IRLS_EPS
}

fn default_alpha() -> f64 {
    DEFAULT_IRLS_ALPHA
}

/// Whether the asymptotic characterization is guaranteed to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Guarantee {
    #[serde(rename = "within_guarantee")]
    Within,
    #[serde(rename = "outside_guarantee")]
    Outside,
}

impl Guarantee {
    pub fn as_str(self) -> &'static str {
        match self {
            Guarantee::Within => "within_guarantee",
            Guarantee::Outside => "outside_guarantee",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReweightSpec {
    /// Alternating minimization: `ψ(u, v) = u`.
    Am,
    /// Reparameterized IRLS: `(u²v² + ε)^α` with fixed `ε`.
    IrlsEpsAlpha {
        #[serde(default = "default_eps")]
        eps: f64,
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    /// `|uv|^{1/2}`
    SqrtAbs,
    /// `tanh|uv|`
    TanhAbs,
    /// `tanh(u²)`
    TanhSq,
    /// `|uv|`, unbounded.
    AbsUv,
    /// `u²`, unbounded.
    USq,
    /// `tanh|u ⊙ v|` entry-wise; ignores block structure.
    GroupBlindTanh,
    /// `((1/b) Σ_j tanh|u_j v_j|) 1_b`.
    GroupAwareTanh,
}

impl ReweightSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ReweightSpec::Am => "am",
            ReweightSpec::IrlsEpsAlpha { .. } => "irls_eps_alpha",
            ReweightSpec::SqrtAbs => "sqrt_abs",
            ReweightSpec::TanhAbs => "tanh_abs",
            ReweightSpec::TanhSq => "tanh_sq",
            ReweightSpec::AbsUv => "abs_uv",
            ReweightSpec::USq => "u_sq",
            ReweightSpec::GroupBlindTanh => "group_blind_tanh",
            ReweightSpec::GroupAwareTanh => "group_aware_tanh",
        }
    }

    pub(crate) fn validate(&self) -> std::result::Result<(), String> {
        if let ReweightSpec::IrlsEpsAlpha { eps, alpha } = self {
            if !(*eps > 0.0 && eps.is_finite()) {
                return Err(format!("eps must be positive, got {eps}"));
            }
            if !alpha.is_finite() {
                return Err(format!("alpha must be finite, got {alpha}"));
            }
        }
        Ok(())
    }

    /// Coverage by the convergence guarantee: `ψ` continuous and bounded, or `ψ²` PL(2).
    pub fn guarantee(&self) -> Guarantee {
        guarantee_of(self)
    }

    /// Apply `ψ` to one block, writing the new weights into `out`.
    ///
    /// All three slices must have the block length; this is the unchecked
    /// hot path used by the simulator and the state evolution.
    #[inline]
    pub fn apply_into(&self, u: &[f64], v: &[f64], out: &mut [f64]) {
        debug_assert!(u.len() == v.len() && v.len() == out.len());
        match *self {
            ReweightSpec::Am => out.copy_from_slice(u),
            ReweightSpec::IrlsEpsAlpha { eps, alpha } => {
                for ((o, &ui), &vi) in out.iter_mut().zip(u).zip(v) {
                    *o = (ui * ui * vi * vi + eps).powf(alpha);
                }
            }
            ReweightSpec::SqrtAbs => {
                for ((o, &ui), &vi) in out.iter_mut().zip(u).zip(v) {
                    *o = (ui * vi).abs().sqrt();
                }
            }
            ReweightSpec::TanhAbs | ReweightSpec::GroupBlindTanh => {
                for ((o, &ui), &vi) in out.iter_mut().zip(u).zip(v) {
                    *o = (ui * vi).abs().tanh();
                }
            }
            ReweightSpec::TanhSq => {
                for (o, &ui) in out.iter_mut().zip(u) {
                    *o = (ui * ui).tanh();
                }
            }
            ReweightSpec::AbsUv => {
                for ((o, &ui), &vi) in out.iter_mut().zip(u).zip(v) {
                    *o = (ui * vi).abs();
                }
            }
            ReweightSpec::USq => {
                for (o, &ui) in out.iter_mut().zip(u) {
                    *o = ui * ui;
                }
            }
            ReweightSpec::GroupAwareTanh => {
                let sum: f64 = u.iter().zip(v).map(|(&ui, &vi)| (ui * vi).abs().tanh()).sum();
                out.fill(sum / u.len() as f64);
            }
        }
    }

    /// `ψ` at block size one.
    #[inline]
    pub fn apply_scalar(&self, u: f64, v: f64) -> f64 {
        match *self {
            ReweightSpec::Am => u,
            ReweightSpec::IrlsEpsAlpha { eps, alpha } => (u * u * v * v + eps).powf(alpha),
            ReweightSpec::SqrtAbs => (u * v).abs().sqrt(),
            ReweightSpec::TanhAbs | ReweightSpec::GroupBlindTanh | ReweightSpec::GroupAwareTanh => {
                (u * v).abs().tanh()
            }
            ReweightSpec::TanhSq => (u * u).tanh(),
            ReweightSpec::AbsUv => (u * v).abs(),
            ReweightSpec::USq => u * u,
        }
    }

    /// Apply `ψ` to a whole vector block by block (`u.len()` a multiple of `b`).
    pub fn apply_blockwise(&self, u: &[f64], v: &[f64], b: usize) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        for ((ub, vb), ob) in u.chunks_exact(b).zip(v.chunks_exact(b)).zip(out.chunks_exact_mut(b)) {
            self.apply_into(ub, vb, ob);
        }
        out
    }
}

/// `ψ(u_block, v_block)` with length checking.
pub fn apply_psi(spec: &ReweightSpec, u_block: &[f64], v_block: &[f64]) -> Result<Vec<f64>> {
    if u_block.len() != v_block.len() {
        return Err(Error::LengthMismatch {
            expected: u_block.len(),
            actual: v_block.len(),
        });
    }
    let mut out = vec![0.0; u_block.len()];
    spec.apply_into(u_block, v_block, &mut out);
    Ok(out)
}

pub fn guarantee_of(spec: &ReweightSpec) -> Guarantee {
    match spec {
        ReweightSpec::Am
        | ReweightSpec::SqrtAbs
        | ReweightSpec::TanhAbs
        | ReweightSpec::TanhSq
        | ReweightSpec::GroupBlindTanh
        | ReweightSpec::GroupAwareTanh => Guarantee::Within,
        // (u²v²+ε)^{2α} grows like |uv|^{4α}: PL(2) needs 4α ≤ 2.
        ReweightSpec::IrlsEpsAlpha { alpha, .. } if *alpha <= 0.5 => Guarantee::Within,
        ReweightSpec::IrlsEpsAlpha { .. } | ReweightSpec::AbsUv | ReweightSpec::USq => {
            Guarantee::Outside
        }
    }
}
