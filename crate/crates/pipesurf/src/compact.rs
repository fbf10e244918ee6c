//! The fourth-order compact machinery: four smoothing operators, five scheme
//! blocks, the composed right-hand side, and a stencil emitter for assembly.
//!
//! Every block is a sum of terms of the shape
//!
//! ```text
//! factor · hθ^a · hω^b · β^c · [denominator] · Op₁(Op₂(... u))
//! ```
//!
//! with each factor an elementary difference operator (central gradient,
//! second difference, half-node flux divergence, or a wide cross gradient)
//! optionally weighted by a coefficient field. The same term tables drive
//! both the matrix-free application and the per-row stencil emitter, and the
//! two are cross-checked against each other in the tests.

use serde::{Deserialize, Serialize};

use crate::discrete::{Grid, GridFunction, Staggering};
use crate::fields::{CoefficientFields, HaloField};
use crate::{Error, Result};

/// Names a coefficient array inside [`CoefficientFields`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FieldRef {
    PThetaHalf,
    PTildeThetaHalf,
    PHatThetaHalf,
    PHatSqThetaHalf,
    QThetaHalf,
    QOmegaHalf,
    QTildeOmegaHalf,
    QHatOmegaHalf,
    QHatSqOmegaHalf,
    QNode,
    QTildeNode,
    QHatNode,
    QHatSqNode,
    QTilde1Node,
    QHat1Node,
    QHat1SqNode,
    QBarNode,
    VarpiNode,
    DpOverPTheta,
    DqOverQTheta,
    DqOverQOmega,
}

fn field(c: &CoefficientFields, r: FieldRef) -> &HaloField {
    match r {
        FieldRef::PThetaHalf => &c.p_theta_half,
        FieldRef::PTildeThetaHalf => &c.p_tilde_theta_half,
        FieldRef::PHatThetaHalf => &c.p_hat_theta_half,
        FieldRef::PHatSqThetaHalf => &c.p_hat_sq_theta_half,
        FieldRef::QThetaHalf => &c.q_theta_half,
        FieldRef::QOmegaHalf => &c.q_omega_half,
        FieldRef::QTildeOmegaHalf => &c.q_tilde_omega_half,
        FieldRef::QHatOmegaHalf => &c.q_hat_omega_half,
        FieldRef::QHatSqOmegaHalf => &c.q_hat_sq_omega_half,
        FieldRef::QNode => &c.q_node,
        FieldRef::QTildeNode => &c.q_tilde_node,
        FieldRef::QHatNode => &c.q_hat_node,
        FieldRef::QHatSqNode => &c.q_hat_sq_node,
        FieldRef::QTilde1Node => &c.q_tilde1_node,
        FieldRef::QHat1Node => &c.q_hat1_node,
        FieldRef::QHat1SqNode => &c.q_hat1_sq_node,
        FieldRef::QBarNode => &c.q_bar_node,
        FieldRef::VarpiNode => &c.varpi_node,
        FieldRef::DpOverPTheta => &c.dp_over_p_theta,
        FieldRef::DqOverQTheta => &c.dq_over_q_theta,
        FieldRef::DqOverQOmega => &c.dq_over_q_omega,
    }
}

/// One elementary operator factor inside a term chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    /// Pointwise multiplication by a node field.
    Scale(FieldRef),
    /// ∇θ, central difference over 2hθ.
    GradTheta,
    /// ∇ω, central difference over 2hω.
    GradOmega,
    /// δθ², second difference over hθ².
    SecondTheta,
    /// δω².
    SecondOmega,
    /// δθ(c δθ ·) with c at θ-half nodes.
    FluxTheta(FieldRef),
    /// δω(c δω ·) with c at ω-half nodes.
    FluxOmega(FieldRef),
    /// ∇θ(c ∇θ ·) with node c; reaches ±2 in θ.
    CrossTT(FieldRef),
    /// ∇θ(c ∇ω ·) with node c.
    CrossTW(FieldRef),
    /// ∇ω(c ∇θ ·) with node c.
    CrossWT(FieldRef),
    /// ∇ω(c ∇ω ·) with node c; reaches ±2 in ω.
    CrossWW(FieldRef),
}

impl Op {
    fn omega_reach(self) -> isize {
        match self {
            Op::Scale(_) | Op::GradTheta | Op::SecondTheta | Op::FluxTheta(_) | Op::CrossTT(_) => {
                0
            }
            Op::GradOmega | Op::SecondOmega | Op::FluxOmega(_) => 1,
            Op::CrossTW(_) | Op::CrossWT(_) => 1,
            Op::CrossWW(_) => 2,
        }
    }
}

/// Extra scalar denominator carried by stabilizer terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Denom {
    One,
    /// Divide by ρ₀ (pointwise field or the global minimum, per options).
    Rho0,
    /// Divide by the global constant η₀.
    Eta0,
}

/// One additive term of a block.
#[derive(Debug, Clone, Copy)]
struct Term {
    factor: f64,
    ht_pow: u32,
    hw_pow: u32,
    beta_pow: u32,
    denom: Denom,
    /// Leftmost entry applied last.
    chain: &'static [Op],
}

const fn t(
    factor: f64,
    ht_pow: u32,
    hw_pow: u32,
    beta_pow: u32,
    denom: Denom,
    chain: &'static [Op],
) -> Term {
    Term {
        factor,
        ht_pow,
        hw_pow,
        beta_pow,
        denom,
        chain,
    }
}

/// The five additive pieces of the scheme operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    /// Second-order conservative core: fluxes, mixed gradients, reaction.
    Principal,
    /// h² corrections built from tilde fields and the reaction term.
    CoefficientCorrection,
    /// h² corrections that wrap fluxes in logarithmic-derivative ratios.
    RatioCorrection,
    /// Second differences of the hatted fluxes (entering with minus sign).
    FluxSecondDifference,
    /// h⁴ symmetrizing term that guarantees solvability.
    Stabilizer,
}

impl Block {
    pub const ALL: [Block; 5] = [
        Block::Principal,
        Block::CoefficientCorrection,
        Block::RatioCorrection,
        Block::FluxSecondDifference,
        Block::Stabilizer,
    ];

    /// Sign with which the block enters the scheme operator.
    pub fn scheme_sign(self) -> f64 {
        match self {
            Block::FluxSecondDifference => -1.0,
            _ => 1.0,
        }
    }

    fn terms(self) -> &'static [Term] {
        match self {
            Block::Principal => PRINCIPAL,
            Block::CoefficientCorrection => COEFFICIENT_CORRECTION,
            Block::RatioCorrection => RATIO_CORRECTION,
            Block::FluxSecondDifference => FLUX_SECOND_DIFFERENCE,
            Block::Stabilizer => STABILIZER,
        }
    }
}

const PRINCIPAL: &[Term] = &[
    t(-1.0, 0, 0, 0, Denom::One, &[Op::FluxTheta(FieldRef::PThetaHalf)]),
    t(-1.0, 0, 0, 0, Denom::One, &[Op::FluxOmega(FieldRef::QOmegaHalf)]),
    t(1.0, 0, 0, 1, Denom::One, &[Op::CrossWT(FieldRef::QNode)]),
    t(1.0, 0, 0, 1, Denom::One, &[Op::CrossTW(FieldRef::QNode)]),
    t(1.0, 0, 0, 0, Denom::One, &[Op::Scale(FieldRef::VarpiNode)]),
];

const COEFFICIENT_CORRECTION: &[Term] = &[
    t(1.0 / 12.0, 2, 0, 0, Denom::One, &[Op::FluxTheta(FieldRef::PTildeThetaHalf)]),
    t(1.0 / 12.0, 0, 2, 0, Denom::One, &[Op::FluxOmega(FieldRef::QTildeOmegaHalf)]),
    t(-1.0 / 3.0, 2, 0, 1, Denom::One, &[Op::CrossWT(FieldRef::QTilde1Node)]),
    t(-1.0 / 3.0, 0, 2, 1, Denom::One, &[Op::CrossTW(FieldRef::QTildeNode)]),
    t(5.0 / 12.0, 2, 0, 0, Denom::One, &[Op::SecondTheta, Op::Scale(FieldRef::VarpiNode)]),
    t(5.0 / 12.0, 0, 2, 0, Denom::One, &[Op::SecondOmega, Op::Scale(FieldRef::VarpiNode)]),
    t(
        1.0 / 3.0,
        2,
        0,
        1,
        Denom::One,
        &[Op::Scale(FieldRef::QBarNode), Op::FluxTheta(FieldRef::QThetaHalf)],
    ),
    t(
        1.0 / 3.0,
        0,
        2,
        1,
        Denom::One,
        &[Op::Scale(FieldRef::QBarNode), Op::FluxOmega(FieldRef::QOmegaHalf)],
    ),
    t(
        -1.0 / 12.0,
        2,
        0,
        0,
        Denom::One,
        &[Op::GradTheta, Op::Scale(FieldRef::DpOverPTheta), Op::Scale(FieldRef::VarpiNode)],
    ),
    t(
        -1.0 / 12.0,
        0,
        2,
        0,
        Denom::One,
        &[Op::GradOmega, Op::Scale(FieldRef::DqOverQOmega), Op::Scale(FieldRef::VarpiNode)],
    ),
    t(
        -1.0 / 3.0,
        0,
        2,
        0,
        Denom::One,
        &[Op::Scale(FieldRef::DqOverQOmega), Op::GradOmega, Op::Scale(FieldRef::VarpiNode)],
    ),
    t(
        -1.0 / 3.0,
        2,
        0,
        0,
        Denom::One,
        &[Op::Scale(FieldRef::DqOverQTheta), Op::GradTheta, Op::Scale(FieldRef::VarpiNode)],
    ),
];

const RATIO_CORRECTION: &[Term] = &[
    t(
        1.0 / 12.0,
        0,
        2,
        0,
        Denom::One,
        &[Op::GradOmega, Op::Scale(FieldRef::DqOverQOmega), Op::FluxTheta(FieldRef::PHatThetaHalf)],
    ),
    t(
        1.0 / 3.0,
        2,
        0,
        0,
        Denom::One,
        &[Op::Scale(FieldRef::DqOverQTheta), Op::GradTheta, Op::FluxTheta(FieldRef::PHatThetaHalf)],
    ),
    t(
        1.0 / 3.0,
        0,
        2,
        0,
        Denom::One,
        &[Op::Scale(FieldRef::DqOverQOmega), Op::GradOmega, Op::FluxTheta(FieldRef::PHatThetaHalf)],
    ),
    t(
        1.0 / 12.0,
        2,
        0,
        0,
        Denom::One,
        &[Op::GradTheta, Op::Scale(FieldRef::DpOverPTheta), Op::FluxOmega(FieldRef::QHatOmegaHalf)],
    ),
    t(
        1.0 / 3.0,
        0,
        2,
        0,
        Denom::One,
        &[Op::Scale(FieldRef::DqOverQOmega), Op::GradOmega, Op::FluxOmega(FieldRef::QHatOmegaHalf)],
    ),
    t(
        1.0 / 3.0,
        2,
        0,
        0,
        Denom::One,
        &[Op::Scale(FieldRef::DqOverQTheta), Op::GradTheta, Op::FluxOmega(FieldRef::QHatOmegaHalf)],
    ),
    t(
        -1.0 / 12.0,
        2,
        0,
        1,
        Denom::One,
        &[Op::GradTheta, Op::Scale(FieldRef::DpOverPTheta), Op::CrossWT(FieldRef::QHat1Node)],
    ),
    t(
        -1.0 / 12.0,
        0,
        2,
        1,
        Denom::One,
        &[Op::GradOmega, Op::Scale(FieldRef::DqOverQOmega), Op::CrossWT(FieldRef::QHat1Node)],
    ),
    t(
        -1.0 / 3.0,
        0,
        2,
        1,
        Denom::One,
        &[Op::Scale(FieldRef::DqOverQOmega), Op::GradOmega, Op::CrossWT(FieldRef::QHat1Node)],
    ),
    t(
        -1.0 / 12.0,
        0,
        2,
        1,
        Denom::One,
        &[Op::GradOmega, Op::Scale(FieldRef::DqOverQOmega), Op::CrossTW(FieldRef::QHatNode)],
    ),
    t(
        -1.0 / 12.0,
        2,
        0,
        1,
        Denom::One,
        &[Op::GradTheta, Op::Scale(FieldRef::DpOverPTheta), Op::CrossTW(FieldRef::QHatNode)],
    ),
    t(
        -1.0 / 3.0,
        2,
        0,
        1,
        Denom::One,
        &[Op::Scale(FieldRef::DqOverQTheta), Op::GradTheta, Op::CrossTW(FieldRef::QHatNode)],
    ),
];

const FLUX_SECOND_DIFFERENCE: &[Term] = &[
    t(1.0 / 3.0, 2, 0, 0, Denom::One, &[Op::SecondTheta, Op::FluxTheta(FieldRef::PHatThetaHalf)]),
    t(5.0 / 12.0, 0, 2, 0, Denom::One, &[Op::SecondOmega, Op::FluxTheta(FieldRef::PHatThetaHalf)]),
    t(1.0 / 3.0, 0, 2, 0, Denom::One, &[Op::SecondOmega, Op::FluxOmega(FieldRef::QHatOmegaHalf)]),
    t(5.0 / 12.0, 2, 0, 0, Denom::One, &[Op::SecondTheta, Op::FluxOmega(FieldRef::QHatOmegaHalf)]),
    t(-1.0 / 4.0, 2, 0, 1, Denom::One, &[Op::SecondTheta, Op::CrossWT(FieldRef::QHat1Node)]),
    t(-1.0 / 4.0, 0, 2, 1, Denom::One, &[Op::SecondOmega, Op::CrossWT(FieldRef::QHat1Node)]),
    t(-1.0 / 4.0, 0, 2, 1, Denom::One, &[Op::SecondOmega, Op::CrossTW(FieldRef::QHatNode)]),
    t(-1.0 / 4.0, 2, 0, 1, Denom::One, &[Op::SecondTheta, Op::CrossTW(FieldRef::QHatNode)]),
];

const STABILIZER: &[Term] = &[
    t(
        -4.0 / 9.0,
        4,
        0,
        0,
        Denom::Rho0,
        &[Op::SecondTheta, Op::FluxTheta(FieldRef::PHatSqThetaHalf), Op::SecondTheta],
    ),
    t(
        -25.0 / 36.0,
        0,
        4,
        0,
        Denom::Rho0,
        &[Op::SecondOmega, Op::FluxTheta(FieldRef::PHatSqThetaHalf), Op::SecondOmega],
    ),
    t(
        -4.0 / 9.0,
        0,
        4,
        0,
        Denom::Eta0,
        &[Op::SecondOmega, Op::FluxOmega(FieldRef::QHatSqOmegaHalf), Op::SecondOmega],
    ),
    t(
        -25.0 / 36.0,
        4,
        0,
        0,
        Denom::Eta0,
        &[Op::SecondTheta, Op::FluxOmega(FieldRef::QHatSqOmegaHalf), Op::SecondTheta],
    ),
    t(
        -1.0 / 4.0,
        4,
        0,
        2,
        Denom::Rho0,
        &[Op::SecondTheta, Op::CrossWW(FieldRef::QHat1SqNode), Op::SecondTheta],
    ),
    t(
        -1.0 / 4.0,
        0,
        4,
        2,
        Denom::Rho0,
        &[Op::SecondOmega, Op::CrossWW(FieldRef::QHat1SqNode), Op::SecondOmega],
    ),
    t(
        -1.0 / 4.0,
        0,
        4,
        2,
        Denom::Eta0,
        &[Op::SecondOmega, Op::CrossTT(FieldRef::QHatSqNode), Op::SecondOmega],
    ),
    t(
        -1.0 / 4.0,
        4,
        0,
        2,
        Denom::Eta0,
        &[Op::SecondTheta, Op::CrossTT(FieldRef::QHatSqNode), Op::SecondTheta],
    ),
];

/// The four right-hand-side smoothers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompactOp {
    /// Smooths θ-flux data; carries the ∂θp/p ratio.
    ThetaFlux,
    /// Smooths ω-flux data; carries the ∂ωq/q ratio.
    OmegaFlux,
    /// Mixed smoother with the ∂θq/q ratio and a θ gradient.
    MixedThetaRatio,
    /// Mixed smoother with the ∂ωq/q ratio and an ω gradient.
    MixedOmegaRatio,
}

const THETA_FLUX_OP: &[Term] = &[
    t(1.0, 0, 0, 0, Denom::One, &[]),
    t(1.0 / 12.0, 2, 0, 0, Denom::One, &[Op::SecondTheta]),
    t(-1.0 / 12.0, 2, 0, 0, Denom::One, &[Op::GradTheta, Op::Scale(FieldRef::DpOverPTheta)]),
];

const OMEGA_FLUX_OP: &[Term] = &[
    t(1.0, 0, 0, 0, Denom::One, &[]),
    t(1.0 / 12.0, 0, 2, 0, Denom::One, &[Op::SecondOmega]),
    t(-1.0 / 12.0, 0, 2, 0, Denom::One, &[Op::GradOmega, Op::Scale(FieldRef::DqOverQOmega)]),
];

const MIXED_THETA_RATIO_OP: &[Term] = &[
    t(1.0, 0, 0, 0, Denom::One, &[]),
    t(1.0 / 6.0, 2, 0, 0, Denom::One, &[Op::SecondTheta]),
    t(1.0 / 6.0, 0, 2, 0, Denom::One, &[Op::SecondOmega]),
    t(-1.0 / 3.0, 2, 0, 0, Denom::One, &[Op::Scale(FieldRef::DqOverQTheta), Op::GradTheta]),
];

const MIXED_OMEGA_RATIO_OP: &[Term] = &[
    t(1.0, 0, 0, 0, Denom::One, &[]),
    t(1.0 / 6.0, 2, 0, 0, Denom::One, &[Op::SecondTheta]),
    t(1.0 / 6.0, 0, 2, 0, Denom::One, &[Op::SecondOmega]),
    t(-1.0 / 3.0, 0, 2, 0, Denom::One, &[Op::Scale(FieldRef::DqOverQOmega), Op::GradOmega]),
];

impl CompactOp {
    fn terms(self) -> &'static [Term] {
        match self {
            CompactOp::ThetaFlux => THETA_FLUX_OP,
            CompactOp::OmegaFlux => OMEGA_FLUX_OP,
            CompactOp::MixedThetaRatio => MIXED_THETA_RATIO_OP,
            CompactOp::MixedOmegaRatio => MIXED_OMEGA_RATIO_OP,
        }
    }
}

/// How u-reads past the Dirichlet ω boundary are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GhostPolicy {
    /// Stencil legs beyond the boundary read zero (the default).
    #[default]
    ZeroExtension,
    /// Rows within two of the boundary keep only the principal block.
    DropCorrection,
}

/// Whether the stabilizer's ρ₀ denominator is the pointwise field (as
/// displayed) or the global minimum (as in the energy estimate).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShDenominator {
    #[default]
    Pointwise,
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SchemeOptions {
    pub ghost: GhostPolicy,
    pub sh_denominator: ShDenominator,
}

/// Largest stencil offset the scheme operator produces in either direction.
pub const MAX_STENCIL_OFFSET: usize = 4;

fn term_scalar(c: &CoefficientFields, opts: SchemeOptions, term: &Term) -> f64 {
    if term.beta_pow > 0 && c.beta == 0.0 {
        return 0.0;
    }
    let mut s = term.factor
        * c.grid.h_theta().powi(term.ht_pow as i32)
        * c.grid.h_omega().powi(term.hw_pow as i32)
        * c.beta.powi(term.beta_pow as i32);
    match term.denom {
        Denom::One => {}
        Denom::Eta0 => s /= c.eta0,
        Denom::Rho0 => {
            if opts.sh_denominator == ShDenominator::Global {
                s /= c.rho0_min;
            }
            // Pointwise: handled as a per-node factor at application time.
        }
    }
    s
}

fn pointwise_denominator(c: &CoefficientFields, opts: SchemeOptions, term: &Term) -> bool {
    term.denom == Denom::Rho0 && opts.sh_denominator == ShDenominator::Pointwise && {
        let _ = c;
        true
    }
}

/// Scalar samples over θ-wrapped rows `lo..=hi` (Dirichlet) or all rows with
/// wrap (periodic). Used for the intermediate stages of chain application.
struct Ext {
    m: usize,
    lo: isize,
    rows: usize,
    periodic: bool,
    values: Vec<f64>,
}

impl Ext {
    fn from_fn(
        m: usize,
        lo: isize,
        hi: isize,
        periodic: bool,
        n_rows: usize,
        f: impl Fn(isize, isize) -> f64,
    ) -> Self {
        let (lo, rows) = if periodic {
            (0, n_rows)
        } else {
            (lo, (hi - lo + 1) as usize)
        };
        let mut values = vec![0.0; m * rows];
        for i in 0..m as isize {
            for r in 0..rows as isize {
                values[(i * rows as isize + r) as usize] = f(i, lo + r);
            }
        }
        Ext {
            m,
            lo,
            rows,
            periodic,
            values,
        }
    }

    fn get(&self, i: isize, j: isize) -> f64 {
        let i = i.rem_euclid(self.m as isize) as usize;
        let r = if self.periodic {
            j.rem_euclid(self.rows as isize) as usize
        } else {
            let r = j - self.lo;
            debug_assert!(
                (0..self.rows as isize).contains(&r),
                "chain read outside the prepared range"
            );
            r as usize
        };
        self.values[i * self.rows + r]
    }
}

/// One elementary operator evaluated at node (i, j) of a source.
fn op_apply(
    c: &CoefficientFields,
    op: Op,
    src: &dyn Fn(isize, isize) -> f64,
    i: isize,
    j: isize,
) -> f64 {
    let ht = c.grid.h_theta();
    let hw = c.grid.h_omega();
    match op {
        Op::Scale(r) => field(c, r).get(i, j) * src(i, j),
        Op::GradTheta => (src(i + 1, j) - src(i - 1, j)) / (2.0 * ht),
        Op::GradOmega => (src(i, j + 1) - src(i, j - 1)) / (2.0 * hw),
        Op::SecondTheta => (src(i + 1, j) - 2.0 * src(i, j) + src(i - 1, j)) / (ht * ht),
        Op::SecondOmega => (src(i, j + 1) - 2.0 * src(i, j) + src(i, j - 1)) / (hw * hw),
        Op::FluxTheta(r) => {
            let ch = field(c, r);
            (ch.get(i, j) * (src(i + 1, j) - src(i, j))
                - ch.get(i - 1, j) * (src(i, j) - src(i - 1, j)))
                / (ht * ht)
        }
        Op::FluxOmega(r) => {
            let ch = field(c, r);
            (ch.get(i, j) * (src(i, j + 1) - src(i, j))
                - ch.get(i, j - 1) * (src(i, j) - src(i, j - 1)))
                / (hw * hw)
        }
        Op::CrossTT(r) => {
            let cn = field(c, r);
            (cn.get(i + 1, j) * (src(i + 2, j) - src(i, j))
                - cn.get(i - 1, j) * (src(i, j) - src(i - 2, j)))
                / (4.0 * ht * ht)
        }
        Op::CrossWW(r) => {
            let cn = field(c, r);
            (cn.get(i, j + 1) * (src(i, j + 2) - src(i, j))
                - cn.get(i, j - 1) * (src(i, j) - src(i, j - 2)))
                / (4.0 * hw * hw)
        }
        Op::CrossTW(r) => {
            let cn = field(c, r);
            (cn.get(i + 1, j) * (src(i + 1, j + 1) - src(i + 1, j - 1))
                - cn.get(i - 1, j) * (src(i - 1, j + 1) - src(i - 1, j - 1)))
                / (4.0 * ht * hw)
        }
        Op::CrossWT(r) => {
            let cn = field(c, r);
            (cn.get(i, j + 1) * (src(i + 1, j + 1) - src(i - 1, j + 1))
                - cn.get(i, j - 1) * (src(i + 1, j - 1) - src(i - 1, j - 1)))
                / (4.0 * ht * hw)
        }
    }
}

/// Applies a chain (rightmost op first) to `src`, producing values valid on
/// rows `lo..=hi`; `src` must be readable on the widened range the chain
/// reaches.
fn apply_chain(
    c: &CoefficientFields,
    chain: &[Op],
    src: &dyn Fn(isize, isize) -> f64,
    lo: isize,
    hi: isize,
) -> Ext {
    let m = c.grid.m();
    let periodic = c.grid.periodic_omega();
    let n_rows = c.grid.rows(Staggering::Node);
    if chain.is_empty() {
        return Ext::from_fn(m, lo, hi, periodic, n_rows, src);
    }
    let mut cur: Option<Ext> = None;
    for (idx, op) in chain.iter().enumerate().rev() {
        let outer: isize = chain[..idx].iter().map(|o| o.omega_reach()).sum();
        let (olo, ohi) = (lo - outer, hi + outer);
        let next = match &cur {
            None => Ext::from_fn(m, olo, ohi, periodic, n_rows, |i, j| {
                op_apply(c, *op, src, i, j)
            }),
            Some(prev) => Ext::from_fn(m, olo, ohi, periodic, n_rows, |i, j| {
                op_apply(c, *op, &|a, b| prev.get(a, b), i, j)
            }),
        };
        cur = Some(next);
    }
    cur.unwrap()
}

fn interior_range(grid: &Grid) -> (isize, isize) {
    if grid.periodic_omega() {
        (0, grid.n() as isize - 1)
    } else {
        (1, grid.n() as isize - 1)
    }
}

/// Dirichlet rows where `DropCorrection` keeps only the principal block.
fn in_drop_band(grid: &Grid, j: isize) -> bool {
    !grid.periodic_omega() && {
        let n = grid.n() as isize;
        j <= 2 || j >= n - 2
    }
}

fn expect_nodes(v: &GridFunction) -> Result<()> {
    if v.staggering() != Staggering::Node {
        return Err(Error::StaggeringMismatch {
            expected: Staggering::Node,
            got: v.staggering(),
        });
    }
    Ok(())
}

fn accumulate_terms(
    c: &CoefficientFields,
    opts: SchemeOptions,
    terms: &[Term],
    sign: f64,
    skip_in_band: bool,
    src: &dyn Fn(isize, isize) -> f64,
    out: &mut GridFunction,
) {
    let (lo, hi) = interior_range(&c.grid);
    let m = c.grid.m();
    for term in terms {
        let scalar = sign * term_scalar(c, opts, term);
        if scalar == 0.0 {
            continue;
        }
        let pointwise = pointwise_denominator(c, opts, term);
        let stage = apply_chain(c, term.chain, src, lo, hi);
        for i in 0..m {
            for j in lo..=hi {
                if skip_in_band && in_drop_band(&c.grid, j) {
                    continue;
                }
                let mut v = scalar * stage.get(i as isize, j);
                if pointwise {
                    v *= c.inv_rho0_node.get(i as isize, j);
                }
                let cur = out.get(i as isize, j);
                out.set(i, j as usize, cur + v);
            }
        }
    }
}

/// Applies one scheme block to `u` (with its displayed sign, not the sign it
/// enters the scheme with).
///
/// # Errors
///
/// `StaggeringMismatch` unless `u` lives on nodes.
pub fn apply_block(
    c: &CoefficientFields,
    opts: SchemeOptions,
    block: Block,
    u: &GridFunction,
) -> Result<GridFunction> {
    expect_nodes(u)?;
    let mut out = GridFunction::zeros(c.grid, Staggering::Node);
    let skip = block != Block::Principal && opts.ghost == GhostPolicy::DropCorrection;
    accumulate_terms(c, opts, block.terms(), 1.0, skip, &|i, j| u.get(i, j), &mut out);
    Ok(out)
}

/// The full scheme operator: principal + coefficient + ratio + stabilizer
/// − flux-second-difference.
///
/// # Errors
///
/// `StaggeringMismatch` unless `u` lives on nodes.
pub fn scheme_apply(
    c: &CoefficientFields,
    opts: SchemeOptions,
    u: &GridFunction,
) -> Result<GridFunction> {
    expect_nodes(u)?;
    let mut out = GridFunction::zeros(c.grid, Staggering::Node);
    for block in Block::ALL {
        let skip = block != Block::Principal && opts.ghost == GhostPolicy::DropCorrection;
        accumulate_terms(
            c,
            opts,
            block.terms(),
            block.scheme_sign(),
            skip,
            &|i, j| u.get(i, j),
            &mut out,
        );
    }
    Ok(out)
}

/// Applies one of the four compact smoothers to node data `v` (out-of-range
/// reads are zero on Dirichlet grids).
///
/// # Errors
///
/// `StaggeringMismatch` unless `v` lives on nodes.
pub fn apply_compact(
    c: &CoefficientFields,
    kind: CompactOp,
    v: &GridFunction,
) -> Result<GridFunction> {
    expect_nodes(v)?;
    let opts = SchemeOptions::default();
    let mut out = GridFunction::zeros(c.grid, Staggering::Node);
    let n = c.grid.n() as isize;
    let (lo, hi) = if c.grid.periodic_omega() { (0, n - 1) } else { (0, n) };
    let m = c.grid.m();
    for term in kind.terms() {
        let scalar = term_scalar(c, opts, term);
        let stage = apply_chain(c, term.chain, &|i, j| v.get(i, j), lo, hi);
        for i in 0..m {
            for j in lo..=hi {
                let cur = out.get(i as isize, j);
                out.set(i, j as usize, cur + scalar * stage.get(i as isize, j));
            }
        }
    }
    Ok(out)
}

/// Builds the scheme right-hand side by composing the four smoothers over
/// the Jacobian-weighted source, sampled analytically as far past the
/// boundary as the composition reaches.
pub fn build_rhs(c: &CoefficientFields, f: &dyn Fn(f64, f64) -> f64) -> GridFunction {
    let grid = c.grid;
    let m = grid.m();
    let n = grid.n() as isize;
    let periodic = grid.periodic_omega();
    let n_rows = grid.rows(Staggering::Node);
    let opts = SchemeOptions::default();

    // Source samples on [−3, N+3]; each smoother consumes one row per side.
    let reach = 3;
    let (lo0, hi0) = if periodic { (0, n - 1) } else { (-reach, n + reach) };
    let samples = Ext::from_fn(m, lo0, hi0, periodic, n_rows, |i, j| {
        c.jacobian_node.get(i, j) * f(grid.theta(i), grid.omega(j))
    });

    let order = [
        CompactOp::ThetaFlux,
        CompactOp::OmegaFlux,
        CompactOp::MixedThetaRatio,
        CompactOp::MixedOmegaRatio,
    ];
    let mut cur = samples;
    let mut level = 0isize;
    for kind in order {
        let shrink: isize = kind
            .terms()
            .iter()
            .map(|t| t.chain.iter().map(|o| o.omega_reach()).sum::<isize>())
            .max()
            .unwrap_or(0);
        level += shrink;
        let (lo, hi) = if periodic { (0, n - 1) } else { (-reach + level, n + reach - level) };
        let mut next = Ext::from_fn(m, lo, hi, periodic, n_rows, |_, _| 0.0);
        for term in kind.terms() {
            let scalar = term_scalar(c, opts, term);
            let stage = apply_chain(c, term.chain, &|a, b| cur.get(a, b), lo, hi);
            for i in 0..m as isize {
                for j in lo..=hi {
                    let idx = (i * next.rows as isize + (j - next.lo)) as usize;
                    next.values[idx] += scalar * stage.get(i, j);
                }
            }
        }
        cur = next;
    }

    let mut g = GridFunction::zeros(grid, Staggering::Node);
    let (ilo, ihi) = interior_range(&grid);
    for i in 0..m {
        for j in ilo..=ihi {
            g.set(i, j as usize, cur.get(i as isize, j));
        }
    }
    g
}

/// Emits the matrix row of the scheme operator at interior node (i, j) as
/// `(column θ index, column ω index, coefficient)` triples with boundary and
/// ghost legs folded out. Duplicate columns (possible after periodic wrap on
/// coarse grids) are merged.
pub fn operator_row(
    c: &CoefficientFields,
    opts: SchemeOptions,
    i: usize,
    j: usize,
    out: &mut Vec<(usize, usize, f64)>,
) {
    out.clear();
    const W: usize = 2 * MAX_STENCIL_OFFSET + 1;
    let mut acc = [[0.0f64; W]; W];
    let mut used = [[false; W]; W];
    let ii = i as isize;
    let jj = j as isize;
    let drop_band = opts.ghost == GhostPolicy::DropCorrection && in_drop_band(&c.grid, jj);

    for block in Block::ALL {
        if drop_band && block != Block::Principal {
            continue;
        }
        let sign = block.scheme_sign();
        for term in block.terms() {
            let mut scalar = sign * term_scalar(c, opts, term);
            if scalar == 0.0 {
                continue;
            }
            if pointwise_denominator(c, opts, term) {
                scalar *= c.inv_rho0_node.get(ii, jj);
            }
            // Walk the chain left to right: acc′[s+t] += acc[s]·op(x+s, t).
            let mut cur: Vec<(isize, isize, f64)> = vec![(0, 0, scalar)];
            for op in term.chain {
                let mut next: Vec<(isize, isize, f64)> = Vec::with_capacity(cur.len() * 3);
                for &(dt, dw, coeff) in &cur {
                    let (pi, pj) = (ii + dt, jj + dw);
                    let mut push = |ot: isize, ow: isize, v: f64| {
                        if v != 0.0 {
                            next.push((dt + ot, dw + ow, coeff * v));
                        }
                    };
                    let ht = c.grid.h_theta();
                    let hw = c.grid.h_omega();
                    match *op {
                        Op::Scale(r) => push(0, 0, field(c, r).get(pi, pj)),
                        Op::GradTheta => {
                            push(1, 0, 0.5 / ht);
                            push(-1, 0, -0.5 / ht);
                        }
                        Op::GradOmega => {
                            push(0, 1, 0.5 / hw);
                            push(0, -1, -0.5 / hw);
                        }
                        Op::SecondTheta => {
                            let s = 1.0 / (ht * ht);
                            push(1, 0, s);
                            push(0, 0, -2.0 * s);
                            push(-1, 0, s);
                        }
                        Op::SecondOmega => {
                            let s = 1.0 / (hw * hw);
                            push(0, 1, s);
                            push(0, 0, -2.0 * s);
                            push(0, -1, s);
                        }
                        Op::FluxTheta(r) => {
                            let ch = field(c, r);
                            let (e, w) = (ch.get(pi, pj), ch.get(pi - 1, pj));
                            let s = 1.0 / (ht * ht);
                            push(1, 0, e * s);
                            push(0, 0, -(e + w) * s);
                            push(-1, 0, w * s);
                        }
                        Op::FluxOmega(r) => {
                            let ch = field(c, r);
                            let (n2, s2) = (ch.get(pi, pj), ch.get(pi, pj - 1));
                            let s = 1.0 / (hw * hw);
                            push(0, 1, n2 * s);
                            push(0, 0, -(n2 + s2) * s);
                            push(0, -1, s2 * s);
                        }
                        Op::CrossTT(r) => {
                            let cn = field(c, r);
                            let (e, w) = (cn.get(pi + 1, pj), cn.get(pi - 1, pj));
                            let s = 1.0 / (4.0 * ht * ht);
                            push(2, 0, e * s);
                            push(0, 0, -(e + w) * s);
                            push(-2, 0, w * s);
                        }
                        Op::CrossWW(r) => {
                            let cn = field(c, r);
                            let (n2, s2) = (cn.get(pi, pj + 1), cn.get(pi, pj - 1));
                            let s = 1.0 / (4.0 * hw * hw);
                            push(0, 2, n2 * s);
                            push(0, 0, -(n2 + s2) * s);
                            push(0, -2, s2 * s);
                        }
                        Op::CrossTW(r) => {
                            let cn = field(c, r);
                            let (e, w) = (cn.get(pi + 1, pj), cn.get(pi - 1, pj));
                            let s = 1.0 / (4.0 * ht * hw);
                            push(1, 1, e * s);
                            push(1, -1, -e * s);
                            push(-1, 1, -w * s);
                            push(-1, -1, w * s);
                        }
                        Op::CrossWT(r) => {
                            let cn = field(c, r);
                            let (n2, s2) = (cn.get(pi, pj + 1), cn.get(pi, pj - 1));
                            let s = 1.0 / (4.0 * ht * hw);
                            push(1, 1, n2 * s);
                            push(-1, 1, -n2 * s);
                            push(1, -1, -s2 * s);
                            push(-1, -1, s2 * s);
                        }
                    }
                }
                cur = next;
            }
            for (dt, dw, v) in cur {
                let (a, b) = (
                    (dt + MAX_STENCIL_OFFSET as isize) as usize,
                    (dw + MAX_STENCIL_OFFSET as isize) as usize,
                );
                acc[a][b] += v;
                used[a][b] = true;
            }
        }
    }

    let m = c.grid.m() as isize;
    let n = c.grid.n() as isize;
    let periodic = c.grid.periodic_omega();
    for (a, row) in acc.iter().enumerate() {
        for (b, &v) in row.iter().enumerate() {
            if !used[a][b] || v == 0.0 {
                continue;
            }
            let dt = a as isize - MAX_STENCIL_OFFSET as isize;
            let dw = b as isize - MAX_STENCIL_OFFSET as isize;
            let ci = (ii + dt).rem_euclid(m) as usize;
            let cj = if periodic {
                (jj + dw).rem_euclid(n) as usize
            } else {
                let cj = jj + dw;
                // Boundary and ghost legs multiply zero values.
                if cj < 1 || cj > n - 1 {
                    continue;
                }
                cj as usize
            };
            if let Some(entry) = out.iter_mut().find(|(x, y, _)| *x == ci && *y == cj) {
                entry.2 += v;
            } else {
                out.push((ci, cj, v));
            }
        }
    }
}
