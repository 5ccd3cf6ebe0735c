//! Excitation-operator identities checked two ways.
//!
//! Each identity is an [`Op`] equation evaluated by the Pauli algebra and, on
//! an independent route, by dense matrices assembled from `|1><0|` ladder
//! operators and numerical exponentials. Qubits `A, B, C, D` are `0, 1, 2, 3`.
//!
//! A few relations are stored here in their corrected form; the sign and label
//! conventions were fixed by the dense route.

use num_complex::Complex64;
use serde::Serialize;

use super::dense::DenseOperator;
use super::{exp_p_minus, exp_s_minus, p_minus, p_plus, s_minus, s_plus, Letter, PauliSum};
use crate::error::Result;

const QUBITS: usize = 4;
const A: usize = 0;
const B: usize = 1;
const C: usize = 2;
const D: usize = 3;

/// Tolerance for every identity and decomposition check.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub enum Op {
    Id,
    Z(Vec<usize>),
    /// Product of single-qubit Paulis, e.g. `[(0, 'X'), (2, 'Y')]`.
    Letters(Vec<(usize, char)>),
    SPlus(usize, usize),
    SMinus(usize, usize),
    PPlus(usize, usize, usize),
    PMinus(usize, usize, usize),
    /// `exp(beta * S-_{ab})`.
    ExpS(usize, usize, f64),
    /// `exp(beta * P-_{abc})`.
    ExpP(usize, usize, usize, f64),
    /// `exp(beta * sum)`, dense route only.
    ExpSum(Vec<Op>, f64),
    Prod(Vec<Op>),
    Lin(Vec<(Complex64, Op)>),
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn prod(ops: Vec<Op>) -> Op {
    Op::Prod(ops)
}

fn lin(terms: Vec<(f64, Op)>) -> Op {
    Op::Lin(terms.into_iter().map(|(c, o)| (re(c), o)).collect())
}

fn neg(op: Op) -> Op {
    lin(vec![(-1.0, op)])
}

fn zero() -> Op {
    Op::Lin(Vec::new())
}

fn zz(a: usize, b: usize) -> Op {
    Op::Z(vec![a, b])
}

impl Op {
    /// Pauli-algebra evaluation; `None` for dense-only nodes.
    pub fn to_pauli(&self, qubits: usize) -> Option<PauliSum> {
        Some(match self {
            Op::Id => PauliSum::identity(qubits),
            Op::Z(qs) => PauliSum::z(qubits, qs),
            Op::Letters(ls) => {
                let letters: Vec<_> = ls
                    .iter()
                    .map(|&(q, c)| {
                        let l = match c {
                            'X' => Letter::X,
                            'Y' => Letter::Y,
                            'Z' => Letter::Z,
                            _ => Letter::I,
                        };
                        (q, l)
                    })
                    .collect();
                PauliSum::from_letters(qubits, &letters, re(1.0))
            }
            Op::SPlus(a, b) => s_plus(qubits, *a, *b),
            Op::SMinus(a, b) => s_minus(qubits, *a, *b),
            Op::PPlus(a, b, c) => p_plus(qubits, *a, *b, *c),
            Op::PMinus(a, b, c) => p_minus(qubits, *a, *b, *c),
            Op::ExpS(a, b, beta) => exp_s_minus(qubits, *a, *b, *beta),
            Op::ExpP(a, b, c, beta) => exp_p_minus(qubits, *a, *b, *c, *beta),
            Op::ExpSum(..) => return None,
            Op::Prod(ops) => {
                let mut acc = PauliSum::identity(qubits);
                for op in ops {
                    acc = &acc * &op.to_pauli(qubits)?;
                }
                acc
            }
            Op::Lin(terms) => {
                let mut acc = PauliSum::zero(qubits);
                for (c, op) in terms {
                    acc = &acc + &op.to_pauli(qubits)?.scale(*c);
                }
                acc
            }
        })
    }

    /// Dense evaluation from ladder operators and `expm`.
    pub fn to_dense(&self, qubits: usize) -> DenseOperator {
        let dim = 1usize << qubits;
        match self {
            Op::Id => DenseOperator::identity(dim),
            Op::Z(qs) => DenseOperator::from_fn(dim, |r, c| {
                if r != c {
                    return Complex64::default();
                }
                let parity = qs.iter().filter(|&&q| (r >> q) & 1 == 1).count();
                re(if parity % 2 == 0 { 1.0 } else { -1.0 })
            }),
            Op::Letters(ls) => ls.iter().fold(DenseOperator::identity(dim), |acc, &(q, c)| {
                acc.matmul(&single_dense(dim, q, c))
            }),
            Op::SPlus(a, b) => ladder2(dim, *a, *b, 1.0),
            Op::SMinus(a, b) => ladder2(dim, *a, *b, -1.0),
            Op::PPlus(a, b, c) => ladder3(dim, *a, *b, *c, 1.0),
            Op::PMinus(a, b, c) => ladder3(dim, *a, *b, *c, -1.0),
            Op::ExpS(a, b, beta) => ladder2(dim, *a, *b, -1.0).scale(re(*beta)).expm(),
            Op::ExpP(a, b, c, beta) => ladder3(dim, *a, *b, *c, -1.0).scale(re(*beta)).expm(),
            Op::ExpSum(ops, beta) => {
                let mut gen = DenseOperator::zeros(dim);
                for op in ops {
                    gen = gen.add(&op.to_dense(qubits));
                }
                gen.scale(re(*beta)).expm()
            }
            Op::Prod(ops) => ops
                .iter()
                .fold(DenseOperator::identity(dim), |acc, op| acc.matmul(&op.to_dense(qubits))),
            Op::Lin(terms) => terms.iter().fold(DenseOperator::zeros(dim), |acc, (c, op)| {
                acc.add(&op.to_dense(qubits).scale(*c))
            }),
        }
    }
}

/// Single-qubit Pauli from its matrix entries.
fn single_dense(dim: usize, q: usize, letter: char) -> DenseOperator {
    let i = Complex64::new(0.0, 1.0);
    let m: [[Complex64; 2]; 2] = match letter {
        'X' => [[re(0.0), re(1.0)], [re(1.0), re(0.0)]],
        'Y' => [[re(0.0), -i], [i, re(0.0)]],
        'Z' => [[re(1.0), re(0.0)], [re(0.0), re(-1.0)]],
        _ => [[re(1.0), re(0.0)], [re(0.0), re(1.0)]],
    };
    DenseOperator::from_fn(dim, |r, c| {
        if (r ^ c) & !(1 << q) != 0 {
            return Complex64::default();
        }
        m[(r >> q) & 1][(c >> q) & 1]
    })
}

fn raise_dense(dim: usize, q: usize) -> DenseOperator {
    DenseOperator::from_fn(dim, |r, c| {
        let set = (c >> q) & 1 == 0 && r == c | (1 << q);
        re(if set { 1.0 } else { 0.0 })
    })
}

fn lower_dense(dim: usize, q: usize) -> DenseOperator {
    raise_dense(dim, q).adjoint()
}

fn ladder2(dim: usize, a: usize, b: usize, sign: f64) -> DenseOperator {
    let fwd = raise_dense(dim, a).matmul(&lower_dense(dim, b));
    let back = lower_dense(dim, a).matmul(&raise_dense(dim, b));
    fwd.add(&back.scale(re(sign)))
}

fn ladder3(dim: usize, a: usize, b: usize, c: usize, sign: f64) -> DenseOperator {
    let fwd = raise_dense(dim, a)
        .matmul(&lower_dense(dim, b))
        .matmul(&lower_dense(dim, c));
    let back = lower_dense(dim, a)
        .matmul(&raise_dense(dim, b))
        .matmul(&raise_dense(dim, c));
    fwd.add(&back.scale(re(sign)))
}

/// A named operator equation.
#[derive(Debug, Clone)]
pub struct Identity {
    pub name: String,
    pub lhs: Op,
    pub rhs: Op,
}

fn eq(name: &str, lhs: Op, rhs: Op) -> Identity {
    Identity {
        name: name.to_string(),
        lhs,
        rhs,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub max_error: f64,
    pub pass: bool,
}

impl Identity {
    /// Largest disagreement across both routes and between them.
    pub fn error(&self) -> f64 {
        let dl = self.lhs.to_dense(QUBITS);
        let dr = self.rhs.to_dense(QUBITS);
        let mut err = dl.max_abs_diff(&dr);
        for (op, dense) in [(&self.lhs, &dl), (&self.rhs, &dr)] {
            if let Some(p) = op.to_pauli(QUBITS) {
                let via_pauli = p.to_dense().expect("four qubits fit");
                err = err.max(via_pauli.max_abs_diff(dense));
            }
        }
        if let (Some(pl), Some(pr)) = (self.lhs.to_pauli(QUBITS), self.rhs.to_pauli(QUBITS)) {
            err = err.max(pl.max_abs_diff(&pr));
        }
        err
    }
}

/// Coefficients of the three-operator two-qubit sandwich
/// `e^{bS-_BC} e^{bS-_AB} e^{bS-_BC}` on `{1, Z_BZ_C, Z_AZ_B, S-_BC, S-_AB, S+_AC}`.
pub fn sandwich2_coefficients(beta: f64) -> [f64; 6] {
    let (c2, s2, sb) = half_angles(beta);
    [
        c2.powi(3) + 0.25 * sb * sb * s2 - 0.5 * sb * sb * c2,
        c2 * sb * sb,
        0.25 * sb * sb * c2 + s2.powi(3) + 0.5 * s2 * sb * sb,
        2.0 * sb * c2 * c2 - 0.5 * sb.powi(3),
        sb * c2 * c2 - s2 * s2 * sb,
        sb * sb,
    ]
}

fn sandwich2_basis() -> Vec<Op> {
    vec![
        Op::Id,
        zz(B, C),
        zz(A, B),
        Op::SMinus(B, C),
        Op::SMinus(A, B),
        Op::SPlus(A, C),
    ]
}

/// Coefficients of `e^{bS-_AB} e^{bS-_BC}` on its support.
pub fn chain2_coefficients(beta: f64) -> [f64; 9] {
    let (c2, s2, sb) = half_angles(beta);
    [
        c2 * c2,
        0.25 * sb * sb,
        0.25 * sb * sb,
        s2 * s2,
        sb * c2,
        sb * c2,
        -s2 * sb,
        -s2 * sb,
        sb * sb,
    ]
}

fn chain2_basis() -> Vec<Op> {
    vec![
        Op::Id,
        zz(B, C),
        zz(A, B),
        zz(A, C),
        Op::SMinus(B, C),
        Op::SMinus(A, B),
        prod(vec![Op::Z(vec![A]), Op::SPlus(B, C)]),
        prod(vec![Op::SPlus(A, B), Op::Z(vec![C])]),
        prod(vec![Op::SMinus(A, B), Op::SMinus(B, C)]),
    ]
}

fn half_angles(beta: f64) -> (f64, f64, f64) {
    let (s, c) = (beta / 2.0).sin_cos();
    (c * c, s * s, beta.sin())
}

/// The ten coefficients of a two-qubit/three-qubit sandwich with the ancilla
/// attached to `C` (pattern a). Patterns b and c reuse them with the sign
/// pattern given in [`three_qubit_patterns`].
pub fn sandwich3_coefficients(beta: f64) -> [f64; 10] {
    let (c2, s2, sb) = half_angles(beta);
    let cb = beta.cos();
    let m4 = 0.125 * sb * sb * c2 + 0.5 * s2.powi(3) + 0.25 * s2 * sb * sb;
    [
        0.25 * (3.0 + cb) * (0.25 * (3.0 + (2.0 * beta).cos()) - 0.5 * sb * sb),
        0.5 * s2.powi(3) + 0.125 * sb * sb * c2 - 0.25 * s2 * sb * sb,
        0.25 * sb * sb * (3.0 + cb),
        m4,
        -m4,
        0.5 * s2 * sb * sb,
        0.25 * (3.0 + cb) * (2.0 * beta).sin(),
        0.25 * sb.powi(3) - s2 * s2 * sb,
        cb * sb,
        sb * sb,
    ]
}

/// One sandwich of `e^{bP-_ABC}` between two copies of a two-qubit excitation.
#[derive(Debug, Clone)]
pub struct BridgePattern {
    pub name: &'static str,
    pub unitary: Op,
    pub basis: Vec<Op>,
    pub coefficients: Vec<f64>,
}

pub fn three_qubit_patterns(beta: f64) -> Vec<BridgePattern> {
    let m = sandwich3_coefficients(beta);
    let p = Op::ExpP(A, B, C, beta);
    let pattern = |name, s: Op, basis: Vec<Op>, signs: [f64; 10]| BridgePattern {
        name,
        unitary: prod(vec![s.clone(), p.clone(), s]),
        basis,
        coefficients: m.iter().zip(signs).map(|(v, s)| v * s).collect(),
    };
    vec![
        pattern(
            "bridge_ancilla_on_c",
            Op::ExpS(C, D, beta),
            vec![
                Op::Id,
                zz(A, B),
                zz(C, D),
                zz(A, C),
                zz(B, C),
                Op::Z(vec![A, B, C, D]),
                Op::SMinus(C, D),
                prod(vec![zz(A, B), Op::SMinus(C, D)]),
                Op::PMinus(A, B, C),
                Op::PPlus(A, B, D),
            ],
            [1.0; 10],
        ),
        pattern(
            "bridge_ancilla_on_b",
            Op::ExpS(B, D, beta),
            vec![
                Op::Id,
                zz(A, C),
                zz(B, D),
                zz(A, B),
                zz(B, C),
                Op::Z(vec![A, B, C, D]),
                Op::SMinus(B, D),
                prod(vec![zz(A, C), Op::SMinus(B, D)]),
                Op::PMinus(A, B, C),
                Op::PPlus(A, C, D),
            ],
            [1.0; 10],
        ),
        pattern(
            "bridge_ancilla_on_a",
            Op::ExpS(A, D, beta),
            vec![
                Op::Id,
                zz(B, C),
                zz(A, D),
                zz(A, B),
                zz(A, C),
                Op::Z(vec![A, B, C, D]),
                Op::SMinus(A, D),
                prod(vec![zz(B, C), Op::SMinus(A, D)]),
                Op::PMinus(A, B, C),
                Op::PPlus(D, B, C),
            ],
            [1.0, -1.0, 1.0, 1.0, -1.0, -1.0, 1.0, -1.0, 1.0, -1.0],
        ),
    ]
}

fn expansion(basis: Vec<Op>, coefficients: &[f64]) -> Op {
    lin(coefficients.iter().copied().zip(basis).collect())
}

/// Every identity at a given angle.
pub fn catalog(beta: f64) -> Vec<Identity> {
    let (c2, s2, sb) = half_angles(beta);
    let cb = beta.cos();
    let sp = Op::SPlus(A, B);
    let sm = Op::SMinus(A, B);
    let za = Op::Z(vec![A]);
    let zb = Op::Z(vec![B]);
    let zc = Op::Z(vec![C]);
    let mut out = vec![
        // Single Z on a two-qubit excitation.
        eq("s_minus_z_a", prod(vec![sm.clone(), za.clone()]), sp.clone()),
        eq("s_minus_z_b", prod(vec![sm.clone(), zb.clone()]), neg(sp.clone())),
        eq("s_plus_z_a", prod(vec![sp.clone(), za.clone()]), sm.clone()),
        eq("s_plus_z_b", prod(vec![sp.clone(), zb.clone()]), neg(sm.clone())),
        eq("z_a_s_minus", prod(vec![za.clone(), sm.clone()]), neg(sp.clone())),
        eq("z_b_s_minus", prod(vec![zb.clone(), sm.clone()]), sp.clone()),
        eq("z_a_s_plus", prod(vec![za.clone(), sp.clone()]), neg(sm.clone())),
        eq("z_b_s_plus", prod(vec![zb.clone(), sp.clone()]), sm.clone()),
        // Z pair on a two-qubit excitation.
        eq("s_minus_zz", prod(vec![sm.clone(), zz(A, B)]), neg(sm.clone())),
        eq("zz_s_minus", prod(vec![zz(A, B), sm.clone()]), neg(sm.clone())),
        eq("s_plus_zz", prod(vec![sp.clone(), zz(A, B)]), neg(sp.clone())),
        eq("zz_s_plus", prod(vec![zz(A, B), sp.clone()]), neg(sp.clone())),
        // Products of two-qubit excitations.
        eq(
            "s_plus_s_minus",
            prod(vec![sp.clone(), sm.clone()]),
            lin(vec![(0.5, za.clone()), (-0.5, zb.clone())]),
        ),
        eq(
            "s_minus_s_plus",
            prod(vec![sm.clone(), sp.clone()]),
            lin(vec![(-0.5, za.clone()), (0.5, zb.clone())]),
        ),
        eq(
            "s_plus_squared",
            prod(vec![sp.clone(), sp.clone()]),
            lin(vec![(0.5, Op::Id), (-0.5, zz(A, B))]),
        ),
        eq(
            "s_minus_squared",
            prod(vec![sm.clone(), sm.clone()]),
            lin(vec![(-0.5, Op::Id), (0.5, zz(A, B))]),
        ),
        eq(
            "s_minus_bc_s_minus_ab",
            prod(vec![Op::SMinus(B, C), Op::SMinus(A, B)]),
            lin(vec![
                (0.5, Op::SPlus(A, C)),
                (-0.5, prod(vec![Op::SMinus(A, C), zb.clone()])),
            ]),
        ),
        eq(
            "s_plus_bc_s_plus_ab",
            prod(vec![Op::SPlus(B, C), Op::SPlus(A, B)]),
            lin(vec![
                (0.5, Op::SPlus(A, C)),
                (-0.5, prod(vec![Op::SMinus(A, C), zb.clone()])),
            ]),
        ),
        eq(
            "s_minus_ab_s_minus_bc",
            prod(vec![Op::SMinus(A, B), Op::SMinus(B, C)]),
            lin(vec![
                (0.5, prod(vec![Op::SMinus(A, C), zb.clone()])),
                (0.5, Op::SPlus(A, C)),
            ]),
        ),
        eq(
            "s_minus_ab_s_minus_bc_zz",
            prod(vec![Op::SMinus(A, B), Op::SMinus(B, C), zz(A, B)]),
            prod(vec![Op::SMinus(A, B), Op::SMinus(B, C)]),
        ),
        eq(
            "s_minus_triple_vanishes",
            prod(vec![sm.clone(), Op::SMinus(B, C), sm.clone()]),
            zero(),
        ),
        // Exponentials of two-qubit excitations.
        eq(
            "exp_s_minus_closed_form",
            Op::ExpSum(vec![sm.clone()], beta),
            lin(vec![(c2, Op::Id), (s2, zz(A, B)), (sb, sm.clone())]),
        ),
        eq(
            "two_excitation_chain",
            prod(vec![Op::ExpS(A, B, beta), Op::ExpS(B, C, beta)]),
            expansion(chain2_basis(), &chain2_coefficients(beta)),
        ),
        eq(
            "two_excitation_sandwich",
            prod(vec![
                Op::ExpS(B, C, beta),
                Op::ExpS(A, B, beta),
                Op::ExpS(B, C, beta),
            ]),
            expansion(sandwich2_basis(), &sandwich2_coefficients(beta)),
        ),
    ];

    // Three-qubit excitations.
    let pp = Op::PPlus(A, B, C);
    let pm = Op::PMinus(A, B, C);
    out.extend([
        eq("p_plus_b_c_symmetric", pp.clone(), Op::PPlus(A, C, B)),
        eq("p_minus_b_c_symmetric", pm.clone(), Op::PMinus(A, C, B)),
        eq(
            "s_plus_pauli_form",
            sp.clone(),
            lin(vec![
                (0.5, Op::Letters(vec![(A, 'X'), (B, 'X')])),
                (0.5, Op::Letters(vec![(A, 'Y'), (B, 'Y')])),
            ]),
        ),
        eq(
            "s_minus_pauli_form",
            sm.clone(),
            Op::Lin(vec![
                (Complex64::new(0.0, 0.5), Op::Letters(vec![(A, 'X'), (B, 'Y')])),
                (Complex64::new(0.0, -0.5), Op::Letters(vec![(A, 'Y'), (B, 'X')])),
            ]),
        ),
        eq(
            "p_plus_pauli_form",
            pp.clone(),
            lin(vec![
                (0.25, Op::Letters(vec![(A, 'X'), (B, 'X'), (C, 'X')])),
                (0.25, Op::Letters(vec![(A, 'Y'), (B, 'X'), (C, 'Y')])),
                (-0.25, Op::Letters(vec![(A, 'X'), (B, 'Y'), (C, 'Y')])),
                (0.25, Op::Letters(vec![(A, 'Y'), (B, 'Y'), (C, 'X')])),
            ]),
        ),
        eq(
            "p_minus_pauli_form",
            pm.clone(),
            Op::Lin(
                [
                    (1.0, vec![(A, 'X'), (B, 'X'), (C, 'Y')]),
                    (1.0, vec![(A, 'X'), (B, 'Y'), (C, 'X')]),
                    (-1.0, vec![(A, 'Y'), (B, 'X'), (C, 'X')]),
                    (1.0, vec![(A, 'Y'), (B, 'Y'), (C, 'Y')]),
                ]
                .into_iter()
                .map(|(s, l)| (Complex64::new(0.0, 0.25 * s), Op::Letters(l)))
                .collect(),
            ),
        ),
        eq("p_plus_z_a", prod(vec![pp.clone(), za.clone()]), pm.clone()),
        eq("z_a_p_plus", prod(vec![za.clone(), pp.clone()]), neg(pm.clone())),
        eq("p_plus_z_b", prod(vec![pp.clone(), zb.clone()]), neg(pm.clone())),
        eq("p_plus_z_c", prod(vec![pp.clone(), zc.clone()]), neg(pm.clone())),
        eq("z_b_p_plus", prod(vec![zb.clone(), pp.clone()]), pm.clone()),
        eq("z_c_p_plus", prod(vec![zc.clone(), pp.clone()]), pm.clone()),
        eq("p_plus_z_ab", prod(vec![pp.clone(), zz(A, B)]), neg(pp.clone())),
        eq("p_plus_z_ac", prod(vec![pp.clone(), zz(A, C)]), neg(pp.clone())),
        eq("z_ab_p_plus", prod(vec![zz(A, B), pp.clone()]), neg(pp.clone())),
        eq("z_ac_p_plus", prod(vec![zz(A, C), pp.clone()]), neg(pp.clone())),
        eq("p_plus_z_bc", prod(vec![pp.clone(), zz(B, C)]), pp.clone()),
        eq("z_bc_p_plus", prod(vec![zz(B, C), pp.clone()]), pp.clone()),
        eq(
            "p_plus_z_abc",
            prod(vec![pp.clone(), Op::Z(vec![A, B, C])]),
            pm.clone(),
        ),
        eq(
            "z_abc_p_plus",
            prod(vec![Op::Z(vec![A, B, C]), pp.clone()]),
            neg(pm.clone()),
        ),
        eq(
            "exp_p_minus_closed_form",
            Op::ExpSum(vec![pm.clone()], beta),
            lin(vec![
                (0.25 * (3.0 + cb), Op::Id),
                (0.5 * s2, zz(A, B)),
                (0.5 * s2, zz(A, C)),
                (-0.5 * s2, zz(B, C)),
                (sb, pm.clone()),
            ]),
        ),
        // Two-qubit excitation on C and an ancilla D against P_ABC.
        eq(
            "s_minus_cd_p_minus",
            prod(vec![Op::SMinus(C, D), pm.clone()]),
            lin(vec![
                (0.5, Op::PPlus(A, B, D)),
                (-0.5, prod(vec![zc.clone(), Op::PMinus(A, B, D)])),
            ]),
        ),
        eq(
            "p_minus_s_minus_cd",
            prod(vec![pm.clone(), Op::SMinus(C, D)]),
            lin(vec![
                (0.5, Op::PPlus(A, B, D)),
                (0.5, prod(vec![zc.clone(), Op::PMinus(A, B, D)])),
            ]),
        ),
        eq(
            "p_plus_s_plus_cd",
            prod(vec![pp.clone(), Op::SPlus(C, D)]),
            prod(vec![pm.clone(), Op::SMinus(C, D)]),
        ),
        eq(
            "s_cd_p_s_cd_vanishes",
            prod(vec![Op::SMinus(C, D), pm.clone(), Op::SMinus(C, D)]),
            zero(),
        ),
        // Two-qubit excitation on A and an ancilla D against P_ABC.
        eq(
            "p_minus_s_minus_ad",
            prod(vec![pm.clone(), Op::SMinus(A, D)]),
            lin(vec![
                (0.5, prod(vec![za.clone(), Op::PMinus(D, B, C)])),
                (-0.5, Op::PPlus(D, B, C)),
            ]),
        ),
        eq(
            "s_minus_ad_p_minus",
            prod(vec![Op::SMinus(A, D), pm.clone()]),
            lin(vec![
                (-0.5, prod(vec![za.clone(), Op::PMinus(D, B, C)])),
                (-0.5, Op::PPlus(D, B, C)),
            ]),
        ),
        eq(
            "p_plus_s_plus_ad",
            prod(vec![pp.clone(), Op::SPlus(A, D)]),
            neg(prod(vec![pm.clone(), Op::SMinus(A, D)])),
        ),
        eq(
            "s_plus_ad_p_plus",
            prod(vec![Op::SPlus(A, D), pp.clone()]),
            neg(prod(vec![Op::SMinus(A, D), pm.clone()])),
        ),
        eq(
            "s_ad_p_s_ad_vanishes",
            prod(vec![Op::SMinus(A, D), pm.clone(), Op::SMinus(A, D)]),
            zero(),
        ),
    ]);

    let t = 0.25 * (3.0 + cb);
    out.push(eq(
        "bridge_ancilla_on_c_half_product",
        prod(vec![Op::ExpS(C, D, beta), Op::ExpP(A, B, C, beta)]),
        lin(vec![
            (c2 * t, Op::Id),
            (t * s2, zz(C, D)),
            (t * sb, Op::SMinus(C, D)),
            (0.125 * sb * sb, zz(A, B)),
            (0.125 * sb * sb, zz(A, C)),
            (-0.125 * sb * sb, zz(B, C)),
            (0.5 * s2 * s2, Op::Z(vec![A, B, C, D])),
            (0.5 * s2 * s2, zz(A, D)),
            (-0.5 * s2 * s2, zz(B, D)),
            (0.5 * s2 * sb, prod(vec![Op::SMinus(C, D), zz(A, B)])),
            (0.5 * s2 * sb, prod(vec![Op::SPlus(C, D), za.clone()])),
            (-0.5 * s2 * sb, prod(vec![Op::SPlus(C, D), zb.clone()])),
            (c2 * sb, pm.clone()),
            (s2 * sb, prod(vec![pp.clone(), Op::Z(vec![D])])),
            (sb * sb, prod(vec![Op::SMinus(C, D), pm.clone()])),
        ]),
    ));
    out.push(eq(
        "bridge_ancilla_on_a_half_product",
        prod(vec![Op::ExpS(A, D, beta), Op::ExpP(A, B, C, beta)]),
        lin(vec![
            (c2 * t, Op::Id),
            (t * s2, zz(A, D)),
            (t * sb, Op::SMinus(A, D)),
            (0.125 * sb * sb, zz(A, B)),
            (0.125 * sb * sb, zz(A, C)),
            (-0.125 * sb * sb, zz(B, C)),
            (0.5 * s2 * s2, zz(B, D)),
            (0.5 * s2 * s2, zz(C, D)),
            (-0.5 * s2 * s2, Op::Z(vec![A, B, C, D])),
            (0.5 * s2 * sb, prod(vec![Op::SPlus(A, D), zb.clone()])),
            (0.5 * s2 * sb, prod(vec![Op::SPlus(A, D), zc.clone()])),
            (-0.5 * s2 * sb, prod(vec![Op::SMinus(A, D), zz(B, C)])),
            (c2 * sb, pm.clone()),
            (-s2 * sb, prod(vec![pp.clone(), Op::Z(vec![D])])),
            (sb * sb, prod(vec![Op::SMinus(A, D), pm.clone()])),
        ]),
    ));

    for pattern in three_qubit_patterns(beta) {
        out.push(eq(
            pattern.name,
            pattern.unitary.clone(),
            expansion(pattern.basis.clone(), &pattern.coefficients),
        ));
    }

    // Mixer block on two assets with l = 2: qubits t^1 = A, t^2 = B,
    // t'^1 = C, t'^2 = D. S^k moves an excitation from t^k to t'^k and P^1
    // carries from (t^1, t'^1) into t^2.
    let s1 = Op::SMinus(C, A);
    let p1 = Op::PMinus(B, A, C);
    let p1_rev = Op::PMinus(D, A, C);
    out.extend([
        eq(
            "carry_commutes_with_exchange",
            Op::Lin(vec![
                (re(1.0), prod(vec![s1.clone(), p1.clone()])),
                (re(-1.0), prod(vec![p1.clone(), s1.clone()])),
            ]),
            zero(),
        ),
        eq(
            "reverse_carry_commutes_with_exchange",
            Op::Lin(vec![
                (re(1.0), prod(vec![s1.clone(), p1_rev.clone()])),
                (re(-1.0), prod(vec![p1_rev.clone(), s1.clone()])),
            ]),
            zero(),
        ),
        eq(
            "carry_exchange_exponentials_merge",
            prod(vec![
                Op::ExpSum(vec![s1.clone()], beta),
                Op::ExpSum(vec![p1.clone()], beta),
            ]),
            Op::ExpSum(vec![s1.clone(), p1.clone()], beta),
        ),
        eq(
            "carry_exchange_exponentials_commute",
            prod(vec![Op::ExpP(B, A, C, beta), Op::ExpS(C, A, beta)]),
            prod(vec![Op::ExpS(C, A, beta), Op::ExpP(B, A, C, beta)]),
        ),
        eq(
            "mixer_block_regrouping",
            prod(vec![
                Op::ExpS(C, A, beta),
                Op::ExpS(D, B, beta),
                Op::ExpP(B, A, C, beta),
                Op::ExpS(C, A, beta),
                Op::ExpS(D, B, beta),
            ]),
            prod(vec![
                Op::ExpS(C, A, beta),
                Op::ExpS(C, A, beta),
                Op::ExpS(D, B, beta),
                Op::ExpP(B, A, C, beta),
                Op::ExpS(D, B, beta),
            ]),
        ),
    ]);
    out
}

/// Runs the catalog at every angle and keeps the worst error per identity.
pub fn verify_identities(betas: &[f64]) -> Vec<IdentityCheck> {
    let mut worst: Vec<IdentityCheck> = Vec::new();
    for &beta in betas {
        for (i, id) in catalog(beta).into_iter().enumerate() {
            let err = id.error();
            if worst.len() <= i {
                worst.push(IdentityCheck {
                    name: id.name.clone(),
                    max_error: 0.0,
                    pass: true,
                });
            }
            let entry = &mut worst[i];
            entry.max_error = entry.max_error.max(err);
            entry.pass = entry.max_error < IDENTITY_TOLERANCE;
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternCheck {
    pub pattern: String,
    pub beta: f64,
    pub max_coefficient_error: f64,
    pub residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BridgeReport {
    pub checks: Vec<PatternCheck>,
}

impl BridgeReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn violations(&self) -> impl Iterator<Item = &PatternCheck> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

fn decomposition_check(
    name: &str,
    beta: f64,
    unitary: &Op,
    basis: &[Op],
    expected: &[f64],
) -> Result<PatternCheck> {
    let u = unitary.to_dense(QUBITS);
    let basis: Vec<PauliSum> = basis
        .iter()
        .map(|b| b.to_pauli(QUBITS).expect("basis is algebraic"))
        .collect();
    let dec = super::support_decompose(&u, &basis)?;
    let err = dec
        .coefficients
        .iter()
        .zip(expected)
        .map(|(c, e)| (c - re(*e)).norm())
        .fold(0.0, f64::max);
    Ok(PatternCheck {
        pattern: name.to_string(),
        beta,
        max_coefficient_error: err,
        residual: dec.residual,
        pass: err < IDENTITY_TOLERANCE && dec.residual < IDENTITY_TOLERANCE,
    })
}

/// Decomposes each three-qubit sandwich on its listed support and compares
/// with the closed-form coefficients.
pub fn verify_three_qubit_bridges(betas: &[f64]) -> Result<BridgeReport> {
    let mut checks = Vec::new();
    for &beta in betas {
        for p in three_qubit_patterns(beta) {
            checks.push(decomposition_check(
                p.name,
                beta,
                &p.unitary,
                &p.basis,
                &p.coefficients,
            )?);
        }
    }
    Ok(BridgeReport { checks })
}

/// Same as [`verify_three_qubit_bridges`] for the two-qubit chain and sandwich.
pub fn verify_two_qubit_bridges(betas: &[f64]) -> Result<BridgeReport> {
    let mut checks = Vec::new();
    for &beta in betas {
        checks.push(decomposition_check(
            "two_excitation_chain",
            beta,
            &prod(vec![Op::ExpS(A, B, beta), Op::ExpS(B, C, beta)]),
            &chain2_basis(),
            &chain2_coefficients(beta),
        )?);
        checks.push(decomposition_check(
            "two_excitation_sandwich",
            beta,
            &prod(vec![
                Op::ExpS(B, C, beta),
                Op::ExpS(A, B, beta),
                Op::ExpS(B, C, beta),
            ]),
            &sandwich2_basis(),
            &sandwich2_coefficients(beta),
        )?);
    }
    Ok(BridgeReport { checks })
}
