//! Kraus families of the noisy oracle call for a single marked element.
//!
//! The two-sided noisy call `𝒩_{j,r} ∘ 𝒪_{f_x} ∘ 𝒩_{j,r}` has the sixteen
//! product operators `G_{P,P'}` and an equivalent eight-operator family
//! `K_{β,P}` built from the geometry `(Π, Ξ)` of the marked element. The
//! two are related by four 4×4 unitary blocks, one per Pauli label.

use crate::channels::{depolarizing_weight, phase_oracle, Completeness, KrausChannel};
use crate::opalgebra::{
    check_power_of_two, embed_on_qubit, re, CMatrix, PauliLabel, QubitIndex, C64, I, ONE, ZERO,
};
use crate::report::{CheckLine, Report};
use crate::{check_rate, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    Target,
    Index,
}

/// `Π_{x,j}` and `Ξ_{x,j}` on the query space.
#[derive(Clone, Debug)]
pub struct OracleGeometry {
    pub n: usize,
    pub x: usize,
    pub q: QubitIndex,
    pub pi: CMatrix,
    pub xi: CMatrix,
    pub scenario: Scenario,
}

impl OracleGeometry {
    /// `x^j`, the partner of `x` in the index scenario.
    pub fn partner(&self) -> Option<usize> {
        (self.scenario == Scenario::Index).then(|| self.q.flip_index(self.x))
    }
}

pub fn build_geometry(n: usize, x: usize, j: usize) -> Result<OracleGeometry> {
    check_power_of_two(n)?;
    let q = QubitIndex::new(n, j)?;
    if x >= n {
        return Err(Error::Index(format!("marked element {x} ≥ n = {n}")));
    }
    let d = 2 * n;
    let mut pi = CMatrix::identity(d);
    let mut xi = CMatrix::zeros(d, d);
    let scenario = if j == 0 {
        pi[(2 * x, 2 * x)] = ZERO;
        pi[(2 * x + 1, 2 * x + 1)] = ZERO;
        xi[(2 * x, 2 * x)] = ONE;
        xi[(2 * x + 1, 2 * x + 1)] = -ONE;
        Scenario::Target
    } else {
        let xj = q.flip_index(x);
        pi[(2 * x + 1, 2 * x + 1)] = ZERO;
        pi[(2 * xj + 1, 2 * xj + 1)] = ZERO;
        xi[(2 * xj + 1, 2 * xj + 1)] = ONE;
        xi[(2 * x + 1, 2 * x + 1)] = -ONE;
        Scenario::Index
    };
    Ok(OracleGeometry {
        n,
        x,
        q,
        pi,
        xi,
        scenario,
    })
}

/// Sign picked up when `σ_{P'}` is moved through `Ξ`: `+1` for `I, Z`, `−1` for `X, Y`.
pub fn commutation_sign(p: PauliLabel) -> f64 {
    if p.flips() {
        -1.0
    } else {
        1.0
    }
}

/// `a_P, b_P, c_P` indexed by [`PauliLabel::index`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrausCoefficients {
    pub r: f64,
    pub a: [f64; 4],
    pub b: [f64; 4],
    pub c: [f64; 4],
}

impl KrausCoefficients {
    pub fn new(r: f64) -> Result<Self> {
        check_rate("r", r)?;
        let big_a = (4.0 - 6.0 * r + 3.0 * r * r).sqrt();
        let s = (r * (2.0 - r)).sqrt() / 2.0;
        let t = (2.0 - r).sqrt();
        Ok(Self {
            r,
            a: [big_a / 2.0, s, s, s],
            b: [(2.0 - r) * (1.0 - r) / big_a, 0.0, 0.0, (1.0 - r) * r.sqrt() / t],
            c: [
                r * (8.0 - 12.0 * r + 5.0 * r * r).sqrt() / (2.0 * big_a),
                s,
                s,
                r * (4.0 - 3.0 * r).sqrt() / (2.0 * t),
            ],
        })
    }

    pub fn a(&self, p: PauliLabel) -> f64 {
        self.a[p.index()]
    }

    pub fn b(&self, p: PauliLabel) -> f64 {
        self.b[p.index()]
    }

    pub fn c(&self, p: PauliLabel) -> f64 {
        self.c[p.index()]
    }
}

fn sq_sum(v: &[f64; 4]) -> f64 {
    v.iter().map(|z| z * z).sum()
}

/// Label of `G_{P,P'}`.
pub fn g_label(p: PauliLabel, pp: PauliLabel) -> String {
    format!("{p}{pp}")
}

/// Label of `K_{β,P}`.
pub fn k_label(beta: usize, p: PauliLabel) -> String {
    format!("{beta}{p}")
}

/// The sixteen `G_{P,P'} = d_P d_{P'} σ_P σ_{P'} (Π + 𝔠_{Z,P'} Ξ)`, `P` outer.
pub fn build_g_family(geom: &OracleGeometry, r: f64) -> Result<KrausChannel> {
    check_rate("r", r)?;
    let mut ops = Vec::with_capacity(16);
    let mut labels = Vec::with_capacity(16);
    for p in PauliLabel::ALL {
        let sp = embed_on_qubit(p, geom.q);
        for pp in PauliLabel::ALL {
            let spp = embed_on_qubit(pp, geom.q);
            let w = depolarizing_weight(p, r) * depolarizing_weight(pp, r);
            let inner = &geom.pi + &geom.xi.scale_re(commutation_sign(pp));
            ops.push((&(&sp * &spp) * &inner).scale_re(w));
            labels.push(g_label(p, pp));
        }
    }
    KrausChannel::new(ops, labels, Completeness::ExactCptp)
}

/// `K_{0,P} = σ_P(a_P Π + b_P Ξ)` followed by `K_{1,P} = σ_P c_P Ξ`.
pub fn build_k_family(geom: &OracleGeometry, r: f64) -> Result<KrausChannel> {
    let co = KrausCoefficients::new(r)?;
    let mut ops = Vec::with_capacity(8);
    let mut labels = Vec::with_capacity(8);
    for beta in 0..2 {
        for p in PauliLabel::ALL {
            let sp = embed_on_qubit(p, geom.q);
            let body = if beta == 0 {
                &geom.pi.scale_re(co.a(p)) + &geom.xi.scale_re(co.b(p))
            } else {
                geom.xi.scale_re(co.c(p))
            };
            ops.push(&sp * &body);
            labels.push(k_label(beta, p));
        }
    }
    KrausChannel::new(ops, labels, Completeness::ExactCptp)
}

/// Deliberate defects for checking that the verification suite notices them.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Fault {
    #[default]
    None,
    /// Flips the sign of the `G_{X,I}` coefficient in the `K_{1,X}` column.
    /// A sign on a whole Kraus operator is a global phase and would go
    /// unnoticed, so the defect is placed inside the recombination.
    K1xSign,
}

/// One block of Table 1: rows are `G` labels, columns `(K_{1,P}, K_{0,P}, 0, 0)`.
#[derive(Clone, Debug)]
pub struct Table1Block {
    pub p: PauliLabel,
    pub rows: [(PauliLabel, PauliLabel); 4],
    pub u: CMatrix,
}

/// The four unitary blocks for `0 < r ≤ 1`.
pub fn table1_unitaries(r: f64) -> Result<[Table1Block; 4]> {
    table1_with(r, false, Fault::None)
}

/// As [`table1_unitaries`]; with `allow_zero`, `r = 0` evaluates the
/// closed forms directly (all denominators stay positive there).
pub fn table1_with(r: f64, allow_zero: bool, fault: Fault) -> Result<[Table1Block; 4]> {
    check_rate("r", r)?;
    if r == 0.0 && !allow_zero {
        return Err(Error::Degenerate(
            "Table 1 blocks requested at r = 0; opt in to the limiting values".into(),
        ));
    }
    use PauliLabel::{I as PI, X, Y, Z};
    let s = f64::sqrt;
    let a = s(4.0 - 6.0 * r + 3.0 * r * r);
    let b = s(8.0 - 12.0 * r + 5.0 * r * r);
    let c = s(2.0 - r);
    let h = 1.0 / s(2.0);
    let q = s(4.0 - 3.0 * r);
    let sr = s(r);
    let v = |x: f64| re(x);
    let iv = |x: f64| I * x;

    let block_i = [
        [v(r * (4.0 - 3.0 * r) / (2.0 * a * b)), v((4.0 - 3.0 * r) / (2.0 * a)), v(r / s(2.0 * b * b)), ZERO],
        [v(-b / (2.0 * a)), v(r / (2.0 * a)), ZERO, v(h)],
        [v(-b / (2.0 * a)), v(r / (2.0 * a)), ZERO, v(-h)],
        [v(r * r / (2.0 * a * b)), v(r / (2.0 * a)), v(-(4.0 - 3.0 * r) / s(2.0 * b * b)), ZERO],
    ];
    let mut block_x = [
        [v(-q / (2.0 * c)), v(q / (2.0 * c)), v(sr / s(2.0 * c * c)), ZERO],
        [v(q / (2.0 * c)), v(q / (2.0 * c)), ZERO, v(sr / s(2.0 * c * c))],
        [iv(-sr / (2.0 * c)), iv(-sr / (2.0 * c)), ZERO, iv(q / s(2.0 * c * c))],
        [iv(-sr / (2.0 * c)), iv(sr / (2.0 * c)), iv(-q / s(2.0 * c * c)), ZERO],
    ];
    let block_y = [
        [v(-q / (2.0 * c)), v(q / (2.0 * c)), v(sr / s(2.0 * c * c)), ZERO],
        [v(q / (2.0 * c)), v(q / (2.0 * c)), ZERO, v(sr / s(2.0 * c * c))],
        [iv(sr / (2.0 * c)), iv(-sr / (2.0 * c)), iv(q / s(2.0 * c * c)), ZERO],
        [iv(sr / (2.0 * c)), iv(sr / (2.0 * c)), ZERO, iv(-q / s(2.0 * c * c))],
    ];
    let block_z = [
        [v(sr / (2.0 * c)), v(q / (2.0 * c)), v(h), ZERO],
        [v(sr / (2.0 * c)), v(q / (2.0 * c)), v(-h), ZERO],
        [iv(q / (2.0 * c)), iv(-sr / (2.0 * c)), ZERO, v(h)],
        [iv(-q / (2.0 * c)), iv(sr / (2.0 * c)), ZERO, v(h)],
    ];
    if fault == Fault::K1xSign {
        block_x[1][0] = -block_x[1][0];
    }
    let to_matrix = |rows: [[C64; 4]; 4]| CMatrix::from_fn(4, 4, |i, j| rows[i][j]);
    Ok([
        Table1Block {
            p: PI,
            rows: [(PI, PI), (X, X), (Y, Y), (Z, Z)],
            u: to_matrix(block_i),
        },
        Table1Block {
            p: X,
            rows: [(PI, X), (X, PI), (Y, Z), (Z, Y)],
            u: to_matrix(block_x),
        },
        Table1Block {
            p: Y,
            rows: [(PI, Y), (Y, PI), (Z, X), (X, Z)],
            u: to_matrix(block_y),
        },
        Table1Block {
            p: Z,
            rows: [(Z, PI), (PI, Z), (X, Y), (Y, X)],
            u: to_matrix(block_z),
        },
    ])
}

/// Column `col` of a block applied to the `G` family: `Σ_i u_{i,col} G_i`.
pub fn recombine(block: &Table1Block, g: &KrausChannel, col: usize) -> CMatrix {
    let d = g.d_in();
    block
        .rows
        .iter()
        .enumerate()
        .fold(CMatrix::zeros(d, d), |acc, (i, &(p, pp))| {
            let gi = g.get(&g_label(p, pp)).expect("G family carries all sixteen labels");
            &acc + &gi.scale(block.u[(i, col)])
        })
}

/// The `K` family obtained from `G` through the Table 1 blocks, in the
/// order and labelling of [`build_k_family`].
pub fn k_family_from_table1(g: &KrausChannel, blocks: &[Table1Block; 4]) -> KrausChannel {
    let mut ops = Vec::with_capacity(8);
    let mut labels = Vec::with_capacity(8);
    for (beta, col) in [(0usize, 1usize), (1, 0)] {
        for block in blocks {
            ops.push(recombine(block, g, col));
            labels.push(k_label(beta, block.p));
        }
    }
    // A faulty table need not give a trace-non-increasing family.
    KrausChannel::unchecked(ops, labels, Completeness::SubCptp)
}

/// Checks the coefficient Claim: `a_I, b_I ≤ 1 − r/2`, the remaining
/// coefficients `≤ √(r/2)`, `Σa² = 1`, `Σb² ≤ 1`, `Σc² ≤ 2r`.
pub fn verify_coefficient_bounds(r: f64) -> Result<Report> {
    let co = KrausCoefficients::new(r)?;
    let params = format!("r={r}");
    let mut rep = Report::new();
    let big = 1.0 - r / 2.0;
    let small = (r / 2.0).sqrt();
    rep.push(CheckLine::bound("coef-aI", params.clone(), co.a(PauliLabel::I), big, 0.0));
    rep.push(CheckLine::bound("coef-bI", params.clone(), co.b(PauliLabel::I), big, 0.0));
    for (name, val) in [
        ("coef-aX", co.a(PauliLabel::X)),
        ("coef-aY", co.a(PauliLabel::Y)),
        ("coef-aZ", co.a(PauliLabel::Z)),
        ("coef-bZ", co.b(PauliLabel::Z)),
        ("coef-cI", co.c(PauliLabel::I)),
        ("coef-cX", co.c(PauliLabel::X)),
        ("coef-cY", co.c(PauliLabel::Y)),
        ("coef-cZ", co.c(PauliLabel::Z)),
    ] {
        rep.push(CheckLine::bound(name, params.clone(), val, small, 0.0));
    }
    let zero_bxy = co.b(PauliLabel::X).abs().max(co.b(PauliLabel::Y).abs());
    rep.push(CheckLine::within("coef-bXY-zero", params.clone(), zero_bxy, 0.0));
    rep.push(CheckLine::within("coef-sum-a2", params.clone(), (sq_sum(&co.a) - 1.0).abs(), 1e-12));
    rep.push(CheckLine::bound("coef-sum-b2", params.clone(), sq_sum(&co.b), 1.0, 1e-12));
    rep.push(CheckLine::bound("coef-sum-c2", params, sq_sum(&co.c), 2.0 * r, 1e-12));
    Ok(rep)
}

/// `({G_{x,0}, G_{x,1}}, {K_{x,0}, K_{x,1}})` for the negligent oracle.
pub fn negligent_kraus(n: usize, x: usize, p: f64) -> Result<(KrausChannel, KrausChannel)> {
    check_rate("p", p)?;
    if x >= n {
        return Err(Error::Index(format!("marked element {x} ≥ n = {n}")));
    }
    let d = 2 * n;
    let o = phase_oracle(n, &[x])?;
    let g = KrausChannel::new(
        vec![o.scale_re((1.0 - p).sqrt()), CMatrix::identity(d).scale_re(p.sqrt())],
        vec!["0".into(), "1".into()],
        Completeness::ExactCptp,
    )?;
    let proj = CMatrix::basis_projector(d, 2 * x + 1);
    let k = KrausChannel::new(
        vec![
            &CMatrix::identity(d) - &proj.scale_re(2.0 * (1.0 - p)),
            proj.scale_re(2.0 * (p * (1.0 - p)).sqrt()),
        ],
        vec!["0".into(), "1".into()],
        Completeness::ExactCptp,
    )?;
    Ok((g, k))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignalingNoiseSpec {
    pub q: QubitIndex,
    pub r: f64,
}

/// `𝒩⁺_{j,r}` as a channel from `Q` to `Q ⊗ F`, the flag `F` being the last
/// factor. Labels are `"0"` for the error-free branch and `"1P"` for the
/// depolarizing branch.
pub fn signaling_noise(spec: SignalingNoiseSpec) -> Result<KrausChannel> {
    check_rate("r", spec.r)?;
    let d = spec.q.query_dim();
    let flag = |f: usize| CMatrix::from_fn(2, 1, |i, _| if i == f { ONE } else { ZERO });
    let mut ops = vec![CMatrix::identity(d).scale_re((1.0 - spec.r).sqrt()).kron(&flag(0))];
    let mut labels = vec!["0".to_string()];
    for p in PauliLabel::ALL {
        ops.push(embed_on_qubit(p, spec.q).scale_re(spec.r.sqrt() / 2.0).kron(&flag(1)));
        labels.push(format!("1{p}"));
    }
    KrausChannel::new(ops, labels, Completeness::ExactCptp)
}

/// Discards the trailing flag factor of a channel `Q → Q ⊗ F`.
pub fn trace_out_flag(ch: &KrausChannel) -> Result<KrausChannel> {
    let d_out = ch.d_out();
    if d_out % 2 != 0 {
        return Err(Error::Dimension(format!("output dimension {d_out} carries no flag")));
    }
    let d = d_out / 2;
    let mut ops = Vec::with_capacity(2 * ch.len());
    let mut labels = Vec::with_capacity(2 * ch.len());
    for f in 0..2 {
        let bra = CMatrix::identity(d).kron(&CMatrix::from_fn(1, 2, |_, i| if i == f { ONE } else { ZERO }));
        for (k, l) in ch.ops().iter().zip(ch.labels()) {
            ops.push(&bra * k);
            labels.push(format!("{l}|{f}"));
        }
    }
    KrausChannel::new(ops, labels, ch.completeness())
}

/// Grids used by the verification sweeps.
pub mod grids {
    /// `{0.01, …, 0.99} ∪ {1e−4, 1 − 1e−4, 1}`.
    pub fn rate_grid() -> Vec<f64> {
        let mut g: Vec<f64> = (1..=99).map(|k| k as f64 / 100.0).collect();
        g.extend([1e-4, 1.0 - 1e-4, 1.0]);
        g
    }

    /// `{0.1, …, 0.9}`.
    pub fn coarse_grid() -> Vec<f64> {
        (1..=9).map(|k| k as f64 / 10.0).collect()
    }

    /// `{0.01k : k = 1..100}`.
    pub fn hundred_grid() -> Vec<f64> {
        (1..=100).map(|k| k as f64 / 100.0).collect()
    }
}

/// Verification checks producing report lines.
pub mod verify {
    use super::*;
    use crate::channels::channels_equal;

    fn params(n: usize, j: usize, x: usize, r: f64) -> String {
        format!("n={n},j={j},x={x},r={r}")
    }

    /// Choi equality of the `G` and `K` families.
    pub fn gk_equivalence(n: usize, x: usize, j: usize, r: f64, tol: f64) -> Result<CheckLine> {
        let geom = build_geometry(n, x, j)?;
        let g = build_g_family(&geom, r)?;
        let k = build_k_family(&geom, r)?;
        let (_, dev) = channels_equal(&g, &k, tol)?;
        Ok(CheckLine::within("gk-choi", params(n, j, x, r), dev, tol))
    }

    /// `G_{P,P'}` from its Π/Ξ form against the direct product
    /// `d_P d_{P'} σ_P O_{f_x} σ_{P'}`.
    pub fn g_direct_product(n: usize, x: usize, j: usize, r: f64) -> Result<CheckLine> {
        let geom = build_geometry(n, x, j)?;
        let g = build_g_family(&geom, r)?;
        let o = phase_oracle(n, &[x])?;
        let mut dev: f64 = 0.0;
        for p in PauliLabel::ALL {
            for pp in PauliLabel::ALL {
                let w = depolarizing_weight(p, r) * depolarizing_weight(pp, r);
                let direct = (&(&embed_on_qubit(p, geom.q) * &o) * &embed_on_qubit(pp, geom.q)).scale_re(w);
                dev = dev.max(direct.max_abs_diff(g.get(&g_label(p, pp)).expect("label")));
            }
        }
        Ok(CheckLine::within("g-direct", params(n, j, x, r), dev, 1e-12))
    }

    /// Block unitarity at `r`.
    pub fn table1_unitarity(r: f64, fault: Fault) -> Result<Vec<CheckLine>> {
        let blocks = table1_with(r, false, fault)?;
        Ok(blocks
            .iter()
            .map(|b| {
                let dev = (&b.u.adjoint() * &b.u)
                    .max_abs_diff(&CMatrix::identity(4))
                    .max((&b.u * &b.u.adjoint()).max_abs_diff(&CMatrix::identity(4)));
                CheckLine::within("table1-unitary", format!("block={},r={r}", b.p), dev, 1e-12)
            })
            .collect())
    }

    /// Entrywise reconstruction of the `K` operators, and vanishing of the
    /// two spare columns.
    pub fn table1_reconstruction(
        n: usize,
        x: usize,
        j: usize,
        r: f64,
        fault: Fault,
        tol: f64,
    ) -> Result<Vec<CheckLine>> {
        let geom = build_geometry(n, x, j)?;
        let g = build_g_family(&geom, r)?;
        let k = build_k_family(&geom, r)?;
        let blocks = table1_with(r, false, fault)?;
        let mut out = Vec::new();
        let mut dev_k: f64 = 0.0;
        let mut dev_zero: f64 = 0.0;
        for block in &blocks {
            let k1 = recombine(block, &g, 0);
            let k0 = recombine(block, &g, 1);
            dev_k = dev_k
                .max(k1.max_abs_diff(k.get(&k_label(1, block.p)).expect("label")))
                .max(k0.max_abs_diff(k.get(&k_label(0, block.p)).expect("label")));
            dev_zero = dev_zero.max(recombine(block, &g, 2).max_abs()).max(recombine(block, &g, 3).max_abs());
        }
        out.push(CheckLine::within("table1-reconstruct", params(n, j, x, r), dev_k, tol));
        out.push(CheckLine::within("table1-zero-cols", params(n, j, x, r), dev_zero, tol));
        let rebuilt = k_family_from_table1(&g, &blocks);
        let (_, dev_choi) = channels_equal(&rebuilt, &g, tol)?;
        out.push(CheckLine::within("table1-choi", params(n, j, x, r), dev_choi, tol));
        Ok(out)
    }

    /// The geometry identities and the (anti)commutation of `Π`, `Ξ` with
    /// the Paulis on qubit `j`.
    pub fn geometry(n: usize, x: usize, j: usize) -> Result<Vec<CheckLine>> {
        let geom = build_geometry(n, x, j)?;
        let p = format!("n={n},j={j},x={x}");
        let d = 2 * n;
        let id = CMatrix::identity(d);
        let o = phase_oracle(n, &[x])?;
        let mut out = vec![
            CheckLine::within("geom-oracle", p.clone(), (&geom.pi + &geom.xi).max_abs_diff(&o), 1e-12),
            CheckLine::within(
                "geom-resolution",
                p.clone(),
                (&geom.pi + &(&geom.xi * &geom.xi)).max_abs_diff(&id),
                1e-12,
            ),
            CheckLine::within(
                "geom-projector",
                p.clone(),
                (&geom.pi * &geom.pi).max_abs_diff(&geom.pi).max(geom.pi.hermitian_defect()),
                1e-12,
            ),
            CheckLine::within(
                "geom-xi-cube",
                p.clone(),
                (&(&geom.xi * &geom.xi) * &geom.xi).max_abs_diff(&geom.xi).max(geom.xi.hermitian_defect()),
                1e-12,
            ),
        ];
        let mut dev: f64 = 0.0;
        for s in PauliLabel::ALL {
            let sp = embed_on_qubit(s, geom.q);
            dev = dev.max(geom.pi.commutator(&sp).max_abs());
            let xi_dev = if s.flips() {
                geom.xi.anticommutator(&sp).max_abs()
            } else {
                geom.xi.commutator(&sp).max_abs()
            };
            dev = dev.max(xi_dev);
        }
        out.push(CheckLine::within("geom-pauli-commutation", p, dev, 1e-12));
        Ok(out)
    }

    /// Choi equality of the two negligent Kraus pairs.
    pub fn negligent_pairs(n: usize, x: usize, p: f64, tol: f64) -> Result<CheckLine> {
        let (g, k) = negligent_kraus(n, x, p)?;
        let (_, dev) = channels_equal(&g, &k, tol)?;
        Ok(CheckLine::within("negligent-choi", format!("n={n},x={x},p={p}"), dev, tol))
    }
}
