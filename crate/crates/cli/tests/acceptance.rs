//! One line per acceptance criterion; exits non-zero if any fails.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use qvn_core::control::{controlled_unknown, ideal_controlled};
use qvn_core::duality::{
    apply_comb, apply_superchannel, apply_via_choi, choi_of_channel, kraus_from_choi, ChoiState,
    Comb, Superchannel,
};
use qvn_core::qec::{build_recovery, check_kl, error_channel, logical_ebit, Code, ErrorSet};
use qvn_core::qkernel::linalg::{identity, kron, kron_vec, max_abs_diff, trace};
use qvn_core::qkernel::random::{
    haar_special_unitary, haar_unitary, random_channel, random_density, random_state,
};
use qvn_core::qkernel::{
    apply_channel, gates, DensityOperator, KrausChannel, Observable, PureState, UnitaryOp,
};
use qvn_core::tailed::inject::{injection_branches, monolithic_toffoli, toffoli_cascade};
use qvn_core::tailed::Endpoint;
use qvn_core::tailed::{
    circle, eval_topological, run_algorithm, AlgorithmInput, Executor, InjectionMode,
    InjectionSpec, ReadoutSpec, TailedCircuit, TopoDiagram, TopoEndpoint,
};
use qvn_core::uqt::compose::bell_probabilities;
use qvn_core::uqt::{compose, realise_comb, symmetric_decompose, ByproductStrategy, StoredProgram};
use qvn_core::{CMatrix, CVector, RngStream, C};

const DUALITY_TOL: f64 = 1e-9;
const READOUT_TOL: f64 = 1e-10;
const IDENTITY_TOL: f64 = 1e-12;
const MARGINAL_TOL: f64 = 1e-10;
const COMPOSE_FIDELITY_TOL: f64 = 1e-10;
const BELL_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-10;
const PRODUCT_TOL: f64 = 1e-9;
const INJECTION_SIGMAS: f64 = 4.0;
const INJECTION_EXACT_TOL: f64 = 1e-12;
const READOUT_SIGMAS: f64 = 4.0;
const READOUT_PASS_RATE: f64 = 0.95;
const CASCADE_TOL: f64 = 1e-12;
const CONTROLLED_TOL: f64 = 1e-9;
const COMB_TOL: f64 = 1e-10;
const COMB_FIDELITY_TOL: f64 = 1e-9;
const KL_TOL: f64 = 1e-12;
const RECOVERY_FIDELITY_TOL: f64 = 1e-10;
const KL_FAIL_MIN: f64 = 0.1;
const EBIT_TOL: f64 = 1e-10;
const CIRCLE_TOL: f64 = 1e-12;
const LINK_TOL: f64 = 1e-10;

/// Unitary, declared eigenstate, eigenvalue.
type ControlledCase = (String, UnitaryOp<f64>, PureState<f64>, C<f64>);
type Check = Box<dyn FnOnce(&mut Vec<f64>) -> Outcome>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn c(re: f64, im: f64) -> C<f64> {
    C::new(re, im)
}

/// `½‖A‖₁` for an arbitrary (not necessarily Hermitian) matrix.
fn half_trace_norm(m: &CMatrix<f64>) -> f64 {
    0.5 * m
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .sum::<f64>()
}

fn matrix_unit(d: usize, i: usize, j: usize) -> CMatrix<f64> {
    CMatrix::from_fn(d, d, |a, b| {
        if a == i && b == j {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

fn marginal_error(choi: &ChoiState<f64>, ch: &KrausChannel<f64>) -> f64 {
    let d = choi.d();
    let id = identity::<f64>(d).unscale(d as f64);
    let image = ch.apply_matrix(&identity(d)).unwrap().unscale(d as f64);
    max_abs_diff(&choi.tail_marginal(), &id).max(max_abs_diff(&choi.head_marginal(), &image))
}

fn duality_round_trip(marginals: &mut Vec<f64>) -> Outcome {
    let start = Instant::now();
    let mut rng = RngStream::new(1, 0);
    let mut worst: f64 = 0.0;
    for d in [2, 3, 4] {
        for _ in 0..50 {
            let rank = 1 + (rng.uniform() * (d * d) as f64) as usize % (d * d);
            let ch = random_channel::<f64>(d, rank, &mut rng);
            let choi = choi_of_channel(&ch).unwrap();
            marginals.push(marginal_error(&choi, &ch));
            let back = kraus_from_choi(&choi).unwrap();
            for i in 0..d {
                for j in 0..d {
                    let e = matrix_unit(d, i, j);
                    let diff = ch.apply_matrix(&e).unwrap() - back.apply_matrix(&e).unwrap();
                    worst = worst.max(half_trace_norm(&diff));
                }
            }
        }
    }
    let t = start.elapsed();
    Outcome {
        pass: worst <= DUALITY_TOL && t < Duration::from_secs(10),
        detail: format!("150 channels, max trace distance {worst:.2e} (tol {DUALITY_TOL:e}), {:.2} s (limit 10 s)", t.as_secs_f64()),
    }
}

fn readout_formula(marginals: &mut Vec<f64>) -> Outcome {
    let mut rng = RngStream::new(2, 0);
    let mut worst: f64 = 0.0;
    for d in [2, 3, 4] {
        for _ in 0..20 {
            let ch = random_channel::<f64>(d, 3, &mut rng);
            let choi = choi_of_channel(&ch).unwrap();
            marginals.push(marginal_error(&choi, &ch));
            let rho = random_density::<f64>(vec![d], &mut rng);
            let a = apply_via_choi(&choi, &rho).unwrap();
            let b = apply_channel(&ch, &rho).unwrap();
            worst = worst.max(max_abs_diff(a.matrix(), b.matrix()));
        }
    }
    let mut id_worst: f64 = 0.0;
    for d in [2, 3, 4] {
        let ch = KrausChannel::identity(d);
        let choi = choi_of_channel(&ch).unwrap();
        marginals.push(marginal_error(&choi, &ch));
        for _ in 0..10 {
            let rho = random_density::<f64>(vec![d], &mut rng);
            id_worst = id_worst.max(max_abs_diff(
                apply_via_choi(&choi, &rho).unwrap().matrix(),
                rho.matrix(),
            ));
        }
    }
    Outcome {
        pass: worst <= READOUT_TOL && id_worst <= IDENTITY_TOL,
        detail: format!(
            "max |choi − kraus| {worst:.2e} (tol {READOUT_TOL:e}), identity {id_worst:.2e} (tol {IDENTITY_TOL:e})"
        ),
    }
}

fn choi_marginals(marginals: &[f64]) -> Outcome {
    let worst = marginals.iter().copied().fold(0.0, f64::max);
    Outcome {
        pass: worst <= MARGINAL_TOL && !marginals.is_empty(),
        detail: format!(
            "{} Choi states, max marginal error {worst:.2e} (tol {MARGINAL_TOL:e})",
            marginals.len()
        ),
    }
}

fn composition_correctness() -> Outcome {
    let start = Instant::now();
    let mut rng = RngStream::new(4, 0);
    let strategies = [
        ByproductStrategy::RepeatUntilSuccess,
        ByproductStrategy::CorrectionTable,
        ByproductStrategy::SymmetricPair,
    ];
    let mut worst: f64 = 0.0;
    let mut single_pass = true;
    for (d, pairs) in [(2, 100), (4, 25)] {
        for _ in 0..pairs {
            let u1 = haar_special_unitary::<f64>(d, &mut rng);
            let u2 = haar_special_unitary::<f64>(d, &mut rng);
            let want = u2.matrix() * u1.matrix();
            let p1 = StoredProgram::from_unitary(u1);
            let p2 = StoredProgram::from_unitary(u2);
            for s in strategies {
                let r = compose(&p1, &p2, s, &mut rng).unwrap();
                worst = worst.max(1.0 - r.program.fidelity_with(&want));
                if s != ByproductStrategy::RepeatUntilSuccess && r.shots_used != 1 {
                    single_pass = false;
                }
            }
        }
    }
    let mut rus = Vec::new();
    let mut rus_ok = true;
    for d in [2, 4] {
        let runs = 2000;
        let p1 = StoredProgram::from_unitary(haar_unitary::<f64>(d, &mut rng));
        let p2 = StoredProgram::from_unitary(haar_unitary::<f64>(d, &mut rng));
        let total: usize = (0..runs)
            .map(|_| {
                compose(&p1, &p2, ByproductStrategy::RepeatUntilSuccess, &mut rng)
                    .unwrap()
                    .shots_used
            })
            .sum();
        let mean = total as f64 / runs as f64;
        let p = 1.0 / (d * d) as f64;
        let se = ((1.0 - p) / (p * p) / runs as f64).sqrt();
        rus_ok &= (mean - (d * d) as f64).abs() <= 3.0 * se;
        rus.push(format!(
            "d={d} mean {mean:.3} vs {} ± {:.3}",
            d * d,
            3.0 * se
        ));
    }
    let t = start.elapsed();
    Outcome {
        pass: worst <= COMPOSE_FIDELITY_TOL && single_pass && rus_ok && t < Duration::from_secs(60),
        detail: format!(
            "max infidelity {worst:.2e} (tol {COMPOSE_FIDELITY_TOL:e}), single-pass {single_pass}, repeat-until-success {}, {:.2} s (limit 60 s)",
            rus.join("; "),
            t.as_secs_f64()
        ),
    }
}

fn bell_statistics() -> Outcome {
    let mut rng = RngStream::new(5, 0);
    let mut worst: f64 = 0.0;
    for d in [2, 3, 4] {
        for _ in 0..10 {
            let p1 = StoredProgram::from_unitary(haar_unitary::<f64>(d, &mut rng));
            let p2 = StoredProgram::from_unitary(haar_unitary::<f64>(d, &mut rng));
            let amps = kron_vec(
                p1.choi().amplitudes().unwrap(),
                p2.choi().amplitudes().unwrap(),
            );
            let joint = PureState::new(amps, vec![d, d, d, d]).unwrap();
            // head of the first program against the tail of the second
            for p in bell_probabilities(&joint, 0, 3, &p2.bell_basis()).unwrap() {
                worst = worst.max((p - 1.0 / (d * d) as f64).abs());
            }
        }
    }
    Outcome {
        pass: worst <= BELL_TOL,
        detail: format!("max |p − 1/d²| {worst:.2e} (tol {BELL_TOL:e})"),
    }
}

fn symmetric_decomposition() -> Outcome {
    let mut rng = RngStream::new(6, 0);
    let (mut sym, mut prod): (f64, f64) = (0.0, 0.0);
    for d in [2, 3, 4, 8] {
        for _ in 0..25 {
            let u = haar_unitary::<f64>(d, &mut rng);
            let f = symmetric_decompose(&u).unwrap();
            for s in [&f.s1, &f.s2] {
                sym = sym.max(max_abs_diff(s.matrix(), &s.matrix().transpose()));
            }
            prod = prod.max(max_abs_diff(&f.product(), u.matrix()));
        }
    }
    Outcome {
        pass: sym <= SYMMETRY_TOL && prod <= PRODUCT_TOL,
        detail: format!("100 unitaries, max |S − Sᵗ| {sym:.2e} (tol {SYMMETRY_TOL:e}), max |S1S2 − U| {prod:.2e} (tol {PRODUCT_TOL:e})"),
    }
}

fn injection_probability() -> Outcome {
    let shots = 100_000;
    let mut ok = true;
    let mut parts = Vec::new();
    for n in 1..=4usize {
        let d = 1 << n;
        let mut circuit = TailedCircuit::program(UnitaryOp::<f64>::identity(d), 2).unwrap();
        circuit.set_injection(InjectionSpec::all_ones(n)).unwrap();
        let zs = gates::pauli_string::<f64>(&"Z".repeat(n)).unwrap();
        circuit
            .set_readout(ReadoutSpec::on_heads(Observable::new(zs).unwrap(), n))
            .unwrap();
        let ex = Executor::new(&circuit).unwrap();
        let (est, _) = ex.run(shots, &mut RngStream::new(7, n as u64)).unwrap();
        let want = 1.0 / d as f64;
        let freq = est.p1.count as f64 / shots as f64;
        let sigma = (want * (1.0 - want) / shots as f64).sqrt();

        // exact projector probability on n ebits (heads are wires 0..n, tails n..2n)
        let amps = CVector::from_fn(d * d, |k, _| {
            if k / d == k % d {
                c(1.0 / (d as f64).sqrt(), 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let state = PureState::new(amps, vec![2; 2 * n]).unwrap();
        let tails: Vec<usize> = (n..2 * n).collect();
        let branches =
            injection_branches(&state, &tails, &vec![true; n], InjectionMode::Monolithic).unwrap();
        let exact = branches[1].probability;
        ok &= (freq - want).abs() <= INJECTION_SIGMAS * sigma
            && (exact - want).abs() <= INJECTION_EXACT_TOL;
        parts.push(format!("n={n} freq {freq:.5} exact {exact:.3e}"));
    }
    Outcome {
        pass: ok,
        detail: format!(
            "{} vs 2^-n (±{INJECTION_SIGMAS}σ, exact tol {INJECTION_EXACT_TOL:e})",
            parts.join("; ")
        ),
    }
}

fn algorithmic_readout() -> Outcome {
    let start = Instant::now();
    let mut rng = RngStream::new(8, 0);
    let su4 = haar_special_unitary::<f64>(4, &mut rng);
    let zz = kron(&gates::z::<f64>(), &gates::z());
    let cases: Vec<(&str, CMatrix<f64>, CMatrix<f64>, usize)> = vec![
        ("H", gates::h(), gates::z(), 1),
        ("TH", gates::t::<f64>() * gates::h::<f64>(), gates::z(), 1),
        ("SU(4)", su4.matrix().clone(), zz, 2),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, u, o, n) in cases {
        let d = 1 << n;
        let ones = CVector::from_fn(d, |k, _| if k == d - 1 { c(1.0, 0.0) } else { c(0.0, 0.0) });
        let out = &u * &ones;
        let exact = (out.adjoint() * &o * &out)[(0, 0)].re;
        let p = StoredProgram::from_unitary(UnitaryOp::new(u).unwrap());
        let ro = ReadoutSpec::on_heads(Observable::new(o).unwrap(), n);
        let inj = InjectionSpec::all_ones(n);
        let mut hits = 0;
        for rep in 0..100u64 {
            let mut r = RngStream::new(80 + n as u64, rep);
            let (e, _) =
                run_algorithm(AlgorithmInput::Program(&p), &ro, &inj, 10_000, &mut r).unwrap();
            if (e.value - exact).abs() <= READOUT_SIGMAS * e.std_error {
                hits += 1;
            }
        }
        ok &= hits as f64 / 100.0 >= READOUT_PASS_RATE;
        parts.push(format!("{label} {hits}/100"));
    }
    let t = start.elapsed();
    Outcome {
        pass: ok && t < Duration::from_secs(120),
        detail: format!(
            "within {READOUT_SIGMAS} SE: {} (need ≥ {:.0}%), {:.2} s (limit 120 s)",
            parts.join(", "),
            READOUT_PASS_RATE * 100.0,
            t.as_secs_f64()
        ),
    }
}

fn toffoli_cascade_check() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 2..=6usize {
        let cascade = toffoli_cascade(n).unwrap();
        let mono = gates::mcx::<f64>(n);
        let _ = monolithic_toffoli(n);
        let q = 2 * n;
        let dims = vec![2; q];
        // controls, work ancillas in |0⟩, target
        let wires: Vec<usize> = (0..q).collect();
        for x in 0..1usize << (n + 1) {
            let ctl = x >> 1;
            let tgt = x & 1;
            let full = (ctl << n) | tgt;
            let input = CVector::from_fn(
                1 << q,
                |k, _| if k == full { c(1.0, 0.0) } else { c(0.0, 0.0) },
            );
            let got = cascade.apply(&input, &dims, &wires).unwrap();
            for row in 0..1usize << q {
                let anc = (row >> 1) & ((1 << (n - 1)) - 1);
                let want = if anc == 0 {
                    let m_row = ((row >> n) << 1) | (row & 1);
                    mono[(m_row, x)]
                } else {
                    c(0.0, 0.0)
                };
                worst = worst.max((got[row] - want).norm());
            }
        }
    }
    Outcome {
        pass: worst <= CASCADE_TOL,
        detail: format!("n = 2..6, max entry difference {worst:.2e} (tol {CASCADE_TOL:e})"),
    }
}

/// Control in {|0⟩, |1⟩, |+⟩, |+i⟩} times target basis states and their
/// pairwise superpositions.
fn spanning_inputs(d: usize) -> Vec<DensityOperator<f64>> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = c(0.0, 0.0);
    let ctl = [
        CVector::from_vec(vec![c(1.0, 0.0), z]),
        CVector::from_vec(vec![z, c(1.0, 0.0)]),
        CVector::from_vec(vec![c(s, 0.0), c(s, 0.0)]),
        CVector::from_vec(vec![c(s, 0.0), c(0.0, s)]),
    ];
    let mut tgt = Vec::new();
    for i in 0..d {
        tgt.push(CVector::from_fn(
            d,
            |k, _| if k == i { c(1.0, 0.0) } else { z },
        ));
        for j in i + 1..d {
            tgt.push(CVector::from_fn(d, |k, _| {
                if k == i || k == j {
                    c(s, 0.0)
                } else {
                    z
                }
            }));
            tgt.push(CVector::from_fn(d, |k, _| {
                if k == i {
                    c(s, 0.0)
                } else if k == j {
                    c(0.0, s)
                } else {
                    z
                }
            }));
        }
    }
    ctl.iter()
        .flat_map(|a| {
            tgt.iter().map(move |b| {
                PureState::new(kron_vec(a, b), vec![2, d])
                    .unwrap()
                    .density()
            })
        })
        .collect()
}

fn controlled_unknown_check() -> Outcome {
    let mut rng = RngStream::new(10, 0);
    let mut cases: Vec<ControlledCase> = vec![
        (
            "Z".into(),
            UnitaryOp::new(gates::z()).unwrap(),
            PureState::basis(vec![2], 0).unwrap(),
            c(1.0, 0.0),
        ),
        (
            "T".into(),
            UnitaryOp::new(gates::t()).unwrap(),
            PureState::basis(vec![2], 0).unwrap(),
            c(1.0, 0.0),
        ),
    ];
    for d in [2, 3, 4] {
        let v = haar_unitary::<f64>(d, &mut rng);
        let phases: Vec<C<f64>> = (0..d)
            .map(|_| C::from_polar(1.0, 6.0 * rng.uniform()))
            .collect();
        let diag = CMatrix::from_fn(d, d, |i, j| if i == j { phases[i] } else { c(0.0, 0.0) });
        let u = UnitaryOp::new(v.matrix() * diag * v.matrix().adjoint()).unwrap();
        let phi = PureState::new(v.matrix().column(d - 1).into_owned(), vec![d]).unwrap();
        cases.push((format!("diag d={d}"), u, phi, phases[d - 1]));
    }
    let mut worst: f64 = 0.0;
    for (_, u, phi, lambda) in &cases {
        let cu = controlled_unknown(u, phi, *lambda).unwrap();
        let ideal = ideal_controlled(u, *lambda);
        for rho in spanning_inputs(u.dim()) {
            let want =
                DensityOperator::new(&ideal * rho.matrix() * ideal.adjoint(), vec![2, u.dim()])
                    .unwrap();
            worst = worst.max(cu.apply(&rho).unwrap().trace_distance(&want));
        }
    }
    let names: Vec<&str> = cases.iter().map(|c| c.0.as_str()).collect();
    Outcome {
        pass: worst <= CONTROLLED_TOL,
        detail: format!(
            "{}: max trace distance {worst:.2e} (tol {CONTROLLED_TOL:e})",
            names.join(", ")
        ),
    }
}

fn comb_equivalence() -> Outcome {
    let mut rng = RngStream::new(11, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let pre = haar_unitary::<f64>(4, &mut rng);
        let post = haar_unitary::<f64>(4, &mut rng);
        let ch = random_channel::<f64>(2, 2, &mut rng);
        let s = Superchannel::new(2, pre.clone(), post.clone()).unwrap();
        let comb = Comb::new(2, vec![pre, post]).unwrap();
        let a = choi_of_channel(&apply_comb(&comb, std::slice::from_ref(&ch)).unwrap()).unwrap();
        let b = choi_of_channel(&apply_superchannel(&s, &ch).unwrap()).unwrap();
        worst = worst.max(max_abs_diff(a.matrix(), b.matrix()));
    }
    let mut infid: f64 = 0.0;
    for _ in 0..5 {
        let (d, m) = (2, 2);
        let teeth: Vec<_> = (0..3)
            .map(|_| haar_unitary::<f64>(d * m, &mut rng))
            .collect();
        let qs: Vec<_> = (0..2).map(|_| haar_unitary::<f64>(d, &mut rng)).collect();
        let tp: Vec<_> = teeth
            .iter()
            .cloned()
            .map(StoredProgram::from_unitary)
            .collect();
        let qp: Vec<_> = qs
            .iter()
            .cloned()
            .map(StoredProgram::from_unitary)
            .collect();
        let r = realise_comb(&tp, &qp, ByproductStrategy::CorrectionTable, &mut rng).unwrap();
        let lift = |q: &UnitaryOp<f64>| kron(q.matrix(), &identity(m));
        let dense =
            teeth[2].matrix() * lift(&qs[1]) * teeth[1].matrix() * lift(&qs[0]) * teeth[0].matrix();
        infid = infid.max(1.0 - r.program.fidelity_with(&dense));
    }
    Outcome {
        pass: worst <= COMB_TOL && infid <= COMB_FIDELITY_TOL,
        detail: format!(
            "2-comb vs superchannel {worst:.2e} (tol {COMB_TOL:e}), 3-tooth infidelity {infid:.2e} (tol {COMB_FIDELITY_TOL:e})"
        ),
    }
}

fn qec_check() -> Outcome {
    let code = Code::<f64>::repetition();
    let x = ErrorSet::paulis(&["III", "XII", "IXI", "IIX"]).unwrap();
    let kl = check_kl(&code, &x).unwrap();
    let p = 0.1;
    let noise = x.weighted(&[1.0 - 3.0 * p, p, p, p]).unwrap();
    let rec = build_recovery(&code, &noise).unwrap().channel().unwrap();
    let ch = error_channel(&noise).unwrap();
    let mut rng = RngStream::new(12, 0);
    let mut infid: f64 = 0.0;
    for _ in 0..50 {
        let psi = random_state::<f64>(vec![2], &mut rng);
        let enc = PureState::new(code.isometry() * psi.amplitudes(), vec![8]).unwrap();
        let out = apply_channel(&rec, &apply_channel(&ch, &enc.density()).unwrap()).unwrap();
        let f = (enc.amplitudes().adjoint() * out.matrix() * enc.amplitudes())[(0, 0)].re;
        infid = infid.max(1.0 - f);
    }
    let z = check_kl(
        &code,
        &ErrorSet::paulis(&["III", "ZII", "IZI", "IIZ"]).unwrap(),
    )
    .unwrap();
    Outcome {
        pass: kl.satisfied && kl.max_residual <= KL_TOL && infid <= RECOVERY_FIDELITY_TOL && !z.satisfied && z.max_residual >= KL_FAIL_MIN,
        detail: format!(
            "X residual {:.2e} (tol {KL_TOL:e}), recovery infidelity {infid:.2e} (tol {RECOVERY_FIDELITY_TOL:e}), Z residual {:.3} (need ≥ {KL_FAIL_MIN})",
            kl.max_residual, z.max_residual
        ),
    }
}

fn logical_ebit_check() -> Outcome {
    let mut worst: f64 = 0.0;
    for code in [
        Code::<f64>::trivial(),
        Code::repetition(),
        Code::phase_flip(),
    ] {
        let e = logical_ebit(&code);
        let want = code.projector().unscale(code.logical_dim() as f64);
        for keep in [0, 1] {
            worst = worst.max(max_abs_diff(e.reduced(&[keep]).unwrap().matrix(), &want));
        }
    }
    Outcome {
        pass: worst <= EBIT_TOL,
        detail: format!(
            "trivial, repetition, phase-flip: max |tr_half − P/2^k| {worst:.2e} (tol {EBIT_TOL:e})"
        ),
    }
}

/// `⟨ω|_{a.h, b.t} ⟨ω|_{b.h, a.t} (|ω_A⟩ ⊗ |ω_B⟩)` summed out index by index.
fn link_oracle(a: &CMatrix<f64>, b: &CMatrix<f64>) -> C<f64> {
    let d = a.nrows();
    let norm = 1.0 / (d as f64).sqrt();
    // |ω_U⟩[h, t] = U[h, t] / √d
    let psi = |u: &CMatrix<f64>, h: usize, t: usize| u[(h, t)] * norm;
    let mut total = c(0.0, 0.0);
    for ah in 0..d {
        for at in 0..d {
            for bh in 0..d {
                for bt in 0..d {
                    if ah == bt && bh == at {
                        total += psi(a, ah, at) * psi(b, bh, bt) * norm * norm;
                    }
                }
            }
        }
    }
    total
}

fn topological_evaluation() -> Outcome {
    let mut rng = RngStream::new(14, 0);
    let mut circle_err: f64 = 0.0;
    let mut us: Vec<UnitaryOp<f64>> = vec![
        UnitaryOp::identity(2),
        UnitaryOp::new(gates::z()).unwrap(),
        UnitaryOp::new(gates::t()).unwrap(),
    ];
    for d in [2, 3, 4] {
        us.push(haar_unitary(d, &mut rng));
    }
    for u in &us {
        let got = eval_topological(&circle(u.clone()).unwrap())
            .unwrap()
            .closed()
            .unwrap();
        circle_err = circle_err.max((got - trace(u.matrix()) / c(u.dim() as f64, 0.0)).norm());
    }
    let ep = |vertex, end| TopoEndpoint { vertex, end };
    let (s, t) = (
        haar_unitary::<f64>(2, &mut rng),
        UnitaryOp::new(gates::t()).unwrap(),
    );
    let mut two = TopoDiagram::new();
    let a = two.vertex(s.clone()).unwrap();
    let b = two.vertex(t.clone()).unwrap();
    two.segment(ep(a, Endpoint::Head(0)), ep(a, Endpoint::Tail(0)));
    two.segment(ep(b, Endpoint::Head(0)), ep(b, Endpoint::Tail(0)));
    let prod = eval_topological(&two).unwrap().closed().unwrap();
    let single = |u: &UnitaryOp<f64>| {
        eval_topological(&circle(u.clone()).unwrap())
            .unwrap()
            .closed()
            .unwrap()
    };
    let disjoint_err = (prod - single(&s) * single(&t)).norm();

    let mut link_err: f64 = 0.0;
    for d in [2, 3] {
        let (ua, ub) = (
            haar_unitary::<f64>(d, &mut rng),
            haar_unitary::<f64>(d, &mut rng),
        );
        let mut link = TopoDiagram::new();
        let a = link.vertex_with_dim(ua.clone(), d).unwrap();
        let b = link.vertex_with_dim(ub.clone(), d).unwrap();
        link.segment(ep(a, Endpoint::Head(0)), ep(b, Endpoint::Tail(0)));
        link.segment(ep(b, Endpoint::Head(0)), ep(a, Endpoint::Tail(0)));
        let got = eval_topological(&link).unwrap().closed().unwrap();
        link_err = link_err.max((got - link_oracle(ua.matrix(), ub.matrix())).norm());
    }
    Outcome {
        pass: circle_err <= CIRCLE_TOL && disjoint_err <= CIRCLE_TOL && link_err <= LINK_TOL,
        detail: format!(
            "circle {circle_err:.2e}, disjoint {disjoint_err:.2e} (tol {CIRCLE_TOL:e}), link vs brute force {link_err:.2e} (tol {LINK_TOL:e})"
        ),
    }
}

fn canonical(args: &[&str]) -> Result<serde_json::Value, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_qvn"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    Ok(v["canonical"].clone())
}

fn determinism() -> Outcome {
    let demo = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("demo");
    let p = |f: &str| demo.join(f).to_string_lossy().into_owned();
    let commands: Vec<(Vec<String>, Vec<String>)> = vec![
        (
            vec![
                "run".into(),
                "--schedule".into(),
                p("th.qvns"),
                "--memory".into(),
                p("memory.qvnm"),
                "--seed".into(),
                "5".into(),
                "--threads".into(),
                "1".into(),
                "--records".into(),
            ],
            vec![
                "run".into(),
                "--schedule".into(),
                p("th.qvns"),
                "--memory".into(),
                p("memory.qvnm"),
                "--seed".into(),
                "5".into(),
                "--threads".into(),
                "4".into(),
                "--records".into(),
            ],
        ),
        (
            vec![
                "compose".into(),
                "--first".into(),
                p("h.qvn"),
                "--second".into(),
                p("t.qvn"),
                "--repeats".into(),
                "10".into(),
                "--seed".into(),
                "3".into(),
            ],
            vec![
                "compose".into(),
                "--first".into(),
                p("h.qvn"),
                "--second".into(),
                p("t.qvn"),
                "--repeats".into(),
                "10".into(),
                "--seed".into(),
                "3".into(),
            ],
        ),
        (
            vec!["qec-check".into(), "--code".into(), p("rep3_x.qvnc")],
            vec!["qec-check".into(), "--code".into(), p("rep3_x.qvnc")],
        ),
        (
            vec!["topo-eval".into(), "--diagram".into(), p("link.qvnt")],
            vec!["topo-eval".into(), "--diagram".into(), p("link.qvnt")],
        ),
    ];
    let mut ok = true;
    let mut names = Vec::new();
    for (a, b) in &commands {
        let a: Vec<&str> = a.iter().map(String::as_str).collect();
        let b: Vec<&str> = b.iter().map(String::as_str).collect();
        let same = match (canonical(&a), canonical(&b)) {
            (Ok(x), Ok(y)) => x == y,
            (Err(e), _) | (_, Err(e)) => {
                eprintln!("{e}");
                false
            }
        };
        ok &= same;
        names.push(format!(
            "{} {}",
            a[0],
            if same { "identical" } else { "differs" }
        ));
    }
    Outcome {
        pass: ok,
        detail: names.join(", "),
    }
}

fn main() {
    let mut marginals = Vec::new();
    let checks: Vec<(&str, Check)> = vec![
        ("duality round trip", Box::new(duality_round_trip)),
        ("readout formula", Box::new(readout_formula)),
        (
            "Choi marginals",
            Box::new(|m: &mut Vec<f64>| choi_marginals(m)),
        ),
        (
            "composition correctness",
            Box::new(|_: &mut Vec<f64>| composition_correctness()),
        ),
        (
            "Bell statistics",
            Box::new(|_: &mut Vec<f64>| bell_statistics()),
        ),
        (
            "symmetric decomposition",
            Box::new(|_: &mut Vec<f64>| symmetric_decomposition()),
        ),
        (
            "injection probability",
            Box::new(|_: &mut Vec<f64>| injection_probability()),
        ),
        (
            "algorithmic readout",
            Box::new(|_: &mut Vec<f64>| algorithmic_readout()),
        ),
        (
            "Toffoli cascade",
            Box::new(|_: &mut Vec<f64>| toffoli_cascade_check()),
        ),
        (
            "controlled-unknown gate",
            Box::new(|_: &mut Vec<f64>| controlled_unknown_check()),
        ),
        (
            "comb equivalence",
            Box::new(|_: &mut Vec<f64>| comb_equivalence()),
        ),
        ("error correction", Box::new(|_: &mut Vec<f64>| qec_check())),
        (
            "logical ebit",
            Box::new(|_: &mut Vec<f64>| logical_ebit_check()),
        ),
        (
            "topological evaluation",
            Box::new(|_: &mut Vec<f64>| topological_evaluation()),
        ),
        ("determinism", Box::new(|_: &mut Vec<f64>| determinism())),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.into_iter().enumerate() {
        let o = check(&mut marginals);
        println!(
            "{} {:>2} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!("{} of 15 criteria passed", 15 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
