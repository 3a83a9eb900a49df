use proptest::prelude::*;
use qvn_core::duality::choi::vectorize_single;
use qvn_core::qkernel::linalg::identity;
use qvn_core::qkernel::random::haar_unitary;
use qvn_core::qkernel::{gates, Observable, RngStream, UnitaryOp};
use qvn_core::tailed::inject::{injection_branches, toffoli_cascade};
use qvn_core::tailed::{
    circle, contract, eval_topological, simulate, Endpoint, Executor, InjectionMode, InjectionSpec,
    ReadoutSpec, TailedCircuit, TopoDiagram, TopoEndpoint,
};
use qvn_core::{CVector, C};

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(24)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn simulate_is_normalized(seed: u64, ebits in 1usize..=3, qubits in 0usize..=2, gates_n in 0usize..=6) {
        let mut rng = RngStream::new(seed, 0);
        let mut c = TailedCircuit::<f64>::new(ebits, qubits);
        let mut targets: Vec<Endpoint> = (0..ebits).map(Endpoint::Head).collect();
        targets.extend((0..qubits).map(Endpoint::Qubit));
        for _ in 0..gates_n {
            let t = targets[(rng.uniform() * targets.len() as f64) as usize % targets.len()];
            c.gate(haar_unitary(2, &mut rng), vec![t]).unwrap();
        }
        let s = simulate(&c).unwrap();
        prop_assert!((s.amplitudes().norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn postselected_chain_composes(seed: u64, m in 1usize..=4) {
        let mut rng = RngStream::new(seed, 1);
        let us: Vec<UnitaryOp<f64>> = (0..m).map(|_| haar_unitary(2, &mut rng)).collect();
        let mut c = TailedCircuit::<f64>::new(m, 0);
        for (i, u) in us.iter().enumerate() {
            c.gate(u.clone(), vec![Endpoint::Head(i)]).unwrap();
        }
        let mut state = simulate(&c).unwrap();
        // wire labels: (ebit, is_head)
        let mut labels: Vec<(usize, bool)> = (0..m).flat_map(|e| [(e, true), (e, false)]).collect();
        for e in 0..m - 1 {
            let a = labels.iter().position(|&l| l == (e, true)).unwrap();
            let b = labels.iter().position(|&l| l == (e + 1, false)).unwrap();
            state = contract(&state, a, b, &mut rng, true).unwrap().state.unwrap();
            labels.retain(|&l| l != (e, true) && l != (e + 1, false));
        }
        // remaining: tail of ebit 0 and head of ebit m − 1, in wire order
        prop_assert_eq!(labels.len(), 2);
        let head_first = labels[0] == (m - 1, true);
        prop_assert!(labels.contains(&(0, false)) && labels.contains(&(m - 1, true)));
        let v = state.amplitudes();
        let head_tail = if head_first { v.clone() } else { CVector::from_fn(4, |k, _| v[(k % 2) * 2 + k / 2]) };
        let product = us.iter().fold(identity::<f64>(2), |acc, u| u.matrix() * acc);
        let want = vectorize_single(&product);
        prop_assert!((want.adjoint() * head_tail)[(0, 0)].norm_sqr() >= 1.0 - 1e-9);
    }

    #[test]
    fn circle_is_normalized_trace(seed: u64, d in 2usize..=4) {
        let u = haar_unitary::<f64>(d, &mut RngStream::new(seed, 2));
        let got = eval_topological(&circle(u.clone()).unwrap()).unwrap().closed().unwrap();
        let want = u.matrix().trace() / C::new(d as f64, 0.0);
        prop_assert!((got - want).norm() <= 1e-12);
    }

    #[test]
    fn disjoint_circles_multiply(seed: u64) {
        let mut rng = RngStream::new(seed, 3);
        let a = haar_unitary::<f64>(2, &mut rng);
        let b = haar_unitary::<f64>(2, &mut rng);
        let ep = |vertex, end| TopoEndpoint { vertex, end };
        let mut d = TopoDiagram::new();
        let x = d.vertex(a.clone()).unwrap();
        let y = d.vertex(b.clone()).unwrap();
        d.segment(ep(x, Endpoint::Head(0)), ep(x, Endpoint::Tail(0)));
        d.segment(ep(y, Endpoint::Head(0)), ep(y, Endpoint::Tail(0)));
        let got = eval_topological(&d).unwrap().closed().unwrap();
        let single = |u: &UnitaryOp<f64>| eval_topological(&circle(u.clone()).unwrap()).unwrap().closed().unwrap();
        prop_assert!((got - single(&a) * single(&b)).norm() <= 1e-12);
    }

    #[test]
    fn injection_is_uniform_over_bitstrings(bits in prop::collection::vec(any::<bool>(), 1..=4)) {
        let n = bits.len();
        let d = 1usize << n;
        let amps = CVector::from_fn(d * d, |k, _| if k / d == k % d { C::new(1.0 / (d as f64).sqrt(), 0.0) } else { C::new(0.0, 0.0) });
        let state = qvn_core::qkernel::PureState::new(amps, vec![2; 2 * n]).unwrap();
        let tails: Vec<usize> = (n..2 * n).collect();
        for mode in [InjectionMode::Monolithic, InjectionMode::Cascade] {
            if mode == InjectionMode::Cascade && n < 2 {
                continue;
            }
            let [p0, p1] = injection_branches(&state, &tails, &bits, mode).unwrap();
            prop_assert!((p1.probability - 1.0 / d as f64).abs() <= 1e-12);
            prop_assert!((p0.probability + p1.probability - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn cascade_matches_monolithic_on_every_basis_state() {
    for n in 2..=6usize {
        let c = toffoli_cascade(n).unwrap();
        for ctl in 0..1usize << n {
            for t in 0..2usize {
                let x = (ctl << n) | t;
                let y = c.apply_bits(x);
                let flip = usize::from(ctl == (1 << n) - 1);
                assert_eq!(y, (ctl << n) | (t ^ flip), "n={n} ctl={ctl:b} t={t}");
            }
        }
    }
}

#[test]
fn injection_frequencies_match_both_branches() {
    let shots = 20_000;
    for n in 1..=4usize {
        let d = 1 << n;
        let mut c = TailedCircuit::program(UnitaryOp::<f64>::identity(d), 2).unwrap();
        c.set_injection(InjectionSpec::all_ones(n)).unwrap();
        let z = gates::pauli_string::<f64>(&"Z".repeat(n)).unwrap();
        c.set_readout(ReadoutSpec::on_heads(Observable::new(z).unwrap(), n))
            .unwrap();
        let (e, _) = Executor::new(&c)
            .unwrap()
            .run(shots, &mut RngStream::new(3, n as u64))
            .unwrap();
        let p = 1.0 / d as f64;
        let sigma = (p * (1.0 - p) / shots as f64).sqrt();
        assert!((e.p1.count as f64 / shots as f64 - p).abs() <= 4.0 * sigma);
        assert!((e.p0.count as f64 / shots as f64 - (1.0 - p)).abs() <= 4.0 * sigma);
    }
}
