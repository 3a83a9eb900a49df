use proptest::prelude::*;
use qvn_core::control::{execute, Schedule};
use qvn_core::memory::{AuditOp, GateTag, MemoryUnit, ProgramDescription};
use qvn_core::Error;

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(16)
}

fn memory(copies: usize) -> MemoryUnit<f64> {
    let mut mem = MemoryUnit::new();
    mem.store(
        &ProgramDescription::sequence("h", 1, vec![(GateTag::H, vec![0])]).unwrap(),
        copies,
    )
    .unwrap();
    mem.store(
        &ProgramDescription::sequence("t", 1, vec![(GateTag::T, vec![0])]).unwrap(),
        copies,
    )
    .unwrap();
    mem
}

fn schedule(shots: usize, seed: u64, strategy: &str) -> Schedule {
    Schedule::deserialize(&format!(
        "QVNS1 shots={shots} seed={seed}\n\
         compose a=0 b=1 strategy={strategy} dest=5\n\
         inject target=5 bits=1\n\
         readout target=5 observable=Z\n\
         restore addr=0 copies=1\n"
    ))
    .unwrap()
}

fn strategy() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec![
        "repeat-until-success",
        "correction-table",
        "symmetric-pair",
    ])
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn execution_is_reproducible(seed: u64, shots in 1usize..40, s in strategy()) {
        let sched = schedule(shots, seed, s);
        let copies = 40 * 64;
        let a = execute(&mut memory(copies), &sched).unwrap();
        let b = execute(&mut memory(copies), &sched).unwrap();
        prop_assert_eq!(a.shots, b.shots);
        prop_assert_eq!(a.estimate, b.estimate);
    }

    #[test]
    fn copy_accounting_matches_instructions(seed: u64, shots in 1usize..30) {
        let mut mem = memory(shots);
        let r = execute(&mut mem, &schedule(shots, seed, "correction-table")).unwrap();
        // each shot consumes one copy of 0, 1 and the composed slot 5, then restores slot 0
        prop_assert_eq!(r.inventory.get(&0), Some(&shots));
        prop_assert_eq!(r.inventory.get(&1), Some(&0));
        prop_assert_eq!(r.inventory.get(&5), Some(&0));
        mem.verify_audit().unwrap();
        let count = |op: AuditOp| mem.audit_log().iter().filter(|r| r.op == op).map(|r| r.count).sum::<usize>();
        prop_assert_eq!(count(AuditOp::Fetch), 3 * shots);
        prop_assert_eq!(count(AuditOp::Deposit), shots);
        prop_assert_eq!(count(AuditOp::Restore), shots);
    }

    #[test]
    fn failed_execution_leaves_memory_untouched(seed: u64, shots in 2usize..20) {
        let mut mem = memory(shots - 1);
        let before = mem.inventory();
        let log = mem.audit_log().len();
        let err = execute(&mut mem, &schedule(shots, seed, "correction-table")).unwrap_err();
        let wrapped = matches!(err, Error::Instruction { .. });
        prop_assert!(wrapped);
        prop_assert_eq!(mem.inventory(), before);
        prop_assert_eq!(mem.audit_log().len(), log);
    }
}
