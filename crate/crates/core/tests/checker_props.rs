use tiup::checker::{
    build_eddiv, campaign_tautologies, detection_matrix, prepare_corpus, verify_sqed, verify_tiup, Budget,
    Corpus, Method, Outcome,
};
use tiup::compiler::{BranchCond, Instr, InstrSequence, Reg, RegOp};
use tiup::formula::{parse_formula, SeedLibrary, TemplateLibrary};
use tiup::simulator::{run_to_finish, Anomaly, RunConfig, RunOutcome, Simulator};
use tiup::synthesizer::{synthesize, DEFAULT_MAX_INSTANCES};

fn x(i: u8) -> Reg {
    Reg::new(i)
}

fn small_budget() -> Budget {
    Budget {
        samples: 100,
        max_grid_points: 4096,
        ..Budget::default()
    }
}

fn corpus(texts: &[(&str, &str)]) -> Corpus {
    let list: Vec<_> = texts
        .iter()
        .map(|(n, t)| (n.to_string(), parse_formula(t, 32).unwrap()))
        .collect();
    prepare_corpus(&list).unwrap()
}

#[test]
fn duplicate_of_a_single_add() {
    let add = Instr::Op { op: RegOp::Add, rd: x(4), rs1: x(1), rs2: x(2) };
    let p = build_eddiv(&InstrSequence::from_words("add", vec![add.encode()])).unwrap();
    assert_eq!(p.duplicate, vec![Instr::Op { op: RegOp::Add, rd: x(20), rs1: x(17), rs2: x(18) }]);
    assert_eq!(p.checks, vec![(x(4), x(20))]);
    assert!(p.listing().contains("bne x4, x20, error"));
}

#[test]
fn empty_original_has_no_checks() {
    let p = build_eddiv(&InstrSequence::from_words("empty", vec![])).unwrap();
    assert!(p.duplicate.is_empty());
    assert!(p.checks.is_empty());
    assert!(p.words.is_empty());
}

#[test]
fn duplicated_branch_keeps_its_relative_target() {
    let beq = Instr::Branch { cond: BranchCond::Eq, rs1: x(3), rs2: x(0), offset: 20 };
    let p = build_eddiv(&InstrSequence::from_words("br", vec![beq.encode()])).unwrap();
    assert_eq!(p.duplicate, vec![Instr::Branch { cond: BranchCond::Eq, rs1: x(19), rs2: x(16), offset: 20 }]);
}

#[test]
fn verdicts_do_not_depend_on_the_batch() {
    let c = corpus(&[
        ("assoc", "x - y - z == x - (y + z)"),
        ("tri", "(x < y) -> !(y < x)"),
        ("mul", "x * 2 == x + x"),
    ]);
    let budget = small_budget();
    for anomaly in [Anomaly::A11, Anomaly::A18, Anomaly::A13] {
        let together = verify_tiup(&c.tiup, anomaly, &budget);
        for (i, seq) in c.tiup.iter().enumerate() {
            let alone = verify_tiup(std::slice::from_ref(seq), anomaly, &budget);
            assert_eq!(alone.programs[0], together.programs[i], "{anomaly} {}", seq.name);
        }
    }
}

#[test]
fn witnesses_replay() {
    let c = corpus(&[
        ("assoc", "x - y - z == x - (y + z)"),
        ("tri", "(x < y) -> !(y < x)"),
        ("mul", "x * 2 == x + x"),
        ("and_elim", "((x - y - z == x - (y + z)) && (x * 2 == x + x)) -> (x - y - z == x - (y + z))"),
    ]);
    let budget = small_budget();
    for anomaly in [Anomaly::A03 { from: 7, to: 8 }, Anomaly::A11, Anomaly::A15, Anomaly::A18] {
        let report = verify_tiup(&c.tiup, anomaly, &budget);
        assert!(report.detected(), "{anomaly}");
        for (seq, v) in c.tiup.iter().zip(&report.programs) {
            let Some(w) = &v.witness else { continue };
            let run = run_to_finish(seq, &w.sigma, anomaly, RunConfig::default()).unwrap();
            assert_eq!(run.outcome, RunOutcome::Finished);
            assert_eq!((run.finish_reg(), run.result_reg()), (1, 0));
            assert!(w.retired >= 3);
        }
    }
    let report = verify_sqed(&c.sqed, Anomaly::A17 { reg: 17 }, &budget);
    for (p, v) in c.sqed.iter().zip(&report.programs) {
        let Some(w) = &v.witness else { continue };
        let sim = Simulator::new(&p.words, Anomaly::A17 { reg: 17 });
        let run = sim.run_inputs(p.initial_registers(&w.sigma), RunConfig::default());
        assert_eq!(p.mismatches(&run.regs), w.mismatches);
        assert!(!w.mismatches.is_empty());
    }
}

#[test]
fn register_redirection_breaks_self_consistency() {
    let c = corpus(&[("assoc", "x - y - z == x - (y + z)")]);
    let r = verify_sqed(&c.sqed, Anomaly::A03 { from: 7, to: 8 }, &small_budget());
    assert_eq!(r.outcome, Outcome::Violated);
}

#[test]
fn empty_anomaly_list_gives_empty_matrix() {
    let c = corpus(&[("refl", "x == x")]);
    let m = detection_matrix(&c, &[], &[Method::Tiup, Method::Sqed], &small_budget());
    assert!(m.rows.is_empty());
}

#[test]
fn matrix_is_deterministic() {
    let inst = synthesize(
        &TemplateLibrary::shipped().templates[..1],
        &SeedLibrary::shipped().seeds[..3],
        DEFAULT_MAX_INSTANCES,
    )
    .unwrap();
    let c = prepare_corpus(&campaign_tautologies(&SeedLibrary::shipped().seeds[..3], &inst)).unwrap();
    let anomalies = [Anomaly::Golden, Anomaly::A06, Anomaly::A18];
    let budget = small_budget();
    let a = detection_matrix(&c, &anomalies, &[Method::Tiup, Method::Sqed], &budget);
    let b = detection_matrix(&c, &anomalies, &[Method::Tiup, Method::Sqed], &budget);
    assert_eq!(a, b);
    let golden = a.row("golden").unwrap();
    assert!(!golden.tiup.as_ref().unwrap().detected());
    assert!(!golden.sqed.as_ref().unwrap().detected());
}
