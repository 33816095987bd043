//! Property tests for the environment, values, search and corpus invariants.

use std::collections::HashSet;

use hyperprove::corpus::{generate_corpus, split_corpus, FamilyCounts};
use hyperprove::encoder::Encoder;
use hyperprove::env::{
    apply_tactic, candidate_tactics, enumerate_applicable, parse_term, proves, replay_script,
    step_hyperstate, Hyperstate, Obligation, ProofScript, Tactic, Term, Theorem,
};
use hyperprove::oracle::{shortest_proof, shortest_proof_with, OracleValue, TopN};
use hyperprove::predictor::Predictor;
use hyperprove::search::{SearchConfig, Strategy as SearchStrategy};
use hyperprove::value::{
    bellman_target, hyperstate_steps, hyperstate_value, steps_estimate, ConstValue, ObligationValue,
    ReplayBuffer, Transition, TrueTargetBuffer, ValueModel,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GAMMA: f64 = 0.9;

fn term(vars: Vec<&'static str>) -> impl Strategy<Value = Term> {
    let leaf = if vars.is_empty() {
        Just(Term::Zero).boxed()
    } else {
        prop_oneof![Just(Term::Zero), proptest::sample::select(vars).prop_map(Term::var)].boxed()
    };
    leaf.prop_recursive(4, 16, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Term::succ),
            (inner.clone(), inner).prop_map(|(l, r)| Term::plus(l, r)),
        ]
    })
}

fn statement() -> impl Strategy<Value = Obligation> {
    prop_oneof![Just(vec![]), Just(vec!["n"]), Just(vec!["n", "m"])].prop_flat_map(|binders| {
        (term(binders.clone()), term(binders.clone())).prop_map(move |(l, r)| {
            Obligation::statement(&binders, l, r).expect("terms only use bound names")
        })
    })
}

/// A statement followed by up to `steps` random applicable tactics, which
/// reaches obligations with introduced variables and hypotheses.
fn walked(ob: Obligation, seed: u64, steps: usize) -> Obligation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cur = ob;
    for _ in 0..steps {
        let moves = enumerate_applicable(&cur);
        if moves.is_empty() {
            break;
        }
        let (_, children) = &moves[rng.gen_range(0..moves.len())];
        match children.first() {
            Some(c) => cur = c.clone(),
            None => break,
        }
    }
    cur
}

fn obligation() -> impl Strategy<Value = Obligation> {
    (statement(), any::<u64>(), 0usize..5).prop_map(|(s, seed, k)| walked(s, seed, k))
}

fn trained_like_predictor() -> Predictor {
    Predictor::random(7)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn term_text_round_trips(t in term(vec!["n", "m"])) {
        prop_assert_eq!(parse_term(&t.to_string()).unwrap(), t);
    }

    #[test]
    fn obligation_text_round_trips(ob in obligation()) {
        let back: Obligation = ob.to_string().parse().unwrap();
        prop_assert_eq!(&back, &ob);
        prop_assert_eq!(back.canonical(), ob.canonical());
    }

    #[test]
    fn equality_matches_canonical_text(a in obligation(), b in obligation()) {
        prop_assert_eq!(a == b, a.canonical() == b.canonical());
    }

    #[test]
    fn tactic_text_round_trips(ob in obligation()) {
        for t in candidate_tactics(&ob) {
            prop_assert_eq!(t.to_string().parse::<Tactic>().unwrap(), t);
        }
    }

    #[test]
    fn tactics_are_deterministic(ob in obligation()) {
        for t in candidate_tactics(&ob) {
            prop_assert_eq!(apply_tactic(&ob, &t), apply_tactic(&ob, &t));
        }
    }

    #[test]
    fn normalization_terminates_at_a_fixed_point(t in term(vec!["n"])) {
        let nf = t.normalize();
        prop_assert_eq!(nf.simpl_step(), None);
        prop_assert_eq!(nf.normalize(), nf);
    }

    #[test]
    fn hyperstate_equality_ignores_order(obs in prop::collection::vec(obligation(), 0..5), seed in any::<u64>()) {
        let mut shuffled = obs.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.gen_range(0..=i));
        }
        prop_assert_eq!(Hyperstate::new(obs.clone()), Hyperstate::new(shuffled));
        if let Some(first) = obs.first() {
            let mut extra = obs.clone();
            extra.push(first.clone());
            prop_assert_ne!(Hyperstate::new(obs), Hyperstate::new(extra));
        }
    }

    #[test]
    fn hyperstate_value_is_the_exact_product(obs in prop::collection::vec(obligation(), 0..6)) {
        let model = ValueModel::new(Encoder::default(), GAMMA, 8, 3).unwrap();
        let h = Hyperstate::new(obs.clone());
        let product = obs.iter().fold(1.0, |acc, o| acc * model.value(o));
        prop_assert_eq!(hyperstate_value(&model, &h), product);
        for o in &obs {
            let v = model.value(o);
            prop_assert!(v > 0.0 && v < 1.0);
        }
        let summed: f64 = obs.iter().map(|o| steps_estimate(model.value(o), GAMMA).unwrap()).sum();
        let whole = steps_estimate(hyperstate_value(&model, &h), GAMMA).unwrap();
        prop_assert!((whole - summed).abs() < 1e-9);
        prop_assert!((hyperstate_steps(&model, &h).unwrap() - summed).abs() < 1e-9);
    }

    #[test]
    fn bellman_targets_are_bounded_by_gamma(ob in obligation(), width in 1usize..7) {
        let model = ValueModel::new(Encoder::default(), GAMMA, 8, 4).unwrap();
        let target = bellman_target(&ob, &model, &trained_like_predictor(), width);
        prop_assert!((0.0..=GAMMA).contains(&target));
    }

    #[test]
    fn encoding_dimension_is_constant(a in obligation(), b in obligation()) {
        let e = Encoder::default();
        prop_assert_eq!(e.encode(&a).vector.len(), e.dim());
        prop_assert_eq!(e.encode(&b).vector.len(), e.dim());
        prop_assert_eq!(e.encode(&a), e.encode(&a));
    }

    #[test]
    fn top_n_is_a_truncated_distribution(ob in obligation(), n in 0usize..8, seed in 0u64..20) {
        let p = Predictor::random(seed);
        let preds = p.predict_top_n(&ob, n);
        prop_assert!(preds.len() <= n);
        prop_assert!(preds.windows(2).all(|w| w[0].probability >= w[1].probability));
        prop_assert!(preds.iter().all(|x| (0.0..=1.0).contains(&x.probability)));
        prop_assert!(preds.iter().map(|x| x.probability).sum::<f64>() <= 1.0 + 1e-12);
        let total: f64 = p.distribution(&ob).iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert_eq!(preds, p.predict_top_n(&ob, n));
    }

    #[test]
    fn replay_buffer_is_bounded(capacity in 1usize..20, pushes in 0usize..60) {
        let ob: Obligation = "|- Zero = Zero".parse().unwrap();
        let mut buf = ReplayBuffer::new(capacity);
        for _ in 0..pushes {
            buf.push(Transition::step(ob.clone(), Tactic::Reflexivity, Vec::new()));
            prop_assert!(buf.len() <= capacity);
        }
        prop_assert_eq!(buf.len(), pushes.min(capacity));
    }

    #[test]
    fn true_targets_never_increase(lengths in prop::collection::vec(1usize..20, 1..30)) {
        let ob: Obligation = "|- Zero = Zero".parse().unwrap();
        let mut buf = TrueTargetBuffer::new();
        let mut best = usize::MAX;
        for l in lengths {
            buf.update(&ob, l);
            best = best.min(l);
            prop_assert_eq!(buf.get(&ob), Some(best));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn search_results_validate(seed in 0u64..1000) {
        let entries = generate_corpus(seed, &FamilyCounts { ground: 2, shifted: 2, schema: 1 }).0;
        let p = Predictor::random(seed);
        let v = ConstValue { gamma: GAMMA, f: |_: &Obligation| 0.5 };
        for e in &entries {
            for s in SearchStrategy::ALL {
                let r = s.run(&e.theorem, &v, &p, &SearchConfig::default(), 10);
                if let Some(script) = &r.script {
                    prop_assert!(proves(&e.theorem.statement, script));
                    prop_assert_eq!(r.proof_length, Some(script.len()));
                }
            }
        }
    }

    #[test]
    fn budget_never_undoes_a_proof(seed in 0u64..1000, small in 1usize..30, extra in 0usize..60) {
        let entries = generate_corpus(seed, &FamilyCounts { ground: 2, shifted: 2, schema: 1 }).0;
        let p = Predictor::random(seed);
        let v = ConstValue { gamma: GAMMA, f: |o: &Obligation| 0.9f64.powi(o.goal().size() as i32) };
        for e in &entries {
            for s in SearchStrategy::ALL {
                let lo = SearchConfig { budget: small, ..SearchConfig::default() };
                let hi = SearchConfig { budget: small + extra, ..SearchConfig::default() };
                let a = s.run(&e.theorem, &v, &p, &lo, 10);
                let b = s.run(&e.theorem, &v, &p, &hi, 10);
                prop_assert!(!a.proved() || b.proved(), "{} lost a proof at budget {}", s.name(), small + extra);
            }
        }
    }

    #[test]
    fn corpus_generation_is_reproducible_and_valid(seed in 0u64..1000) {
        let counts = FamilyCounts { ground: 3, shifted: 3, schema: 2 };
        let (a, _) = generate_corpus(seed, &counts);
        let (b, _) = generate_corpus(seed, &counts);
        prop_assert_eq!(&a, &b);
        let mut ids = HashSet::new();
        for e in &a {
            prop_assert!(ids.insert(e.theorem.id.clone()));
            let trace = replay_script(&e.theorem, &e.proof).unwrap();
            prop_assert!(trace.is_valid());
            prop_assert_eq!(e.proof_length, e.proof.len());
            for s in &trace.steps {
                prop_assert_eq!(step_hyperstate(&s.before, &s.tactic).unwrap(), s.after.clone());
            }
        }
    }

    #[test]
    fn splits_are_disjoint_and_pure(seed in 0u64..1000, ratio in 0.0f64..=1.0) {
        let (entries, _) = generate_corpus(3, &FamilyCounts { ground: 6, shifted: 6, schema: 3 });
        let split = split_corpus(&entries, seed, ratio);
        prop_assert_eq!(&split, &split_corpus(&entries, seed, ratio));
        let train: HashSet<_> = split.train.iter().map(|e| e.theorem.id.clone()).collect();
        prop_assert!(split.test.iter().all(|e| !train.contains(&e.theorem.id)));
        prop_assert_eq!(split.train.len() + split.test.len(), entries.len());
    }
}

/// Every script over the candidate tactics, up to `len` steps.
fn no_shorter_script(ob: &Obligation, len: usize) -> bool {
    fn go(h: &Hyperstate, left: usize) -> bool {
        if h.is_empty() {
            return false;
        }
        if left == 0 {
            return true;
        }
        let first = h.first().unwrap();
        candidate_tactics(first)
            .iter()
            .filter_map(|t| step_hyperstate(h, t).ok())
            .all(|next| go(&next, left - 1))
    }
    go(&Hyperstate::single(ob.clone()), len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn oracle_proofs_are_minimal(s in statement()) {
        let r = shortest_proof(&Hyperstate::single(s.clone()), 5);
        prop_assert_eq!(r.provable, r.shortest_script.is_some());
        if let (Some(script), Some(len)) = (&r.shortest_script, r.shortest_length) {
            prop_assert!(proves(&s, script));
            prop_assert_eq!(script.len(), len);
            prop_assert!(no_shorter_script(&s, len - 1));
        }
    }

    #[test]
    fn oracle_values_order_by_length(a in statement(), b in statement()) {
        let p = trained_like_predictor();
        let top = TopN { predictor: &p, width: 6 };
        let oracle = OracleValue::new(&top, GAMMA, 6);
        let (la, lb) = (oracle.shortest_length(&a), oracle.shortest_length(&b));
        if let (Some(x), Some(y)) = (la, lb) {
            if x <= y {
                prop_assert!(oracle.value(&a) >= oracle.value(&b));
            }
        }
        let restricted = shortest_proof_with(&Hyperstate::single(a.clone()), 6, &top);
        prop_assert_eq!(restricted.shortest_length, la);
    }
}

#[test]
fn empty_hyperstate_is_worth_one() {
    let v = ConstValue { gamma: GAMMA, f: |_: &Obligation| 0.3 };
    assert_eq!(hyperstate_value(&v, &Hyperstate::default()), 1.0);
    assert_eq!(hyperstate_steps(&v, &Hyperstate::default()).unwrap(), 0.0);
}

#[test]
fn worked_add_zero_proof_replays() {
    let thm = Theorem::new("add_0_r", "forall n, |- Plus(Var(n),Zero) = Var(n)".parse().unwrap());
    let script: ProofScript = "intros; induction n; simpl; reflexivity; simpl; rewrite IH_n; reflexivity"
        .parse()
        .unwrap();
    assert!(replay_script(&thm, &script).unwrap().is_valid());
    assert!(no_shorter_script(&thm.statement, 6));
}
